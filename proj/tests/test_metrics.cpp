#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "uois/error.hpp"
#include "uois/metrics.hpp"

using namespace uois;

namespace {

BinaryMask block(int h, int w, int x0, int y0, int x1, int y1) {
  BinaryMask m(h, w);
  m.fill_rect(x0, y0, x1, y1);
  return m;
}

ProposalSet set_of(std::initializer_list<BinaryMask> masks) {
  ProposalSet s;
  for (const auto& m : masks) s.add(m);
  return s;
}

// Random instance masks that overlap each other a fair amount.
ProposalSet random_instances(std::mt19937_64& rng, int h, int w, int n) {
  std::uniform_int_distribution<int> ys(0, h - 1), xs(0, w - 1);
  ProposalSet s;
  for (int i = 0; i < n; ++i) {
    int y0 = ys(rng), y1 = ys(rng), x0 = xs(rng), x1 = xs(rng);
    s.add(block(h, w, std::min(x0, x1), std::min(y0, y1), std::max(x0, x1), std::max(y0, y1)));
  }
  return s;
}

std::vector<std::vector<double>> rows_of(const ScoreMatrix& m) {
  std::vector<std::vector<double>> out(m.rows, std::vector<double>(m.cols));
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) out[r][c] = m.at(r, c);
  return out;
}

// Per-pixel reference: boundary = set pixel with an unset or out-of-image
// 8-neighbour; hit = within Euclidean distance tol of the other boundary.
struct PixelBoundary {
  int h, w;
  std::vector<std::uint8_t> b;
};

PixelBoundary boundary_of(const BinaryMask& m) {
  PixelBoundary out{m.height(), m.width(), std::vector<std::uint8_t>(m.pixel_count(), 0)};
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      if (!m.test(y, x)) continue;
      bool edge = false;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          int yy = y + dy, xx = x + dx;
          if (yy < 0 || xx < 0 || yy >= m.height() || xx >= m.width() || !m.test(yy, xx)) edge = true;
        }
      out.b[y * m.width() + x] = edge;
    }
  return out;
}

long hits(const PixelBoundary& a, const PixelBoundary& b, int tol) {
  long n = 0;
  for (int y = 0; y < a.h; ++y)
    for (int x = 0; x < a.w; ++x) {
      if (!a.b[y * a.w + x]) continue;
      bool near = false;
      for (int yy = 0; yy < b.h && !near; ++yy)
        for (int xx = 0; xx < b.w && !near; ++xx)
          if (b.b[yy * b.w + xx] && (yy - y) * (yy - y) + (xx - x) * (xx - x) <= tol * tol) near = true;
      n += near;
    }
  return n;
}

long total(const PixelBoundary& a) { return std::count(a.b.begin(), a.b.end(), 1); }

}  // namespace

TEST_CASE("assignment totals match permutation enumeration") {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<int> size(0, 6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    ScoreMatrix m;
    m.rows = size(rng);
    m.cols = size(rng);
    m.values.resize(m.rows * m.cols);
    for (double& v : m.values) v = unit(rng) < 0.2 ? 0.0 : unit(rng);
    auto assign = max_weight_assignment(m);
    REQUIRE(assign.size() == m.rows);
    double got = 0;
    std::vector<bool> used(m.cols, false);
    for (std::size_t r = 0; r < m.rows; ++r) {
      if (assign[r] < 0) continue;
      REQUIRE(assign[r] < static_cast<int>(m.cols));
      CHECK_FALSE(used[assign[r]]);
      used[assign[r]] = true;
      got += m.at(r, assign[r]);
    }
    CHECK(got == doctest::Approx(oracle::brute_force_assignment(rows_of(m))).epsilon(1e-12));
  }
}

TEST_CASE("hand-set 2x2 assignment") {
  ScoreMatrix m{2, 2, {0.9, 0.8, 0.7, 0.1}};
  // Diagonal gives 1.0, anti-diagonal 1.5.
  auto a = max_weight_assignment(m);
  CHECK(a == std::vector<int>{1, 0});
}

TEST_CASE("instance matching matches permutation enumeration") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> count(0, 6);
  for (int trial = 0; trial < 500; ++trial) {
    ProposalSet preds = random_instances(rng, 10, 12, count(rng));
    ProposalSet gts = random_instances(rng, 10, 12, count(rng));
    Assignment a = match_hungarian(preds, gts);
    CHECK(a.total == doctest::Approx(oracle::brute_force_assignment(rows_of(a.pairwise_f))).epsilon(1e-12));
    for (std::size_t i = 0; i < preds.size(); ++i) {
      int j = a.pred_to_gt[i];
      if (j >= 0) {
        CHECK(a.gt_to_pred[j] == static_cast<int>(i));
        CHECK(a.pairwise_f.at(i, j) > 0.0);
      }
    }
  }
}

TEST_CASE("identity predictions score 1 everywhere") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    ProposalSet gts = random_instances(rng, 12, 12, 1 + trial % 5);
    SceneMetrics m = evaluate_scene("s", gts, gts);
    CHECK(m.overlap == Prf{1, 1, 1});
    CHECK(m.boundary == Prf{1, 1, 1});
    CHECK(m.f_at_75 == 100.0);
  }
}

TEST_CASE("swapping predictions and ground truth swaps P and R") {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> count(0, 6);
  for (int trial = 0; trial < 500; ++trial) {
    ProposalSet a = random_instances(rng, 9, 11, count(rng));
    ProposalSet b = random_instances(rng, 9, 11, count(rng));
    SceneMetrics ab = evaluate_scene("s", a, b);
    SceneMetrics ba = evaluate_scene("s", b, a);
    CHECK(ab.overlap.precision == ba.overlap.recall);
    CHECK(ab.overlap.recall == ba.overlap.precision);
    CHECK(ab.boundary.precision == ba.boundary.recall);
    CHECK(ab.boundary.recall == ba.boundary.precision);
    CHECK(ab.overlap.f == ba.overlap.f);
  }
}

TEST_CASE("toy scene with a half-covered object") {
  BinaryMask a = block(10, 10, 0, 0, 3, 3);
  BinaryMask b = block(10, 10, 5, 5, 8, 8);
  BinaryMask half_b = block(10, 10, 5, 5, 8, 6);
  ProposalSet gts = set_of({a, b});
  ProposalSet preds = set_of({a, half_b});
  SceneMetrics m = evaluate_scene("toy", preds, gts);
  CHECK(m.overlap.precision == doctest::Approx(1.0));
  CHECK(m.overlap.recall == doctest::Approx(24.0 / 32.0));
  CHECK(m.overlap.f == doctest::Approx(2 * 0.75 / 1.75));
  CHECK(m.f_at_75 == doctest::Approx(50.0));  // F(a)=1, F(b)=2*8/24
}

TEST_CASE("degenerate inputs") {
  ProposalSet gts = set_of({block(5, 5, 0, 0, 1, 1)});
  SceneMetrics none = evaluate_scene("s", ProposalSet{}, gts);
  CHECK(none.overlap == Prf{0, 0, 0});
  CHECK(none.boundary == Prf{0, 0, 0});
  CHECK(none.f_at_75 == 0.0);

  SceneMetrics empty = evaluate_scene("s", ProposalSet{}, ProposalSet{});
  CHECK(empty.overlap == Prf{1, 1, 1});
  CHECK(empty.f_at_75 == 100.0);

  SceneMetrics extra = evaluate_scene("s", gts, ProposalSet{});
  CHECK(extra.overlap == Prf{0, 0, 0});

  // A disjoint prediction is not a match.
  SceneMetrics miss = evaluate_scene("s", set_of({block(5, 5, 3, 3, 4, 4)}), gts);
  CHECK(miss.overlap == Prf{0, 0, 0});
  CHECK(f_measure(0, 0) == 0.0);
  CHECK_THROWS_AS(evaluate_scene("s", set_of({block(4, 4, 0, 0, 1, 1)}), gts), InvalidInput);
}

TEST_CASE("f@.75 counts unmatched objects as misses") {
  BinaryMask g1 = block(20, 20, 0, 0, 9, 9);    // 100 px
  BinaryMask g2 = block(20, 20, 10, 10, 19, 19);
  BinaryMask p1 = block(20, 20, 0, 0, 9, 5);    // 60 px inside g1: F = 120/160 = 0.75
  BinaryMask p2 = block(20, 20, 10, 10, 19, 17);  // 80 px inside g2: F = 160/180
  ProposalSet gts = set_of({g1, g2});
  ProposalSet preds = set_of({p1, p2});
  CHECK(evaluate_scene("s", preds, gts).f_at_75 == doctest::Approx(50.0));  // 0.75 is not > 0.75
  CHECK(evaluate_scene("s", set_of({p2}), gts).f_at_75 == doctest::Approx(50.0));
}

TEST_CASE("boundary tolerance on a shifted square") {
  BinaryMask g = block(20, 20, 5, 5, 12, 12);
  BinaryMask p = block(20, 20, 6, 5, 13, 12);
  ProposalSet gts = set_of({g}), preds = set_of({p});
  Assignment a = match_hungarian(preds, gts);
  CHECK(boundary_prf(preds, gts, a, 2) == Prf{1, 1, 1});
  CHECK(boundary_prf(preds, gts, a, 1) == Prf{1, 1, 1});
  Prf strict = boundary_prf(preds, gts, a, 0);
  CHECK(strict.precision < 1.0);
  CHECK(strict.recall < 1.0);
  CHECK(strict.f < 1.0);
}

TEST_CASE("boundary metrics match the per-pixel reference") {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> count(1, 3);
  for (int trial = 0; trial < 150; ++trial) {
    ProposalSet preds = random_instances(rng, 9, 10, count(rng));
    ProposalSet gts = random_instances(rng, 9, 10, count(rng));
    const int tol = trial % 4;
    Assignment a = match_hungarian(preds, gts);
    long ph = 0, pt = 0, gh = 0, gt = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      auto pb = boundary_of(preds[i].mask);
      pt += total(pb);
      if (a.pred_to_gt[i] >= 0) ph += hits(pb, boundary_of(gts[a.pred_to_gt[i]].mask), tol);
    }
    for (std::size_t j = 0; j < gts.size(); ++j) {
      auto gb = boundary_of(gts[j].mask);
      gt += total(gb);
      if (a.gt_to_pred[j] >= 0) gh += hits(gb, boundary_of(preds[a.gt_to_pred[j]].mask), tol);
    }
    Prf got = boundary_prf(preds, gts, a, tol);
    CHECK(got.precision == doctest::Approx(double(ph) / pt).epsilon(1e-15));
    CHECK(got.recall == doctest::Approx(double(gh) / gt).epsilon(1e-15));
  }
}

TEST_CASE("mask boundary treats the image border as background") {
  BinaryMask full = block(4, 4, 0, 0, 3, 3);
  CHECK(mask_boundary(full).area() == 12);
  BinaryMask inner = block(5, 5, 1, 1, 3, 3);
  CHECK(mask_boundary(inner).area() == 8);
  BinaryMask dot(5, 5);
  dot.set(2, 2);
  CHECK(dilate_disk(dot, 1).area() == 5);
  CHECK(dilate_disk(dot, 2).area() == 13);
  CHECK(dilate_disk(dot, 0) == dot);
}

TEST_CASE("aggregate is a per-scene mean with summed counts") {
  SceneMetrics a{"a", {1, 0.5, 2.0 / 3}, {0.5, 0.5, 0.5}, 100, 2, 3};
  SceneMetrics b{"b", {0, 0, 0}, {1, 1, 1}, 0, 1, 1};
  EvalReport r = aggregate({a, b});
  CHECK(r.overlap.precision == doctest::Approx(0.5));
  CHECK(r.overlap.recall == doctest::Approx(0.25));
  CHECK(r.overlap.f == doctest::Approx(1.0 / 3));
  CHECK(r.boundary.f == doctest::Approx(0.75));
  CHECK(r.f_at_75 == doctest::Approx(50));
  CHECK(r.predictions == 3);
  CHECK(r.objects == 4);
  CHECK(report_from_json(report_to_json(r)) == r);
  EvalReport empty = aggregate({});
  CHECK(empty.scenes.empty());
}

TEST_CASE("report table has the usual column order") {
  SceneMetrics a{"a", {0.925, 0.861, 0.892}, {0.5, 0.25, 1.0 / 3}, 75, 2, 3};
  std::string table = format_report_table(aggregate({a}));
  CHECK(table.find("92.5") != std::string::npos);
  CHECK(table.find("92.5") < table.find("86.1"));
  CHECK(table.find("86.1") < table.find("89.2"));
  CHECK(table.find("89.2") < table.find("50.0"));
  CHECK(table.find("33.3") < table.find("75.0"));
}
