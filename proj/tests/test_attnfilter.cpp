#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "uois/attnfilter.hpp"
#include "uois/error.hpp"

using namespace uois;

namespace {

ProposalSet random_masks(std::mt19937_64& rng, int h, int w, int n) {
  std::uniform_int_distribution<int> ys(0, h - 1), xs(0, w - 1);
  ProposalSet s;
  for (int i = 0; i < n; ++i) {
    BinaryMask m(h, w);
    int y0 = ys(rng), y1 = ys(rng), x0 = xs(rng), x1 = xs(rng);
    m.fill_rect(std::min(x0, x1), std::min(y0, y1), std::max(x0, x1), std::max(y0, y1));
    s.add(m, 0.5);
  }
  return s;
}

}  // namespace

TEST_CASE("entropy of uniform, one-hot and hand rows") {
  PatchGrid grid{2, 3};
  AttentionStack a(3, grid,
                   {1, 1, 1, 1, 1, 1,  //
                    0, 0, 5, 0, 0, 0,  //
                    2, 1, 1, 0, 0, 0});
  auto e = head_entropy(a);
  CHECK(e[0] == doctest::Approx(std::log2(6.0)).epsilon(1e-12));
  CHECK(e[1] == 0.0);
  CHECK(e[2] == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("all-zero head is rejected") {
  AttentionStack a(2, {1, 2}, {1, 1, 0, 0});
  CHECK_THROWS_AS(head_entropy(a), InvalidInput);
}

TEST_CASE("attention stack validation") {
  CHECK_THROWS_AS(AttentionStack(2, {1, 2}, {1, 1, 1}), InvalidInput);
  CHECK_THROWS_AS(AttentionStack(1, {1, 2}, {1, -1}), InvalidInput);
  CHECK_THROWS_AS(AttentionStack(1, {1, 2}, {1, NAN}), InvalidInput);
}

TEST_CASE("head weights") {
  std::vector<double> equal(6, 3.2);
  auto w = head_weights(equal);
  CHECK_FALSE(w.degenerate);
  for (double v : w.weights) CHECK(std::abs(v - std::log(6.0)) <= 1e-9);

  auto hand = head_weights(std::vector<double>{1, 1, 2});
  CHECK(std::abs(hand.weights[0] - std::log(4.0)) <= 1e-12);
  CHECK(std::abs(hand.weights[1] - std::log(4.0)) <= 1e-12);
  CHECK(std::abs(hand.weights[2] - std::log(2.0)) <= 1e-12);

  auto single = head_weights(std::vector<double>{4.0});
  CHECK(single.degenerate);
  CHECK(single.weights == std::vector<double>{0.0});
  CHECK(single.effective() == std::vector<double>{1.0});

  auto zero = head_weights(std::vector<double>{0.0, 1.0});
  CHECK(std::isfinite(zero.weights[0]));
  CHECK(zero.weights[0] > zero.weights[1]);
  CHECK(zero.weights[1] == 0.0);
}

TEST_CASE("background patch is the weighted argmin") {
  AttentionStack a(2, {1, 4}, {0.3, 0.0, 0.2, 0.5,  //
                               0.1, 0.0, 0.4, 0.2});
  CHECK(background_patch_index(a, uniform_weights(2)) == 1);

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    AttentionStack r = oracle::random_attention(rng, 2, {2, 2});
    WeightVector w{{unit(rng) * 3, unit(rng) * 3}, false};
    std::size_t best = 0;
    double best_value = INFINITY;
    for (std::size_t p = 0; p < 4; ++p) {
      double v = w.weights[0] * r.at(0, p) + w.weights[1] * r.at(1, p);
      if (v < best_value) {
        best_value = v;
        best = p;
      }
    }
    CHECK(background_patch_index(r, w) == best);
  }
}

TEST_CASE("ties go to the lowest patch index") {
  AttentionStack a(1, {1, 3}, {0.5, 0.1, 0.1});
  CHECK(background_patch_index(a, uniform_weights(1)) == 1);
}

TEST_CASE("similarity special cases") {
  PatchGrid grid{1, 3};
  FeatureStack same(1, grid, 2, {1, 2, 1, 2, 1, 2});
  auto s = similarity_map(same, uniform_weights(1), 0);
  for (double v : s.values()) CHECK(v == doctest::Approx(1.0));

  FeatureStack ortho(1, grid, 2, {1, 0, 0, 3, 0, 0});
  auto o = similarity_map(ortho, uniform_weights(1), 0);
  CHECK(o.at(std::size_t{0}) == 1.0);
  CHECK(o.at(std::size_t{1}) == 0.0);
  CHECK(o.at(std::size_t{2}) == 0.0);  // zero-norm row

  auto from_zero = similarity_map(ortho, uniform_weights(1), 2);
  for (double v : from_zero.values()) CHECK(v == 0.0);
}

TEST_CASE("similarity matches the double-loop oracle on small stacks") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unit(0.1, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    FeatureStack f = oracle::random_features(rng, 2, {2, 3}, 3);
    std::vector<double> w{unit(rng), unit(rng)};
    std::size_t l = trial % 6;
    auto expected = oracle::naive_similarity(f, w, l);
    auto got = similarity_map(f, {w, false}, l);
    for (std::size_t p = 0; p < 6; ++p) CHECK(std::abs(got.at(p) - expected[p]) <= 1e-9);
  }
}

TEST_CASE("similarity matches the oracle at full size") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> unit(0.1, 2.0);
  FeatureStack f = oracle::random_features(rng, 12, {32, 32}, 64);
  std::vector<double> w(12);
  for (double& v : w) v = unit(rng);
  auto expected = oracle::naive_similarity(f, w, 517);
  auto got = similarity_map(f, {w, false}, 517);
  double worst = 0;
  for (std::size_t p = 0; p < expected.size(); ++p) worst = std::max(worst, std::abs(got.at(p) - expected[p]));
  CHECK(worst <= 1e-6);
}

TEST_CASE("mask scores") {
  SimilarityMap map({2, 2}, {1.0, 1.0, 0.0, 0.0});
  ProposalSet s;
  BinaryMask top(4, 4), half(4, 4);
  top.fill_rect(0, 0, 3, 1);
  half.fill_rect(0, 1, 0, 2);
  s.add(top);
  s.add(half);
  s.add(BinaryMask(4, 4));
  auto scores = score_masks(s, map);
  CHECK(scores[0] == 1.0);
  CHECK(scores[1] == doctest::Approx(0.5));
  CHECK(scores[2] == 0.0);

  // Non-divisible grid: pixel (y, x) reads patch (y * rows / H, x * cols / W).
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int h = 7 + trial % 5, w = 9 + trial % 3;
    PatchGrid grid{3, 4};
    std::vector<double> values(grid.patches());
    for (double& v : values) v = unit(rng);
    SimilarityMap m(grid, values);
    ProposalSet masks = random_masks(rng, h, w, 4);
    auto got = score_masks(masks, m);
    for (std::size_t i = 0; i < masks.size(); ++i) {
      double sum = 0;
      long n = 0;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          if (masks[i].mask.test(y, x)) {
            sum += values[(y * grid.rows / h) * grid.cols + x * grid.cols / w];
            ++n;
          }
      CHECK(std::abs(got[i] - sum / n) <= 1e-9);
    }
  }
}

TEST_CASE("background filter keeps scores at or below tau") {
  ProposalSet s;
  for (int i = 0; i < 3; ++i) s.add(BinaryMask(2, 2), 0.1 * (i + 1));
  std::vector<double> scores{0.2, 0.47, 0.48};
  auto kept = filter_background(s, scores, 0.47);
  REQUIRE(kept.size() == 2);
  CHECK(kept[1].score == doctest::Approx(0.2));
  CHECK(filter_background(s, scores, 0.0).empty());
  CHECK_THROWS_AS(filter_background(s, std::vector<double>{0.1}, 0.5), InvalidInput);
}

TEST_CASE("scaling the head weights changes nothing downstream") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  std::uniform_int_distribution<int> heads(2, 8), dims(1, 6);
  for (int trial = 0; trial < 100; ++trial) {
    int n_heads = heads(rng);
    PatchGrid grid{3, 5};
    AttentionStack a = oracle::random_attention(rng, n_heads, grid);
    FeatureStack f = oracle::random_features(rng, n_heads, grid, dims(rng));
    WeightVector w = head_weights(head_entropy(a));
    WeightVector scaled = w;
    double c = scale(rng);
    for (double& v : scaled.weights) v *= c;

    std::size_t l = background_patch_index(a, w);
    CHECK(background_patch_index(a, scaled) == l);
    auto s1 = similarity_map(f, w, l);
    auto s2 = similarity_map(f, scaled, l);
    for (std::size_t p = 0; p < grid.patches(); ++p) CHECK(std::abs(s1.at(p) - s2.at(p)) <= 1e-6);
    ProposalSet masks = random_masks(rng, 12, 20, 5);
    auto sc1 = score_masks(masks, s1);
    auto sc2 = score_masks(masks, s2);
    for (std::size_t i = 0; i < sc1.size(); ++i) CHECK(std::abs(sc1[i] - sc2[i]) <= 1e-6);
    CHECK(filter_background(masks, sc1, 0.3) == filter_background(masks, sc2, 0.3));
  }
}

TEST_CASE("permuting heads permutes nothing in the result") {
  std::mt19937_64 rng(41);
  PatchGrid grid{4, 4};
  const int n_heads = 5, dim = 3;
  AttentionStack a = oracle::random_attention(rng, n_heads, grid);
  FeatureStack f = oracle::random_features(rng, n_heads, grid, dim);
  std::vector<int> perm{3, 0, 4, 1, 2};
  std::vector<double> av, fv;
  for (int h : perm) {
    auto row = a.head(h);
    av.insert(av.end(), row.begin(), row.end());
    for (std::size_t p = 0; p < grid.patches(); ++p) {
      auto feat = f.at(h, p);
      fv.insert(fv.end(), feat.begin(), feat.end());
    }
  }
  AttentionStack pa(n_heads, grid, av);
  FeatureStack pf(n_heads, grid, dim, fv);
  WeightVector w = head_weights(head_entropy(a));
  WeightVector pw = head_weights(head_entropy(pa));
  for (int i = 0; i < n_heads; ++i) CHECK(pw.weights[i] == doctest::Approx(w.weights[perm[i]]).epsilon(1e-12));
  std::size_t l = background_patch_index(a, w);
  CHECK(background_patch_index(pa, pw) == l);
  auto s = similarity_map(f, w, l);
  auto ps = similarity_map(pf, pw, l);
  for (std::size_t p = 0; p < grid.patches(); ++p) CHECK(std::abs(s.at(p) - ps.at(p)) <= 1e-12);
}
