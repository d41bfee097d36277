#include "uois/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "uois/error.hpp"

namespace uois {

using nlohmann::json;

namespace {

// Shortest augmenting path Hungarian algorithm minimizing cost on an n x m
// matrix with n <= m. Returns the column for every row.
std::vector<int> min_cost_assignment(const std::vector<double>& cost, std::size_t n, std::size_t m) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) {
      row_to_col[p[j] - 1] = static_cast<int>(j - 1);
    }
  }
  return row_to_col;
}

double safe_ratio(double num, double den, bool both_empty) {
  if (den > 0.0) return num / den;
  return both_empty ? 1.0 : 0.0;
}

}  // namespace

std::vector<int> max_weight_assignment(const ScoreMatrix& scores) {
  if (scores.values.size() != scores.rows * scores.cols) {
    throw InvalidInput("score matrix size mismatch");
  }
  if (scores.rows == 0 || scores.cols == 0) {
    return std::vector<int>(scores.rows, -1);
  }
  if (scores.rows <= scores.cols) {
    std::vector<double> cost(scores.values.size());
    for (std::size_t i = 0; i < cost.size(); ++i) cost[i] = -scores.values[i];
    return min_cost_assignment(cost, scores.rows, scores.cols);
  }
  std::vector<double> cost(scores.values.size());
  for (std::size_t r = 0; r < scores.rows; ++r) {
    for (std::size_t c = 0; c < scores.cols; ++c) {
      cost[c * scores.rows + r] = -scores.at(r, c);
    }
  }
  const std::vector<int> col_to_row = min_cost_assignment(cost, scores.cols, scores.rows);
  std::vector<int> row_to_col(scores.rows, -1);
  for (std::size_t c = 0; c < col_to_row.size(); ++c) {
    if (col_to_row[c] >= 0) row_to_col[col_to_row[c]] = static_cast<int>(c);
  }
  return row_to_col;
}

ScoreMatrix pairwise_overlap_f(const ProposalSet& preds, const ProposalSet& gts) {
  ScoreMatrix m{preds.size(), gts.size(), std::vector<double>(preds.size() * gts.size(), 0.0)};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (std::size_t j = 0; j < gts.size(); ++j) {
      const double inter = static_cast<double>(intersection_area(preds[i].mask, gts[j].mask));
      const double total = static_cast<double>(preds[i].mask.area() + gts[j].mask.area());
      m.values[i * gts.size() + j] = total > 0.0 ? 2.0 * inter / total : 0.0;
    }
  }
  return m;
}

namespace {

// Content order on masks: area, then packed words.
bool mask_less(const BinaryMask& a, const BinaryMask& b) {
  if (a.area() != b.area()) return a.area() < b.area();
  const auto wa = a.words();
  const auto wb = b.words();
  return std::lexicographical_compare(wa.begin(), wa.end(), wb.begin(), wb.end());
}

std::vector<std::size_t> content_order(const ProposalSet& set) {
  std::vector<std::size_t> order(set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return mask_less(set[a].mask, set[b].mask); });
  return order;
}

// True when `a` sorts before `b` as a whole set under the content order.
bool set_less(const ProposalSet& a, const std::vector<std::size_t>& order_a, const ProposalSet& b,
              const std::vector<std::size_t>& order_b) {
  if (a.size() != b.size()) return a.size() < b.size();
  for (std::size_t k = 0; k < a.size(); ++k) {
    const BinaryMask& ma = a[order_a[k]].mask;
    const BinaryMask& mb = b[order_b[k]].mask;
    if (mask_less(ma, mb)) return true;
    if (mask_less(mb, ma)) return false;
  }
  return false;
}

}  // namespace

// The solver runs on a matrix whose row/column order and orientation depend
// only on mask content. Swapping preds and gts therefore reproduces the same
// pairs even when several assignments tie for the optimum.
Assignment match_hungarian(const ProposalSet& preds, const ProposalSet& gts) {
  Assignment a;
  a.pairwise_f = pairwise_overlap_f(preds, gts);
  a.pred_to_gt.assign(preds.size(), -1);
  a.gt_to_pred.assign(gts.size(), -1);
  if (preds.empty() || gts.empty()) return a;

  const std::vector<std::size_t> pred_order = content_order(preds);
  const std::vector<std::size_t> gt_order = content_order(gts);
  const bool preds_as_rows = !set_less(gts, gt_order, preds, pred_order);
  const auto& row_order = preds_as_rows ? pred_order : gt_order;
  const auto& col_order = preds_as_rows ? gt_order : pred_order;

  ScoreMatrix canonical{row_order.size(), col_order.size(),
                        std::vector<double>(row_order.size() * col_order.size())};
  for (std::size_t r = 0; r < row_order.size(); ++r) {
    for (std::size_t c = 0; c < col_order.size(); ++c) {
      canonical.values[r * col_order.size() + c] =
          preds_as_rows ? a.pairwise_f.at(row_order[r], col_order[c])
                        : a.pairwise_f.at(col_order[c], row_order[r]);
    }
  }
  const std::vector<int> rows = max_weight_assignment(canonical);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0) continue;
    const std::size_t c = static_cast<std::size_t>(rows[r]);
    const std::size_t i = preds_as_rows ? row_order[r] : col_order[c];
    const std::size_t j = preds_as_rows ? col_order[c] : row_order[r];
    if (a.pairwise_f.at(i, j) <= 0.0) continue;
    a.pred_to_gt[i] = static_cast<int>(j);
    a.gt_to_pred[j] = static_cast<int>(i);
  }
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (a.pred_to_gt[i] >= 0) a.total += a.pairwise_f.at(i, static_cast<std::size_t>(a.pred_to_gt[i]));
  }
  return a;
}

double f_measure(double precision, double recall) {
  const double sum = precision + recall;
  return sum > 0.0 ? 2.0 * precision * recall / sum : 0.0;
}

Prf overlap_prf(const ProposalSet& preds, const ProposalSet& gts, const Assignment& assignment) {
  double matched = 0.0;
  double pred_total = 0.0;
  double gt_total = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    pred_total += static_cast<double>(preds[i].mask.area());
    const int j = assignment.pred_to_gt.at(i);
    if (j >= 0) {
      matched += static_cast<double>(intersection_area(preds[i].mask, gts[static_cast<std::size_t>(j)].mask));
    }
  }
  for (const ScoredMask& g : gts) gt_total += static_cast<double>(g.mask.area());
  const bool both_empty = preds.empty() && gts.empty();
  Prf out;
  out.precision = safe_ratio(matched, pred_total, both_empty);
  out.recall = safe_ratio(matched, gt_total, both_empty);
  out.f = both_empty ? 1.0 : f_measure(out.precision, out.recall);
  return out;
}

BinaryMask mask_boundary(const BinaryMask& mask) {
  BinaryMask boundary(mask.height(), mask.width());
  const int h = mask.height();
  const int w = mask.width();
  mask.for_each_pixel([&](int y, int x) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int ny = y + dy;
        const int nx = x + dx;
        if (ny < 0 || ny >= h || nx < 0 || nx >= w || !mask.test(ny, nx)) {
          boundary.set(y, x);
          return;
        }
      }
    }
  });
  return boundary;
}

BinaryMask dilate_disk(const BinaryMask& mask, int radius) {
  if (radius < 0) {
    throw InvalidInput("dilation radius must be non-negative");
  }
  if (radius == 0) {
    return mask;
  }
  std::vector<std::pair<int, int>> offsets;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy <= radius * radius) offsets.emplace_back(dy, dx);
    }
  }
  BinaryMask out(mask.height(), mask.width());
  mask.for_each_pixel([&](int y, int x) {
    for (const auto& [dy, dx] : offsets) {
      const int ny = y + dy;
      const int nx = x + dx;
      if (ny >= 0 && ny < mask.height() && nx >= 0 && nx < mask.width()) out.set(ny, nx);
    }
  });
  return out;
}

Prf boundary_prf(const ProposalSet& preds, const ProposalSet& gts, const Assignment& assignment,
                 int tolerance) {
  std::vector<BinaryMask> pred_b, gt_b;
  pred_b.reserve(preds.size());
  gt_b.reserve(gts.size());
  for (const ScoredMask& p : preds) pred_b.push_back(mask_boundary(p.mask));
  for (const ScoredMask& g : gts) gt_b.push_back(mask_boundary(g.mask));

  double pred_hits = 0.0, pred_total = 0.0, gt_hits = 0.0, gt_total = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    pred_total += static_cast<double>(pred_b[i].area());
    const int j = assignment.pred_to_gt.at(i);
    if (j >= 0) {
      pred_hits += static_cast<double>(
          intersection_area(pred_b[i], dilate_disk(gt_b[static_cast<std::size_t>(j)], tolerance)));
    }
  }
  for (std::size_t j = 0; j < gts.size(); ++j) {
    gt_total += static_cast<double>(gt_b[j].area());
    const int i = assignment.gt_to_pred.at(j);
    if (i >= 0) {
      gt_hits += static_cast<double>(
          intersection_area(gt_b[j], dilate_disk(pred_b[static_cast<std::size_t>(i)], tolerance)));
    }
  }
  const bool both_empty = preds.empty() && gts.empty();
  Prf out;
  out.precision = safe_ratio(pred_hits, pred_total, both_empty);
  out.recall = safe_ratio(gt_hits, gt_total, both_empty);
  out.f = both_empty ? 1.0 : f_measure(out.precision, out.recall);
  return out;
}

double f_at_75(const ProposalSet& preds, const ProposalSet& gts, const Assignment& assignment) {
  if (gts.empty()) {
    return preds.empty() ? 100.0 : 0.0;
  }
  std::size_t detected = 0;
  for (std::size_t j = 0; j < gts.size(); ++j) {
    const int i = assignment.gt_to_pred.at(j);
    if (i >= 0 && assignment.pairwise_f.at(static_cast<std::size_t>(i), j) > 0.75) ++detected;
  }
  return 100.0 * static_cast<double>(detected) / static_cast<double>(gts.size());
}

SceneMetrics evaluate_scene(const std::string& scene_id, const ProposalSet& preds, const ProposalSet& gts,
                            int tolerance) {
  if (!preds.empty() && !gts.empty() &&
      (preds.height() != gts.height() || preds.width() != gts.width())) {
    throw InvalidInput("scene '" + scene_id + "': prediction and ground-truth grids differ");
  }
  const Assignment assignment = match_hungarian(preds, gts);
  SceneMetrics m;
  m.scene_id = scene_id;
  m.overlap = overlap_prf(preds, gts, assignment);
  m.boundary = boundary_prf(preds, gts, assignment, tolerance);
  m.f_at_75 = f_at_75(preds, gts, assignment);
  m.predictions = preds.size();
  m.objects = gts.size();
  return m;
}

EvalReport aggregate(std::vector<SceneMetrics> scenes) {
  EvalReport r;
  r.scenes = std::move(scenes);
  if (r.scenes.empty()) return r;
  for (const SceneMetrics& s : r.scenes) {
    r.overlap.precision += s.overlap.precision;
    r.overlap.recall += s.overlap.recall;
    r.overlap.f += s.overlap.f;
    r.boundary.precision += s.boundary.precision;
    r.boundary.recall += s.boundary.recall;
    r.boundary.f += s.boundary.f;
    r.f_at_75 += s.f_at_75;
    r.predictions += s.predictions;
    r.objects += s.objects;
  }
  const double n = static_cast<double>(r.scenes.size());
  for (double* v : {&r.overlap.precision, &r.overlap.recall, &r.overlap.f, &r.boundary.precision,
                    &r.boundary.recall, &r.boundary.f, &r.f_at_75}) {
    *v /= n;
  }
  return r;
}

std::string format_report_row(const EvalReport& r) {
  char line[256];
  std::snprintf(line, sizeof(line), "%7.1f %7.1f %7.1f | %7.1f %7.1f %7.1f | %7.1f", 100 * r.overlap.precision,
                100 * r.overlap.recall, 100 * r.overlap.f, 100 * r.boundary.precision, 100 * r.boundary.recall,
                100 * r.boundary.f, r.f_at_75);
  return line;
}

std::string format_report_table(const EvalReport& r) {
  std::ostringstream out;
  out << "             Overlap               |        Boundary           |\n"
      << "      P       R       F |       P       R       F |  F@.75\n"
      << format_report_row(r) << "\n"
      << "scenes: " << r.scenes.size() << "  predictions: " << r.predictions << "  objects: " << r.objects
      << "\n";
  return out.str();
}

namespace {

json prf_json(const Prf& p) { return json{{"precision", p.precision}, {"recall", p.recall}, {"f", p.f}}; }

Prf prf_from(const json& j) {
  return Prf{j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f").get<double>()};
}

}  // namespace

json report_to_json(const EvalReport& r) {
  json scenes = json::array();
  for (const SceneMetrics& s : r.scenes) {
    scenes.push_back({{"scene", s.scene_id},
                      {"overlap", prf_json(s.overlap)},
                      {"boundary", prf_json(s.boundary)},
                      {"f_at_75", s.f_at_75},
                      {"predictions", s.predictions},
                      {"objects", s.objects}});
  }
  return json{{"overlap", prf_json(r.overlap)}, {"boundary", prf_json(r.boundary)},
              {"f_at_75", r.f_at_75},          {"predictions", r.predictions},
              {"objects", r.objects},          {"scenes", std::move(scenes)}};
}

EvalReport report_from_json(const json& j) {
  EvalReport r;
  r.overlap = prf_from(j.at("overlap"));
  r.boundary = prf_from(j.at("boundary"));
  r.f_at_75 = j.at("f_at_75").get<double>();
  r.predictions = j.at("predictions").get<std::size_t>();
  r.objects = j.at("objects").get<std::size_t>();
  for (const json& s : j.at("scenes")) {
    r.scenes.push_back(SceneMetrics{s.at("scene").get<std::string>(), prf_from(s.at("overlap")),
                                    prf_from(s.at("boundary")), s.at("f_at_75").get<double>(),
                                    s.at("predictions").get<std::size_t>(), s.at("objects").get<std::size_t>()});
  }
  return r;
}

}  // namespace uois
