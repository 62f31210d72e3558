#include "gridloop/eval.hpp"

#include "gridloop/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gridloop {

ConfusionCounts confusion(std::span<const int> labels, std::span<const int> decisions) {
  if (labels.size() != decisions.size())
    throw Error("confusion: " + std::to_string(labels.size()) + " labels but " + std::to_string(decisions.size()) +
                " decisions");
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool truth = labels[i] != 0;
    const bool flagged = decisions[i] != 0;
    if (truth && flagged) ++c.tp;
    else if (truth) ++c.fn;
    else if (flagged) ++c.fp;
    else ++c.tn;
  }
  return c;
}

Metrics metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw Error("metrics need at least one evaluated step");
  auto ratio = [](std::size_t num, std::size_t den, double& out, bool& defined) {
    defined = den > 0;
    if (defined) out = static_cast<double>(num) / static_cast<double>(den);
  };
  Metrics m;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  ratio(c.tp, c.tp + c.fp, m.precision, m.precision_defined);
  ratio(c.tp, c.tp + c.fn, m.recall, m.recall_defined);
  ratio(c.fp, c.fp + c.tn, m.fpr, m.fpr_defined);
  return m;
}

double trapezoid_auc(std::span<const RocPoint> points) {
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i)
    area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) * 0.5;
  return area;
}

RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error("roc: scores and labels differ in length");
  std::size_t positives = 0;
  for (int y : labels) positives += y != 0 ? 1 : 0;
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) throw Error("roc: both classes are required");
  for (double s : scores)
    if (std::isnan(s)) throw Error("roc: score is NaN");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve roc;
  roc.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == threshold; ++i) (labels[order[i]] != 0 ? tp : fp) += 1;
    roc.points.push_back({threshold, static_cast<double>(fp) / static_cast<double>(negatives),
                          static_cast<double>(tp) / static_cast<double>(positives)});
  }
  roc.auc = trapezoid_auc(roc.points);
  return roc;
}

RocCurve roc_from_points(std::vector<RocPoint> points) {
  for (const auto& p : points)
    if (!(p.fpr >= 0.0 && p.fpr <= 1.0 && p.tpr >= 0.0 && p.tpr <= 1.0)) throw Error("roc point outside the unit square");
  std::stable_sort(points.begin(), points.end(), [](const RocPoint& a, const RocPoint& b) {
    if (a.fpr != b.fpr) return a.fpr < b.fpr;
    return a.tpr < b.tpr;
  });
  if (points.empty() || points.front().fpr != 0.0 || points.front().tpr != 0.0)
    points.insert(points.begin(), {std::numeric_limits<double>::infinity(), 0.0, 0.0});
  if (points.back().fpr != 1.0 || points.back().tpr != 1.0)
    points.push_back({-std::numeric_limits<double>::infinity(), 1.0, 1.0});
  RocCurve roc;
  roc.points = std::move(points);
  roc.auc = trapezoid_auc(roc.points);
  return roc;
}

double distance_to_corner(const RocPoint& p) { return std::hypot(p.fpr, 1.0 - p.tpr); }

RocPoint best_point(const RocCurve& roc) {
  if (roc.points.empty()) throw Error("best threshold of an empty ROC curve");
  constexpr double tie = 1e-12;
  RocPoint best = roc.points.front();
  double best_d = distance_to_corner(best);
  for (const auto& p : roc.points) {
    const double d = distance_to_corner(p);
    bool better = d < best_d - tie;
    if (!better && std::fabs(d - best_d) <= tie)
      better = p.tpr > best.tpr || (p.tpr == best.tpr && p.threshold < best.threshold);
    if (better) {
      best = p;
      best_d = d;
    }
  }
  return best;
}

double best_threshold(const RocCurve& roc) { return best_point(roc).threshold; }

} // namespace gridloop
