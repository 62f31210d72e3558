#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace gridloop {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + tn + fp + fn; }
};

/// Class 1 is "under attack".
ConfusionCounts confusion(std::span<const int> labels, std::span<const int> decisions);

/// Ratios with a zero denominator are NaN and their flag is false.
struct Metrics {
  double accuracy = 0.0;
  double precision = std::numeric_limits<double>::quiet_NaN();
  double recall = std::numeric_limits<double>::quiet_NaN();
  double fpr = std::numeric_limits<double>::quiet_NaN();
  bool precision_defined = false;
  bool recall_defined = false;
  bool fpr_defined = false;
};

Metrics metrics(const ConfusionCounts& c);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points; // fpr non-decreasing, (0,0) first, (1,1) last
  double auc = 0.0;
};

/// Score-based ROC: a row is flagged when score >= threshold. Thresholds are
/// +inf followed by the distinct scores in descending order.
RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels);

/**
 * ROC from operating points of a swept detector. Points are ordered by
 * (fpr, tpr); (0,0) at +inf and (1,1) at -inf are added when missing.
 */
RocCurve roc_from_points(std::vector<RocPoint> points);

/// Trapezoid area under points already ordered by fpr.
double trapezoid_auc(std::span<const RocPoint> points);

double distance_to_corner(const RocPoint& p);

/// Point closest to (0,1); ties go to higher tpr, then to the lower threshold.
RocPoint best_point(const RocCurve& roc);
double best_threshold(const RocCurve& roc);

} // namespace gridloop
