#pragma once

#include "json.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace gridloop {

inline constexpr std::size_t kFeatureLag = 24;

/// Row i holds the `lag` values strictly before position i + lag; its label is labels[i + lag].
struct SupervisedSet {
  Eigen::MatrixXd features;
  std::vector<int> labels;

  std::size_t rows() const noexcept { return labels.size(); }
};

SupervisedSet make_features(std::span<const double> series, std::span<const int> labels, std::size_t lag = kFeatureLag);

enum class ClassifierKind { logistic_regression, gaussian_nb, random_forest };

ClassifierKind parse_classifier_kind(const std::string& name);
/// Detector name used in reports: "logreg", "gnb", "forest".
std::string to_string(ClassifierKind kind);

class Classifier {
public:
  virtual ~Classifier() = default;

  virtual ClassifierKind kind() const noexcept = 0;
  /// Probability of class 1 for one feature row of the training width.
  virtual double predict_score(std::span<const double> row) const = 0;
  virtual nlohmann::json to_json() const = 0;

  std::vector<double> predict_scores(const Eigen::MatrixXd& features) const;
  std::size_t input_width() const noexcept { return width_; }
  /// Indices of the training columns the model uses; constant columns are dropped.
  const std::vector<std::size_t>& columns() const noexcept { return columns_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

protected:
  void check_row(std::span<const double> row) const;
  nlohmann::json base_json() const;
  void load_base_json(const nlohmann::json& j);

  std::size_t width_ = 0;
  std::vector<std::size_t> columns_;
  std::vector<std::string> warnings_;
};

struct LogisticOptions {
  double l2 = 1.0;
  double tolerance = 1e-8;
  std::size_t max_epochs = 1000;
};

/**
 * L2-regularised logistic regression on z-scored features.
 *
 * Minimises (1/n) sum log-loss + (l2 / 2n) |w|^2 (intercept unpenalised),
 * i.e. the same minimiser as an unscaled sum with penalty weight l2, using
 * accelerated gradient descent with step 1/L and adaptive restart.
 */
class LogisticRegression final : public Classifier {
public:
  static LogisticRegression train(const SupervisedSet& set, const LogisticOptions& options = {});
  static LogisticRegression from_json(const nlohmann::json& j);

  ClassifierKind kind() const noexcept override { return ClassifierKind::logistic_regression; }
  double predict_score(std::span<const double> row) const override;
  nlohmann::json to_json() const override;

  /// Linear score on standardised features; predict_score is its sigmoid.
  double decision_function(std::span<const double> row) const;
  const std::vector<double>& weights() const noexcept { return weights_; }
  double bias() const noexcept { return bias_; }
  std::size_t epochs() const noexcept { return epochs_; }
  double final_loss() const noexcept { return loss_; }

private:
  std::vector<double> mean_, scale_, weights_;
  double bias_ = 0.0;
  std::size_t epochs_ = 0;
  double loss_ = 0.0;
};

class GaussianNaiveBayes final : public Classifier {
public:
  static GaussianNaiveBayes train(const SupervisedSet& set, double var_smoothing = 1e-9);
  static GaussianNaiveBayes from_json(const nlohmann::json& j);

  ClassifierKind kind() const noexcept override { return ClassifierKind::gaussian_nb; }
  double predict_score(std::span<const double> row) const override;
  nlohmann::json to_json() const override;

  /// {P(class 0 | row), P(class 1 | row)}.
  std::array<double, 2> posteriors(std::span<const double> row) const;

private:
  std::array<double, 2> log_prior_{};
  std::array<std::vector<double>, 2> mean_, var_;
};

struct ForestOptions {
  std::size_t trees = 100;
  std::size_t max_features = 0; // 0: ceil(sqrt(columns))
  std::size_t min_samples_split = 2;
};

/**
 * Bagged CART forest (Gini). A split on feature f at value v sends rows with
 * x_f <= v left, where v is an observed training value, so fitted trees only
 * depend on the per-feature ordering of the data. Each tree votes 1 when its
 * leaf holds a class-1 majority; the score is the fraction of votes.
 */
class RandomForest final : public Classifier {
public:
  struct Node {
    int feature = -1; // -1 for leaves
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0; // class-1 fraction at the node
  };
  using Tree = std::vector<Node>;

  static RandomForest train(const SupervisedSet& set, std::uint64_t seed, const ForestOptions& options = {});
  static RandomForest from_json(const nlohmann::json& j);

  ClassifierKind kind() const noexcept override { return ClassifierKind::random_forest; }
  double predict_score(std::span<const double> row) const override;
  nlohmann::json to_json() const override;

  const std::vector<Tree>& trees() const noexcept { return trees_; }

private:
  std::vector<Tree> trees_;
};

std::unique_ptr<Classifier> train_classifier(const SupervisedSet& set, ClassifierKind kind, std::uint64_t seed);
std::unique_ptr<Classifier> classifier_from_json(const nlohmann::json& j);

} // namespace gridloop
