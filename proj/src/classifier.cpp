#include "gridloop/classifier.hpp"

#include "gridloop/error.hpp"
#include "gridloop/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gridloop {

SupervisedSet make_features(std::span<const double> series, std::span<const int> labels, std::size_t lag) {
  if (lag == 0) throw Error("feature lag must be at least 1");
  if (labels.size() != series.size()) throw Error("features: series and labels differ in length");
  if (series.size() <= lag)
    throw Error("series too short: need more than " + std::to_string(lag) + " values for lagged features");
  const std::size_t rows = series.size() - lag;
  SupervisedSet set;
  set.features.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(lag));
  set.labels.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < lag; ++j) set.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = series[r + j];
    const int y = labels[r + lag];
    if (y != 0 && y != 1) throw Error("labels must be 0 or 1");
    set.labels[r] = y;
  }
  return set;
}

ClassifierKind parse_classifier_kind(const std::string& name) {
  if (name == "logreg") return ClassifierKind::logistic_regression;
  if (name == "gnb") return ClassifierKind::gaussian_nb;
  if (name == "forest") return ClassifierKind::random_forest;
  throw Error("unknown classifier '" + name + "'");
}

std::string to_string(ClassifierKind kind) {
  switch (kind) {
  case ClassifierKind::logistic_regression: return "logreg";
  case ClassifierKind::gaussian_nb: return "gnb";
  case ClassifierKind::random_forest: return "forest";
  }
  return "?";
}

std::vector<double> Classifier::predict_scores(const Eigen::MatrixXd& features) const {
  std::vector<double> out(static_cast<std::size_t>(features.rows()));
  std::vector<double> row(static_cast<std::size_t>(features.cols()));
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    for (Eigen::Index c = 0; c < features.cols(); ++c) row[static_cast<std::size_t>(c)] = features(r, c);
    out[static_cast<std::size_t>(r)] = predict_score(row);
  }
  return out;
}

void Classifier::check_row(std::span<const double> row) const {
  if (row.size() != width_)
    throw Error("feature row has " + std::to_string(row.size()) + " values, model expects " + std::to_string(width_));
}

nlohmann::json Classifier::base_json() const {
  return {{"kind", to_string(kind())}, {"width", width_}, {"columns", columns_}};
}

void Classifier::load_base_json(const nlohmann::json& j) {
  width_ = j.at("width").get<std::size_t>();
  columns_ = j.at("columns").get<std::vector<std::size_t>>();
  for (auto c : columns_)
    if (c >= width_) throw Error("model column index out of range");
}

namespace {

struct Prepared {
  std::vector<std::size_t> columns;
  std::vector<std::string> warnings;
  std::size_t positives = 0;
};

Prepared prepare(const SupervisedSet& set) {
  if (set.rows() == 0 || static_cast<std::size_t>(set.features.rows()) != set.rows())
    throw Error("training set is empty or inconsistent");
  Prepared p;
  for (int y : set.labels) {
    if (y != 0 && y != 1) throw Error("labels must be 0 or 1");
    p.positives += static_cast<std::size_t>(y);
  }
  if (p.positives == 0 || p.positives == set.rows()) throw Error("single-class training set: both labels are required");
  for (Eigen::Index c = 0; c < set.features.cols(); ++c) {
    const auto col = set.features.col(c);
    if (col.maxCoeff() == col.minCoeff())
      p.warnings.push_back("feature " + std::to_string(c) + " is constant; dropped");
    else
      p.columns.push_back(static_cast<std::size_t>(c));
  }
  if (p.columns.empty()) throw Error("every feature column is constant");
  return p;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

} // namespace

// ---------------------------------------------------------------------------
// Logistic regression

LogisticRegression LogisticRegression::train(const SupervisedSet& set, const LogisticOptions& options) {
  auto prep = prepare(set);
  LogisticRegression model;
  model.width_ = static_cast<std::size_t>(set.features.cols());
  model.columns_ = prep.columns;
  model.warnings_ = prep.warnings;

  const auto n = static_cast<Eigen::Index>(set.rows());
  const auto m = static_cast<Eigen::Index>(prep.columns.size());
  Eigen::MatrixXd z(n, m + 1);
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto col = set.features.col(static_cast<Eigen::Index>(prep.columns[static_cast<std::size_t>(j)]));
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().mean());
    model.mean_.push_back(mean);
    model.scale_.push_back(sd);
    z.col(j) = (col.array() - mean) / sd;
  }
  z.col(m).setOnes();
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = set.labels[static_cast<std::size_t>(i)];

  const double inv_n = 1.0 / static_cast<double>(n);
  const double ridge = options.l2 * inv_n;
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(m + 1, ridge);
  penalty(m) = 0.0;

  auto loss = [&](const Eigen::VectorXd& w) {
    const Eigen::VectorXd s = z * w;
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) total += softplus(s(i)) - y(i) * s(i);
    return total * inv_n + 0.5 * w.head(m).squaredNorm() * ridge;
  };
  auto gradient = [&](const Eigen::VectorXd& w) {
    Eigen::VectorXd s = z * w;
    for (Eigen::Index i = 0; i < n; ++i) s(i) = sigmoid(s(i)) - y(i);
    return Eigen::VectorXd(z.transpose() * s * inv_n + penalty.cwiseProduct(w));
  };

  const Eigen::MatrixXd gram = z.transpose() * z * inv_n;
  const double lipschitz = 0.25 * Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram).eigenvalues().maxCoeff() + ridge;
  const double step = 1.0 / lipschitz;

  Eigen::VectorXd w = Eigen::VectorXd::Zero(m + 1);
  Eigen::VectorXd look = w;
  double momentum = 1.0;
  double current = loss(w);
  std::size_t epoch = 0;
  while (epoch < options.max_epochs) {
    ++epoch;
    Eigen::VectorXd next = look - step * gradient(look);
    double next_loss = loss(next);
    if (next_loss > current) {
      // restart from a plain gradient step at the last iterate
      momentum = 1.0;
      next = w - step * gradient(w);
      next_loss = loss(next);
    }
    const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    look = next + ((momentum - 1.0) / next_momentum) * (next - w);
    momentum = next_momentum;
    const double change = std::fabs(current - next_loss);
    w = std::move(next);
    current = next_loss;
    if (change < options.tolerance) break;
  }

  model.weights_.assign(w.data(), w.data() + m);
  model.bias_ = w(m);
  model.epochs_ = epoch;
  model.loss_ = current;
  return model;
}

double LogisticRegression::decision_function(std::span<const double> row) const {
  check_row(row);
  double s = bias_;
  for (std::size_t j = 0; j < columns_.size(); ++j) s += weights_[j] * (row[columns_[j]] - mean_[j]) / scale_[j];
  return s;
}

double LogisticRegression::predict_score(std::span<const double> row) const { return sigmoid(decision_function(row)); }

nlohmann::json LogisticRegression::to_json() const {
  auto j = base_json();
  j["mean"] = mean_;
  j["scale"] = scale_;
  j["weights"] = weights_;
  j["bias"] = bias_;
  j["epochs"] = epochs_;
  return j;
}

LogisticRegression LogisticRegression::from_json(const nlohmann::json& j) {
  LogisticRegression m;
  m.load_base_json(j);
  m.mean_ = j.at("mean").get<std::vector<double>>();
  m.scale_ = j.at("scale").get<std::vector<double>>();
  m.weights_ = j.at("weights").get<std::vector<double>>();
  m.bias_ = j.at("bias").get<double>();
  m.epochs_ = j.value("epochs", std::size_t{0});
  if (m.mean_.size() != m.columns_.size() || m.scale_.size() != m.columns_.size() ||
      m.weights_.size() != m.columns_.size())
    throw Error("logistic model arrays do not match its column list");
  return m;
}

// ---------------------------------------------------------------------------
// Gaussian naive Bayes

GaussianNaiveBayes GaussianNaiveBayes::train(const SupervisedSet& set, double var_smoothing) {
  auto prep = prepare(set);
  GaussianNaiveBayes model;
  model.width_ = static_cast<std::size_t>(set.features.cols());
  model.columns_ = prep.columns;
  model.warnings_ = prep.warnings;

  double max_var = 0.0;
  for (auto c : prep.columns) {
    const auto col = set.features.col(static_cast<Eigen::Index>(c));
    max_var = std::max(max_var, (col.array() - col.mean()).square().mean());
  }
  const double epsilon = var_smoothing * max_var;

  const std::size_t n = set.rows();
  std::array<std::size_t, 2> count{n - prep.positives, prep.positives};
  for (int k = 0; k < 2; ++k) {
    model.log_prior_[k] = std::log(static_cast<double>(count[k]) / static_cast<double>(n));
    model.mean_[k].assign(prep.columns.size(), 0.0);
    model.var_[k].assign(prep.columns.size(), 0.0);
  }
  for (std::size_t j = 0; j < prep.columns.size(); ++j) {
    const auto c = static_cast<Eigen::Index>(prep.columns[j]);
    for (std::size_t i = 0; i < n; ++i) model.mean_[set.labels[i]][j] += set.features(static_cast<Eigen::Index>(i), c);
    for (int k = 0; k < 2; ++k) model.mean_[k][j] /= static_cast<double>(count[k]);
    for (std::size_t i = 0; i < n; ++i) {
      const int k = set.labels[i];
      const double d = set.features(static_cast<Eigen::Index>(i), c) - model.mean_[k][j];
      model.var_[k][j] += d * d;
    }
    for (int k = 0; k < 2; ++k) model.var_[k][j] = model.var_[k][j] / static_cast<double>(count[k]) + epsilon;
  }
  return model;
}

std::array<double, 2> GaussianNaiveBayes::posteriors(std::span<const double> row) const {
  check_row(row);
  std::array<double, 2> joint{};
  for (int k = 0; k < 2; ++k) {
    double s = log_prior_[k];
    for (std::size_t j = 0; j < columns_.size(); ++j) {
      const double d = row[columns_[j]] - mean_[k][j];
      s -= 0.5 * (std::log(2.0 * M_PI * var_[k][j]) + d * d / var_[k][j]);
    }
    joint[k] = s;
  }
  const double top = std::max(joint[0], joint[1]);
  const double e0 = std::exp(joint[0] - top);
  const double e1 = std::exp(joint[1] - top);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

double GaussianNaiveBayes::predict_score(std::span<const double> row) const { return posteriors(row)[1]; }

nlohmann::json GaussianNaiveBayes::to_json() const {
  auto j = base_json();
  j["log_prior"] = log_prior_;
  j["mean"] = mean_;
  j["var"] = var_;
  return j;
}

GaussianNaiveBayes GaussianNaiveBayes::from_json(const nlohmann::json& j) {
  GaussianNaiveBayes m;
  m.load_base_json(j);
  m.log_prior_ = j.at("log_prior").get<std::array<double, 2>>();
  m.mean_ = j.at("mean").get<std::array<std::vector<double>, 2>>();
  m.var_ = j.at("var").get<std::array<std::vector<double>, 2>>();
  for (int k = 0; k < 2; ++k)
    if (m.mean_[k].size() != m.columns_.size() || m.var_[k].size() != m.columns_.size())
      throw Error("naive Bayes arrays do not match its column list");
  return m;
}

// ---------------------------------------------------------------------------
// Random forest

namespace {

struct TreeBuilder {
  const SupervisedSet& set;
  const std::vector<std::size_t>& columns;
  std::size_t max_features;
  std::size_t min_samples_split;
  Stream rng;
  RandomForest::Tree tree;

  struct Split {
    bool found = false;
    std::size_t column = 0;
    double threshold = 0.0;
    double impurity = 0.0;
  };

  double x(std::size_t row, std::size_t column) const {
    return set.features(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(column));
  }

  static double gini_mass(double n, double pos) {
    if (n <= 0.0) return 0.0;
    const double p = pos / n;
    return n * 2.0 * p * (1.0 - p);
  }

  Split best_split(const std::vector<std::size_t>& rows) {
    std::vector<std::size_t> order = columns;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);

    Split best;
    std::vector<std::pair<double, int>> values(rows.size());
    double total_pos = 0.0;
    for (auto r : rows) total_pos += set.labels[r];
    const auto n = static_cast<double>(rows.size());

    for (std::size_t f = 0; f < order.size(); ++f) {
      if (f >= max_features && best.found) break;
      const std::size_t c = order[f];
      for (std::size_t i = 0; i < rows.size(); ++i) values[i] = {x(rows[i], c), set.labels[rows[i]]};
      std::sort(values.begin(), values.end());
      double left_pos = 0.0;
      for (std::size_t i = 0; i + 1 < values.size(); ++i) {
        left_pos += values[i].second;
        if (values[i].first == values[i + 1].first) continue;
        const auto left_n = static_cast<double>(i + 1);
        const double impurity = gini_mass(left_n, left_pos) + gini_mass(n - left_n, total_pos - left_pos);
        if (!best.found || impurity < best.impurity) best = {true, c, values[i].first, impurity};
      }
    }
    return best;
  }

  int grow(const std::vector<std::size_t>& rows) {
    const int id = static_cast<int>(tree.size());
    tree.emplace_back();
    std::size_t pos = 0;
    for (auto r : rows) pos += static_cast<std::size_t>(set.labels[r]);
    tree[id].value = static_cast<double>(pos) / static_cast<double>(rows.size());
    if (pos == 0 || pos == rows.size() || rows.size() < min_samples_split) return id;

    const auto split = best_split(rows);
    if (!split.found) return id;
    std::vector<std::size_t> left, right;
    for (auto r : rows) (x(r, split.column) <= split.threshold ? left : right).push_back(r);
    tree[id].feature = static_cast<int>(split.column);
    tree[id].threshold = split.threshold;
    const int l = grow(left);
    const int rr = grow(right);
    tree[id].left = l;
    tree[id].right = rr;
    return id;
  }
};

double tree_value(const RandomForest::Tree& tree, std::span<const double> row) {
  int id = 0;
  while (tree[id].feature >= 0) id = row[tree[id].feature] <= tree[id].threshold ? tree[id].left : tree[id].right;
  return tree[id].value;
}

} // namespace

RandomForest RandomForest::train(const SupervisedSet& set, std::uint64_t seed, const ForestOptions& options) {
  auto prep = prepare(set);
  if (options.trees == 0) throw Error("forest needs at least one tree");
  RandomForest model;
  model.width_ = static_cast<std::size_t>(set.features.cols());
  model.columns_ = prep.columns;
  model.warnings_ = prep.warnings;

  const std::size_t max_features =
      options.max_features ? options.max_features
                           : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(prep.columns.size()))));
  const std::size_t n = set.rows();
  model.trees_.reserve(options.trees);
  for (std::size_t t = 0; t < options.trees; ++t) {
    TreeBuilder builder{set, prep.columns, max_features, std::max<std::size_t>(options.min_samples_split, 2),
                        Stream(seed, t), {}};
    std::vector<std::size_t> sample(n);
    for (auto& s : sample) s = builder.rng.index(n);
    builder.grow(sample);
    model.trees_.push_back(std::move(builder.tree));
  }
  return model;
}

double RandomForest::predict_score(std::span<const double> row) const {
  check_row(row);
  std::size_t votes = 0;
  for (const auto& tree : trees_) votes += tree_value(tree, row) > 0.5 ? 1 : 0;
  return static_cast<double>(votes) / static_cast<double>(trees_.size());
}

nlohmann::json RandomForest::to_json() const {
  auto j = base_json();
  auto trees = nlohmann::json::array();
  for (const auto& tree : trees_) {
    nlohmann::json t;
    for (const auto& node : tree) {
      t["feature"].push_back(node.feature);
      t["threshold"].push_back(node.threshold);
      t["left"].push_back(node.left);
      t["right"].push_back(node.right);
      t["value"].push_back(node.value);
    }
    trees.push_back(std::move(t));
  }
  j["trees"] = std::move(trees);
  return j;
}

RandomForest RandomForest::from_json(const nlohmann::json& j) {
  RandomForest m;
  m.load_base_json(j);
  for (const auto& t : j.at("trees")) {
    const auto feature = t.at("feature").get<std::vector<int>>();
    const auto threshold = t.at("threshold").get<std::vector<double>>();
    const auto left = t.at("left").get<std::vector<int>>();
    const auto right = t.at("right").get<std::vector<int>>();
    const auto value = t.at("value").get<std::vector<double>>();
    const auto size = feature.size();
    if (size == 0 || threshold.size() != size || left.size() != size || right.size() != size || value.size() != size)
      throw Error("forest tree arrays differ in length");
    Tree tree(size);
    for (std::size_t i = 0; i < size; ++i) {
      tree[i] = {feature[i], threshold[i], left[i], right[i], value[i]};
      const bool leaf = feature[i] < 0;
      if (!leaf && (static_cast<std::size_t>(feature[i]) >= m.width_ || left[i] <= static_cast<int>(i) ||
                    right[i] <= static_cast<int>(i) || static_cast<std::size_t>(left[i]) >= size ||
                    static_cast<std::size_t>(right[i]) >= size))
        throw Error("forest tree node " + std::to_string(i) + " is malformed");
    }
    m.trees_.push_back(std::move(tree));
  }
  if (m.trees_.empty()) throw Error("forest has no trees");
  return m;
}

std::unique_ptr<Classifier> train_classifier(const SupervisedSet& set, ClassifierKind kind, std::uint64_t seed) {
  switch (kind) {
  case ClassifierKind::logistic_regression: return std::make_unique<LogisticRegression>(LogisticRegression::train(set));
  case ClassifierKind::gaussian_nb: return std::make_unique<GaussianNaiveBayes>(GaussianNaiveBayes::train(set));
  case ClassifierKind::random_forest: return std::make_unique<RandomForest>(RandomForest::train(set, seed));
  }
  throw Error("unknown classifier kind");
}

std::unique_ptr<Classifier> classifier_from_json(const nlohmann::json& j) {
  try {
    switch (parse_classifier_kind(j.at("kind").get<std::string>())) {
    case ClassifierKind::logistic_regression: return std::make_unique<LogisticRegression>(LogisticRegression::from_json(j));
    case ClassifierKind::gaussian_nb: return std::make_unique<GaussianNaiveBayes>(GaussianNaiveBayes::from_json(j));
    case ClassifierKind::random_forest: return std::make_unique<RandomForest>(RandomForest::from_json(j));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed model JSON: ") + e.what());
  }
  throw Error("unknown classifier kind");
}

} // namespace gridloop
