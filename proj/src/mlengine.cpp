#include "jamaica/mlengine.hpp"

#include <algorithm>
#include <cmath>

#include "jamaica/errors.hpp"

namespace jamaica {

namespace {

constexpr double kLrdFloor = 1e-12;

double euclid(const FeatureVector& a, const FeatureVector& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

}  // namespace

void validate_features(const FeatureVector& x, std::size_t expected_dim) {
  if (x.empty()) raise(Errc::dimension_mismatch, "feature vector must be non-empty");
  for (double v : x)
    if (!std::isfinite(v)) raise(Errc::non_finite_feature, "feature values must be finite");
  if (expected_dim != 0 && x.size() != expected_dim)
    raise(Errc::dimension_mismatch, "feature vector has " + std::to_string(x.size()) +
                                        " dimensions, expected " + std::to_string(expected_dim));
}

LofModel::LofModel(std::size_t capacity, std::size_t k) : capacity_(capacity), k_(k) {
  if (k_ < 1) raise(Errc::invalid_config, "lof k must be at least 1");
  if (capacity_ != 0 && capacity_ <= k_) raise(Errc::invalid_config, "lof capacity must exceed k");
}

void LofModel::add(const FeatureVector& x) {
  validate_features(x, dim_);
  if (dim_ == 0) dim_ = x.size();
  if (capacity_ == 0 || points_.size() < capacity_) {
    points_.push_back(x);
  } else {
    points_[head_] = x;
    head_ = (head_ + 1) % capacity_;
  }
  trained_ = false;
}

void LofModel::train() {
  const std::size_t n = points_.size();
  if (n <= k_)
    raise(Errc::insufficient_training,
          "lof needs more than k=" + std::to_string(k_) + " training points, have " +
              std::to_string(n));

  kdist_.assign(n, 0.0);
  neighbors_.assign(n, {});
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t i = 0; i < n; ++i) {
    order.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      order.emplace_back(euclid(points_[i], points_[j]), j);
    }
    std::sort(order.begin(), order.end());
    neighbors_[i].reserve(k_);
    for (std::size_t r = 0; r < k_; ++r) neighbors_[i].push_back(order[r].second);
    kdist_[i] = order[k_ - 1].first;
  }

  lrd_.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t o : neighbors_[i]) sum += std::max(kdist_[o], euclid(points_[i], points_[o]));
    lrd_[i] = 1.0 / std::max(sum / static_cast<double>(k_), kLrdFloor);
  }
  trained_ = true;
}

double LofModel::score(const FeatureVector& x) const {
  if (points_.size() <= k_)
    raise(Errc::insufficient_training,
          "lof needs more than k=" + std::to_string(k_) + " training points, have " +
              std::to_string(points_.size()));
  if (!trained_) raise(Errc::empty_model, "lof reference statistics are stale; train first");
  validate_features(x, dim_);

  std::vector<std::pair<double, std::size_t>> order;
  order.reserve(points_.size());
  for (std::size_t j = 0; j < points_.size(); ++j) order.emplace_back(euclid(x, points_[j]), j);
  std::sort(order.begin(), order.end());

  double reach_sum = 0.0;
  double lrd_sum = 0.0;
  for (std::size_t r = 0; r < k_; ++r) {
    const std::size_t o = order[r].second;
    reach_sum += std::max(kdist_[o], order[r].first);
    lrd_sum += lrd_[o];
  }
  const double lrd_x = 1.0 / std::max(reach_sum / static_cast<double>(k_), kLrdFloor);
  return (lrd_sum / static_cast<double>(k_)) / lrd_x;
}

nlohmann::json LofModel::snapshot() const {
  return {{"type", "lof"},     {"capacity", capacity_}, {"k", k_},
          {"head", head_},     {"trained", trained_},   {"points", points_}};
}

LofModel LofModel::restore(const nlohmann::json& j) {
  LofModel m(j.at("capacity").get<std::size_t>(), j.at("k").get<std::size_t>());
  m.points_ = j.at("points").get<std::vector<FeatureVector>>();
  m.head_ = j.at("head").get<std::size_t>();
  if (!m.points_.empty()) m.dim_ = m.points_.front().size();
  if (j.at("trained").get<bool>()) m.train();
  return m;
}

RangeModel::RangeModel(double low, double high, bool learned)
    : low_(low), high_(high), learned_(learned) {
  if (!std::isfinite(low_) || !std::isfinite(high_))
    raise(Errc::non_finite_feature, "range bounds must be finite");
  if (low_ > high_) raise(Errc::degenerate_range, "range low must not exceed high");
}

RangeModel RangeModel::fit(std::vector<double> values, double q_low, double q_high) {
  if (values.empty()) raise(Errc::empty_batch, "cannot fit a range to no values");
  if (!(q_low >= 0.0 && q_low < q_high && q_high <= 1.0))
    raise(Errc::bad_quantiles, "quantiles must satisfy 0 <= q_low < q_high <= 1");
  for (double v : values)
    if (!std::isfinite(v)) raise(Errc::non_finite_feature, "training values must be finite");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  auto nearest_rank = [&](double q) {
    // The 1e-9 slack keeps q*n that is an integer in real arithmetic from
    // ceiling up when the product lands just above it in binary.
    auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(q * n - 1e-9)));
    return values[std::min(rank, values.size()) - 1];
  };
  return RangeModel(nearest_rank(q_low), nearest_rank(q_high), /*learned=*/true);
}

RangeModel RangeModel::explicit_range(double low, double high) {
  return RangeModel(low, high, /*learned=*/false);
}

double RangeModel::score(double v) const {
  const double width = high_ - low_;
  if (width == 0.0) {
    if (v == low_) return 0.0;
    raise(Errc::degenerate_range, "range has zero width; scores outside it are undefined");
  }
  if (v < low_) return (low_ - v) / width;
  if (v > high_) return (v - high_) / width;
  return 0.0;
}

nlohmann::json RangeModel::snapshot() const {
  return {{"type", "range"}, {"low", low_}, {"high", high_}, {"learned", learned_}};
}

RangeModel RangeModel::restore(const nlohmann::json& j) {
  return RangeModel(j.at("low").get<double>(), j.at("high").get<double>(),
                    j.at("learned").get<bool>());
}

ClassifierModel::ClassifierModel(std::vector<std::string> classes) : classes_(std::move(classes)) {
  std::sort(classes_.begin(), classes_.end());
  classes_.erase(std::unique(classes_.begin(), classes_.end()), classes_.end());
  if (classes_.empty()) raise(Errc::invalid_config, "a classifier needs at least one class");
  for (const auto& c : classes_)
    if (c.empty()) raise(Errc::invalid_config, "class labels must be non-empty");
}

std::size_t ClassifierModel::class_index_(const std::string& label) const {
  auto it = std::lower_bound(classes_.begin(), classes_.end(), label);
  if (it == classes_.end() || *it != label)
    raise(Errc::unknown_class, "label '" + label + "' is not one of this classifier's classes");
  return static_cast<std::size_t>(it - classes_.begin());
}

std::size_t ClassifierModel::argmax_(const FeatureVector& x, double* best, double* second) const {
  std::size_t best_i = 0;
  double best_s = 0.0;
  double second_s = 0.0;
  for (std::size_t c = 0; c < weights_.size(); ++c) {
    double s = weights_[c][dim_];  // bias
    for (std::size_t i = 0; i < dim_; ++i) s += weights_[c][i] * x[i];
    if (c == 0 || s > best_s) {
      if (c != 0) second_s = best_s;
      best_s = s;
      best_i = c;
    } else if (c == 1 || s > second_s) {
      second_s = s;
    }
  }
  if (weights_.size() < 2) second_s = best_s;  // margin 0 for a one-class model
  if (best) *best = best_s;
  if (second) *second = second_s;
  return best_i;
}

void ClassifierModel::train_batch(const std::vector<LabeledExample>& batch, int epochs) {
  if (batch.empty()) return;
  if (epochs < 1) raise(Errc::invalid_config, "epochs must be at least 1");
  const std::size_t expect = dim_ == 0 ? batch.front().features.size() : dim_;
  for (const auto& ex : batch) {
    validate_features(ex.features, expect);
    class_index_(ex.label);
  }
  if (dim_ == 0) {
    dim_ = expect;
    weights_.assign(classes_.size(), std::vector<double>(dim_ + 1, 0.0));
  }

  for (int e = 0; e < epochs; ++e) {
    for (const auto& ex : batch) {
      const std::size_t truth = class_index_(ex.label);
      const std::size_t guess = argmax_(ex.features, nullptr, nullptr);
      if (guess == truth) continue;
      for (std::size_t i = 0; i < dim_; ++i) {
        weights_[truth][i] += ex.features[i];
        weights_[guess][i] -= ex.features[i];
      }
      weights_[truth][dim_] += 1.0;
      weights_[guess][dim_] -= 1.0;
    }
  }
  trained_count_ += batch.size();
}

std::pair<std::string, double> ClassifierModel::predict(const FeatureVector& x) const {
  if (classes_.empty()) raise(Errc::empty_model, "classifier has no classes");
  validate_features(x, dim_);
  if (weights_.empty()) return {classes_.front(), 0.0};  // untrained: every score is zero
  double best = 0.0;
  double second = 0.0;
  const std::size_t idx = argmax_(x, &best, &second);
  return {classes_[idx], best - second};
}

nlohmann::json ClassifierModel::snapshot() const {
  return {{"type", "classifier"},
          {"classes", classes_},
          {"dim", dim_},
          {"trained_count", trained_count_},
          {"weights", weights_}};
}

ClassifierModel ClassifierModel::restore(const nlohmann::json& j) {
  ClassifierModel m(j.at("classes").get<std::vector<std::string>>());
  m.dim_ = j.at("dim").get<std::size_t>();
  m.trained_count_ = j.at("trained_count").get<std::size_t>();
  m.weights_ = j.at("weights").get<std::vector<std::vector<double>>>();
  return m;
}

}  // namespace jamaica
