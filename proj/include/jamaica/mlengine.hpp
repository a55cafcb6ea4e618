#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace jamaica {

using FeatureVector = std::vector<double>;

// Throws non_finite_feature on NaN or infinity, dimension_mismatch when the
// vector is empty or its size differs from expected_dim (0 = any size).
void validate_features(const FeatureVector& x, std::size_t expected_dim);

// Local outlier factor over a bounded reference window. Scoring compares a
// point's local reachability density against that of its k nearest reference
// points; values near 1 mean the point sits in a region as dense as its
// neighbourhood, values well above 1 mean it is isolated.
class LofModel {
 public:
  // capacity 0 means unbounded; otherwise the reference set is a FIFO ring of
  // that size and must be able to hold more than k points.
  LofModel(std::size_t capacity, std::size_t k);

  void add(const FeatureVector& x);
  // Rebuilds the per-point k-distance and density caches; call after a batch
  // of adds and before scoring.
  void train();
  double score(const FeatureVector& x) const;

  bool trained() const { return trained_; }
  std::size_t size() const { return points_.size(); }
  std::size_t dim() const { return dim_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t k() const { return k_; }
  // Reference points in storage order; scoring ties on distance break by
  // position in this list.
  const std::vector<FeatureVector>& reference() const { return points_; }

  nlohmann::json snapshot() const;
  static LofModel restore(const nlohmann::json& j);

 private:
  std::size_t capacity_;
  std::size_t k_;
  std::size_t dim_ = 0;
  std::size_t head_ = 0;  // next ring slot to overwrite once full
  std::vector<FeatureVector> points_;
  bool trained_ = false;
  std::vector<double> kdist_;
  std::vector<double> lrd_;
  std::vector<std::vector<std::size_t>> neighbors_;
};

// Closed interval [low, high]; values outside are anomalous with a score that
// grows linearly with the distance from the nearer bound, in units of the
// interval width.
class RangeModel {
 public:
  static RangeModel fit(std::vector<double> values, double q_low, double q_high);
  static RangeModel explicit_range(double low, double high);

  double low() const { return low_; }
  double high() const { return high_; }
  bool learned() const { return learned_; }
  bool anomalous(double v) const { return v < low_ || v > high_; }
  double score(double v) const;

  nlohmann::json snapshot() const;
  static RangeModel restore(const nlohmann::json& j);

 private:
  RangeModel(double low, double high, bool learned);
  double low_;
  double high_;
  bool learned_;
};

struct LabeledExample {
  FeatureVector features;
  std::string label;
};

// Classic online multiclass perceptron on bias-augmented inputs. Classes are
// kept sorted so argmax ties resolve to the lexicographically smallest name
// and training stays deterministic.
class ClassifierModel {
 public:
  explicit ClassifierModel(std::vector<std::string> classes);

  void train_batch(const std::vector<LabeledExample>& batch, int epochs);
  std::pair<std::string, double> predict(const FeatureVector& x) const;

  std::size_t trained_count() const { return trained_count_; }
  std::size_t dim() const { return dim_; }
  const std::vector<std::string>& classes() const { return classes_; }

  nlohmann::json snapshot() const;
  static ClassifierModel restore(const nlohmann::json& j);

 private:
  std::vector<std::string> classes_;  // sorted, unique
  std::size_t dim_ = 0;               // feature dimension, without the bias slot
  std::size_t trained_count_ = 0;
  std::vector<std::vector<double>> weights_;  // classes_.size() x (dim_ + 1)

  std::size_t class_index_(const std::string& label) const;
  std::size_t argmax_(const FeatureVector& x, double* best, double* second) const;
};

}  // namespace jamaica
