#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dsmlr {

using ClassId = std::uint32_t;
using FeatureId = std::uint32_t;

/// Malformed shapes, out-of-range indices, dimension mismatches.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Overflow, underflow, or non-finite values during optimization.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input files (parse failures, unreadable checkpoints).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Token loss, duplicated classes, broken ownership in the engines.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A sparse feature vector. Indices are strictly increasing.
struct SparseRow {
  std::vector<FeatureId> indices;
  std::vector<double> values;

  std::size_t nnz() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
  double squared_norm() const;
};

struct SparseDataset {
  std::vector<SparseRow> rows;
  std::vector<ClassId> labels;
  std::size_t n_features = 0;
  std::size_t n_classes = 0;

  std::size_t size() const { return rows.size(); }

  /// Throws StructuralError when any invariant of the container is broken.
  void validate() const;
};

/// K class vectors of length D stored row-major in one buffer.
class DenseWeights {
 public:
  DenseWeights() = default;
  DenseWeights(std::size_t n_classes, std::size_t n_features)
      : n_classes_(n_classes), n_features_(n_features), data_(n_classes * n_features, 0.0) {}

  std::size_t n_classes() const { return n_classes_; }
  std::size_t n_features() const { return n_features_; }

  std::span<double> row(std::size_t k) { return {data_.data() + k * n_features_, n_features_}; }
  std::span<const double> row(std::size_t k) const {
    return {data_.data() + k * n_features_, n_features_};
  }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  bool all_finite() const;

  friend bool operator==(const DenseWeights&, const DenseWeights&) = default;

 private:
  std::size_t n_classes_ = 0;
  std::size_t n_features_ = 0;
  std::vector<double> data_;
};

enum class StepDecay { InvSqrt, Constant };

struct Hyperparams {
  double lambda = 1e-3;
  double eta0 = 0.1;
  StepDecay decay = StepDecay::InvSqrt;

  /// Step size at outer iteration t (1-based).
  double step(std::size_t t) const;
  void validate() const;
};

}  // namespace dsmlr
