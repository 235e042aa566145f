#include "dsmlr/types.hpp"

#include <cmath>
#include <string>

namespace dsmlr {

double SparseRow::squared_norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return s;
}

void SparseDataset::validate() const {
  if (labels.size() != rows.size()) {
    throw StructuralError("dataset has " + std::to_string(rows.size()) + " rows but " +
                          std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SparseRow& r = rows[i];
    if (r.indices.size() != r.values.size()) {
      throw StructuralError("row " + std::to_string(i) + ": index/value length mismatch");
    }
    for (std::size_t j = 0; j < r.indices.size(); ++j) {
      if (r.indices[j] >= n_features) {
        throw StructuralError("row " + std::to_string(i) + ": feature index " +
                              std::to_string(r.indices[j]) + " >= D=" + std::to_string(n_features));
      }
      if (j > 0 && r.indices[j] <= r.indices[j - 1]) {
        throw StructuralError("row " + std::to_string(i) + ": indices not strictly increasing");
      }
      if (!std::isfinite(r.values[j])) {
        throw StructuralError("row " + std::to_string(i) + ": non-finite feature value");
      }
    }
    if (labels[i] >= n_classes) {
      throw StructuralError("row " + std::to_string(i) + ": label " + std::to_string(labels[i]) +
                            " >= K=" + std::to_string(n_classes));
    }
  }
}

bool DenseWeights::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double Hyperparams::step(std::size_t t) const {
  if (decay == StepDecay::Constant) return eta0;
  return eta0 / std::sqrt(static_cast<double>(t));
}

void Hyperparams::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw StructuralError("lambda must be finite and >= 0");
  }
  // eta0 == 0 is accepted: it turns every update into a no-op.
  if (!(eta0 >= 0.0) || !std::isfinite(eta0)) {
    throw StructuralError("eta0 must be finite and >= 0");
  }
}

}  // namespace dsmlr
