#include "dsmlr/core_math.hpp"

#include <cmath>
#include <string>

#include "dsmlr/kernels.hpp"

namespace dsmlr {

namespace {

void check_compatible(const DenseWeights& W, const SparseDataset& data) {
  if (W.n_classes() != data.n_classes) {
    throw StructuralError("weights have K=" + std::to_string(W.n_classes()) + ", data has K=" +
                          std::to_string(data.n_classes));
  }
  if (W.n_features() < data.n_features) {
    throw StructuralError("weights have D=" + std::to_string(W.n_features()) + ", data needs D=" +
                          std::to_string(data.n_features));
  }
}

double checked_exp(double dot, double b, std::size_t row = static_cast<std::size_t>(-1)) {
  const double arg = dot + b;
  if (arg > kMaxExpArg || std::isnan(arg)) {
    std::string where = row == static_cast<std::size_t>(-1) ? "" : " at row " + std::to_string(row);
    throw NumericError("exp overflow in stochastic update" + where + ": w.x=" + std::to_string(dot) +
                       " b=" + std::to_string(b));
  }
  return std::exp(arg);
}

}  // namespace

double sparse_dot(std::span<const double> w, const SparseRow& x) {
  double s = 0.0;
  const std::size_t n = x.indices.size();
  for (std::size_t j = 0; j < n; ++j) {
    const FeatureId f = x.indices[j];
    if (f >= w.size()) {
      throw StructuralError("feature index " + std::to_string(f) + " out of range for vector of length " +
                            std::to_string(w.size()));
    }
    s += w[f] * x.values[j];
  }
  return s;
}

void LogSumExp::add(double log_term) {
  if (log_term == -std::numeric_limits<double>::infinity()) return;
  if (scaled_ == 0.0) {
    max_ = log_term;
    scaled_ = 1.0;
  } else if (log_term > max_) {
    scaled_ = scaled_ * std::exp(max_ - log_term) + 1.0;
    max_ = log_term;
  } else {
    scaled_ += std::exp(log_term - max_);
  }
}

double LogSumExp::value() const {
  if (scaled_ == 0.0) return -std::numeric_limits<double>::infinity();
  return max_ + std::log(scaled_);
}

double log_partition(const DenseWeights& W, const SparseRow& x) {
  if (W.n_classes() == 0) throw StructuralError("log_partition: no classes");
  LogSumExp acc;
  for (std::size_t k = 0; k < W.n_classes(); ++k) acc.add(sparse_dot(W.row(k), x));
  return acc.value();
}

double refresh_b(double partial_sum) {
  if (!(partial_sum > 0.0) || !std::isfinite(partial_sum)) {
    throw NumericError("refresh_b: partial sum " + std::to_string(partial_sum) +
                       " is not a positive finite value");
  }
  return -std::log(partial_sum);
}

double refresh_b(const LogSumExp& partial_sum) {
  const double v = partial_sum.value();
  if (!std::isfinite(v)) {
    throw NumericError("refresh_b: accumulated log-sum " + std::to_string(v) + " is not finite");
  }
  return -v;
}

double objective_l1(const DenseWeights& W, const SparseDataset& data, const Hyperparams& h) {
  check_compatible(W, data);
  double reg = 0.0;
  for (std::size_t k = 0; k < W.n_classes(); ++k) {
    for (double v : W.row(k)) reg += v * v;
  }
  const std::vector<double> losses = kernels::row_losses(W, data);
  double data_sum = 0.0;
  for (double l : losses) data_sum += l;
  const double n = static_cast<double>(data.size());
  return 0.5 * h.lambda * reg + (data.size() == 0 ? 0.0 : data_sum / n);
}

double objective_l2(const DenseWeights& W, std::span<const double> b, const SparseDataset& data,
                    const Hyperparams& h) {
  check_compatible(W, data);
  if (b.size() != data.size()) {
    throw StructuralError("objective_l2: b has " + std::to_string(b.size()) + " entries for " +
                          std::to_string(data.size()) + " rows");
  }
  const std::size_t K = W.n_classes();
  const double n = static_cast<double>(data.size());
  const double kd = static_cast<double>(K);
  std::vector<double> sq(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    for (double v : W.row(k)) sq[k] += v * v;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const SparseRow& x = data.rows[i];
    double row = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const double dot = sparse_dot(W.row(k), x);
      const double y = data.labels[i] == k ? 1.0 : 0.0;
      row += 0.5 * h.lambda * sq[k] - y * dot + std::exp(dot + b[i]) - b[i] / kd - 1.0 / kd;
    }
    total += row / n;
  }
  return total;
}

std::vector<double> sgd_update(std::span<const double> w, const SparseRow& x, bool y_ik, double b_i,
                               std::size_t t, const Hyperparams& h, std::size_t n_classes) {
  if (!std::isfinite(b_i)) throw NumericError("sgd_update: b_i is not finite");
  const double step = h.step(t) * static_cast<double>(n_classes);
  const double dot = sparse_dot(w, x);
  const double e = checked_exp(dot, b_i);
  const double shrink = 1.0 - step * h.lambda;
  const double coeff = step * ((y_ik ? 1.0 : 0.0) - e);
  std::vector<double> out(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) out[j] = shrink * w[j];
  for (std::size_t j = 0; j < x.nnz(); ++j) out[x.indices[j]] += coeff * x.values[j];
  return out;
}

void ScaledVector::shrink_and_add(double shrink, double coeff, const SparseRow& x) {
  const double next = scale_ * shrink;
  if (std::abs(next) < 1e-120) {
    for (double& v : raw_) v *= next;
    scale_ = 1.0;
    for (std::size_t j = 0; j < x.nnz(); ++j) raw_[x.indices[j]] += coeff * x.values[j];
    return;
  }
  scale_ = next;
  const double c = coeff / scale_;
  for (std::size_t j = 0; j < x.nnz(); ++j) raw_[x.indices[j]] += c * x.values[j];
}

void ScaledVector::fold() {
  if (scale_ == 1.0) return;
  for (double& v : raw_) v *= scale_;
  scale_ = 1.0;
}

void sgd_pass(std::span<double> w, ClassId k, std::span<const std::size_t> row_order,
              const SparseDataset& data, std::span<const double> b, double scaled_step,
              double lambda) {
  ScaledVector v(w);
  const double shrink = 1.0 - scaled_step * lambda;
  for (std::size_t i : row_order) {
    const SparseRow& x = data.rows[i];
    const double dot = v.dot(x);
    const double e = checked_exp(dot, b[i], i);
    const double y = data.labels[i] == k ? 1.0 : 0.0;
    v.shrink_and_add(shrink, scaled_step * (y - e), x);
  }
  v.fold();
}

DenseWeights exact_gradient_fi(const DenseWeights& W, const SparseRow& x, ClassId y, double a_i,
                               double lambda) {
  DenseWeights g(W.n_classes(), W.n_features());
  for (std::size_t k = 0; k < W.n_classes(); ++k) {
    auto gk = g.row(k);
    auto wk = W.row(k);
    for (std::size_t j = 0; j < gk.size(); ++j) gk[j] = lambda * wk[j];
    const double coeff = std::exp(sparse_dot(wk, x) + a_i) - (k == y ? 1.0 : 0.0);
    for (std::size_t j = 0; j < x.nnz(); ++j) gk[x.indices[j]] += coeff * x.values[j];
  }
  return g;
}

double loss_fi(const DenseWeights& W, const SparseRow& x, ClassId y, double lambda) {
  double reg = 0.0;
  for (double v : W.flat()) reg += v * v;
  return 0.5 * lambda * reg - sparse_dot(W.row(y), x) + log_partition(W, x);
}

double approx_gradient_error(const DenseWeights& W_now, const DenseWeights& W_stale,
                             const SparseRow& x, ClassId y, double lambda) {
  if (W_now.n_classes() != W_stale.n_classes() || W_now.n_features() != W_stale.n_features()) {
    throw StructuralError("approx_gradient_error: weight shapes differ");
  }
  (void)y;
  (void)lambda;  // both cancel between the two gradients
  const double a_now = -log_partition(W_now, x);
  const double a_stale = -log_partition(W_stale, x);
  const double drift = std::expm1(a_stale - a_now);
  double sum_sq = 0.0;
  for (std::size_t k = 0; k < W_now.n_classes(); ++k) {
    const double p = std::exp(sparse_dot(W_now.row(k), x) + a_now);
    const double d = p * drift;
    sum_sq += d * d;
  }
  return std::sqrt(sum_sq * x.squared_norm());
}

}  // namespace dsmlr
