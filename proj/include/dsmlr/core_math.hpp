#pragma once

#include <limits>
#include <span>
#include <vector>

#include "dsmlr/types.hpp"

namespace dsmlr {

double sparse_dot(std::span<const double> w, const SparseRow& x);

/// Running log-sum-exp over a stream of log-domain terms. The sum is kept as
/// max + log(scaled) so that no term is exponentiated without a shift.
class LogSumExp {
 public:
  void add(double log_term);
  bool empty() const { return scaled_ == 0.0; }
  /// log of the accumulated sum; -inf when nothing was added.
  double value() const;

 private:
  double max_ = -std::numeric_limits<double>::infinity();
  double scaled_ = 0.0;
};

/// log sum_k exp(w_k . x), accumulated in class order.
double log_partition(const DenseWeights& W, const SparseRow& x);

/// -log(partial_sum). Throws NumericError for partial_sum <= 0 or non-finite.
double refresh_b(double partial_sum);
/// Log-domain form used by the engines: -log of the accumulated sum.
double refresh_b(const LogSumExp& partial_sum);

/// Regularized negative log-likelihood, averaged over rows.
double objective_l1(const DenseWeights& W, const SparseDataset& data, const Hyperparams& h);

/// Doubly-separable objective: sum over (i, k) of
///   lambda/(2N) |w_k|^2 - y_ik w_k.x_i / N + (exp(w_k.x_i + b_i) - b_i/K - 1/K) / N.
/// Equals objective_l1 when every b_i = -log_partition(W, x_i), and is
/// minimized in each b_i at exactly that value.
double objective_l2(const DenseWeights& W, std::span<const double> b, const SparseDataset& data,
                    const Hyperparams& h);

/// One stochastic step on a single (row, class) pair:
///   w - eta_t K (lambda w - y_ik x + exp(w.x + b_i) x).
std::vector<double> sgd_update(std::span<const double> w, const SparseRow& x, bool y_ik, double b_i,
                               std::size_t t, const Hyperparams& h, std::size_t n_classes);

/// Class vector with a deferred scalar multiplier so the regularizer shrink
/// costs O(1) per step. Stored value is scale * raw.
class ScaledVector {
 public:
  explicit ScaledVector(std::span<double> storage) : raw_(storage) {}

  double dot(const SparseRow& x) const { return scale_ * sparse_dot(raw_, x); }
  /// w <- shrink * w + coeff * x
  void shrink_and_add(double shrink, double coeff, const SparseRow& x);
  /// Folds the scale back into storage. Must be called before the storage is
  /// read by anyone else.
  void fold();

 private:
  std::span<double> raw_;
  double scale_ = 1.0;
};

/// Sequence of sgd_update steps on one class vector over the given rows, in
/// order, using the deferred-scale representation. Equivalent to applying
/// sgd_update row by row with scaled_step = eta_t * K. `b` is indexed by global
/// row id.
void sgd_pass(std::span<double> w, ClassId k, std::span<const std::size_t> row_order,
              const SparseDataset& data, std::span<const double> b, double scaled_step,
              double lambda);

/// Per-class gradient of f_i(W) = lambda/2 |W|^2 - w_y.x + log sum exp(w_k.x)
/// using the supplied a_i in the softmax coefficient exp(w_k.x + a_i).
/// Row k of the result is the block for class k.
DenseWeights exact_gradient_fi(const DenseWeights& W, const SparseRow& x, ClassId y, double a_i,
                               double lambda);

/// f_i(W) itself, for finite-difference checks.
double loss_fi(const DenseWeights& W, const SparseRow& x, ClassId y, double lambda);

/// |grad at W_now using a_i from W_stale - exact grad at W_now|.
double approx_gradient_error(const DenseWeights& W_now, const DenseWeights& W_stale,
                             const SparseRow& x, ClassId y, double lambda = 0.0);

/// Largest argument accepted by exp() before overflow.
inline constexpr double kMaxExpArg = 709.0;

}  // namespace dsmlr
