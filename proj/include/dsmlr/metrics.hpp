#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dsmlr/types.hpp"

namespace dsmlr {

/// The K dot products w_k . x. Softmax is monotone, so these rank classes.
std::vector<double> predict_scores(const DenseWeights& W, const SparseRow& x);

/// Softmax probabilities via log_partition; sums to 1.
std::vector<double> predict_probabilities(const DenseWeights& W, const SparseRow& x);

/// Index of the largest score; ties go to the lowest class id.
ClassId argmax(std::span<const double> scores);

/// 1 + number of classes ranked strictly ahead of `label`. A class is ahead
/// when its score is greater, or equal with a lower class id.
std::size_t label_rank(std::span<const double> scores, ClassId label);

/// Global-count F1. For single-label multiclass this is accuracy.
double micro_f1(std::span<const ClassId> predictions, std::span<const ClassId> labels, std::size_t n_classes);

/// Unweighted mean over all K classes of per-class F1; a class with no
/// support and no predictions scores 0.
double macro_f1(std::span<const ClassId> predictions, std::span<const ClassId> labels, std::size_t n_classes);

/// cdf[r-1] = fraction of points whose true label has rank <= r.
struct RankCdf {
  std::vector<double> cdf;
  std::size_t n_classes() const { return cdf.size(); }
};

/// scores is N x K row-major.
RankCdf rank_cdf(std::span<const double> scores, std::span<const ClassId> labels, std::size_t n_classes);
RankCdf rank_cdf_from_ranks(std::span<const std::size_t> ranks, std::size_t n_classes);

/// Throws DataError unless non-decreasing with terminal value 1.
void validate_rank_cdf(const RankCdf& cdf);

void write_rank_cdf(std::ostream& out, const RankCdf& cdf);
RankCdf read_rank_cdf(std::istream& in);

struct Evaluation {
  std::vector<ClassId> predictions;
  std::vector<std::size_t> ranks;
  double micro = 0.0;
  double macro = 0.0;
};

/// Predicts every row of `data` with W. Rows whose label is >= W.n_classes()
/// (unknown to the model) get rank K and never count as correct.
Evaluation evaluate(const DenseWeights& W, const SparseDataset& data);

inline constexpr double kNotEvaluated = std::numeric_limits<double>::quiet_NaN();

struct ProgressRecord {
  std::size_t iteration = 0;
  double objective = 0.0;
  double seconds = 0.0;
  double macro_f1 = kNotEvaluated;
  double micro_f1 = kNotEvaluated;
};

using ProgressLog = std::vector<ProgressRecord>;

/// TSV with header "iter objective seconds macro_f1 micro_f1". Unevaluated F1
/// cells are written as "nan".
void write_progress(std::ostream& out, const ProgressLog& log);
/// Throws DataError (with line number) on malformed rows, non-increasing
/// iterations, or decreasing seconds.
ProgressLog read_progress(std::istream& in);

/// One "true_label predicted_label rank" line per point, using label names.
void write_predictions(std::ostream& out, const Evaluation& eval, std::span<const ClassId> labels,
                       const std::vector<std::string>& label_names);

}  // namespace dsmlr
