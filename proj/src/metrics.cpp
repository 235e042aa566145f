#include "dsmlr/metrics.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

#include "dsmlr/core_math.hpp"
#include "dsmlr/kernels.hpp"

namespace dsmlr {

std::vector<double> predict_scores(const DenseWeights& W, const SparseRow& x) {
  std::vector<double> s(W.n_classes());
  for (std::size_t k = 0; k < W.n_classes(); ++k) s[k] = sparse_dot(W.row(k), x);
  return s;
}

std::vector<double> predict_probabilities(const DenseWeights& W, const SparseRow& x) {
  std::vector<double> s = predict_scores(W, x);
  const double lse = log_partition(W, x);
  for (double& v : s) v = std::exp(v - lse);
  return s;
}

ClassId argmax(std::span<const double> scores) {
  if (scores.empty()) throw StructuralError("argmax of empty score vector");
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k) {
    if (scores[k] > scores[best]) best = k;
  }
  return static_cast<ClassId>(best);
}

std::size_t label_rank(std::span<const double> scores, ClassId label) {
  if (label >= scores.size()) return scores.size();
  const double s = scores[label];
  std::size_t ahead = 0;
  for (std::size_t c = 0; c < scores.size(); ++c) {
    if (scores[c] > s || (scores[c] == s && c < label)) ++ahead;
  }
  return ahead + 1;
}

namespace {

struct ClassCounts {
  std::vector<std::size_t> tp, fp, fn;
};

ClassCounts count(std::span<const ClassId> predictions, std::span<const ClassId> labels,
                  std::size_t n_classes) {
  if (predictions.size() != labels.size()) {
    throw StructuralError("F1: " + std::to_string(predictions.size()) + " predictions for " +
                          std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw StructuralError("F1 of an empty prediction set");
  ClassCounts c{std::vector<std::size_t>(n_classes), std::vector<std::size_t>(n_classes),
                std::vector<std::size_t>(n_classes)};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const ClassId p = predictions[i];
    const ClassId y = labels[i];
    if (p >= n_classes || y >= n_classes) throw StructuralError("F1: class id out of range");
    if (p == y) {
      ++c.tp[y];
    } else {
      ++c.fp[p];
      ++c.fn[y];
    }
  }
  return c;
}

double f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(denom);
}

}  // namespace

double micro_f1(std::span<const ClassId> predictions, std::span<const ClassId> labels, std::size_t n_classes) {
  const ClassCounts c = count(predictions, labels, n_classes);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t k = 0; k < n_classes; ++k) {
    tp += c.tp[k];
    fp += c.fp[k];
    fn += c.fn[k];
  }
  return f1(tp, fp, fn);
}

double macro_f1(std::span<const ClassId> predictions, std::span<const ClassId> labels, std::size_t n_classes) {
  const ClassCounts c = count(predictions, labels, n_classes);
  double sum = 0.0;
  for (std::size_t k = 0; k < n_classes; ++k) sum += f1(c.tp[k], c.fp[k], c.fn[k]);
  return sum / static_cast<double>(n_classes);
}

RankCdf rank_cdf_from_ranks(std::span<const std::size_t> ranks, std::size_t n_classes) {
  RankCdf out{std::vector<double>(n_classes, 0.0)};
  if (n_classes == 0) return out;
  std::vector<std::size_t> hist(n_classes + 1, 0);
  for (std::size_t r : ranks) {
    if (r == 0 || r > n_classes) throw StructuralError("rank out of range");
    ++hist[r];
  }
  std::size_t running = 0;
  for (std::size_t r = 1; r <= n_classes; ++r) {
    running += hist[r];
    out.cdf[r - 1] = ranks.empty() ? 1.0 : static_cast<double>(running) / static_cast<double>(ranks.size());
  }
  return out;
}

RankCdf rank_cdf(std::span<const double> scores, std::span<const ClassId> labels, std::size_t n_classes) {
  if (scores.size() != labels.size() * n_classes) {
    throw StructuralError("rank_cdf: score matrix does not match label count");
  }
  std::vector<std::size_t> ranks(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ranks[i] = label_rank(scores.subspan(i * n_classes, n_classes), labels[i]);
  }
  return rank_cdf_from_ranks(ranks, n_classes);
}

void validate_rank_cdf(const RankCdf& cdf) {
  if (cdf.cdf.empty()) throw DataError("rank CDF is empty");
  for (std::size_t r = 0; r < cdf.cdf.size(); ++r) {
    const double v = cdf.cdf[r];
    if (!(v >= 0.0 && v <= 1.0)) throw DataError("rank CDF value out of [0,1] at rank " + std::to_string(r + 1));
    if (r > 0 && v < cdf.cdf[r - 1]) throw DataError("rank CDF decreases at rank " + std::to_string(r + 1));
  }
  if (cdf.cdf.back() != 1.0) throw DataError("rank CDF does not end at 1");
}

namespace {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), res.ptr};
}

double parse_double(std::string_view s, std::size_t line_no) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw DataError("line " + std::to_string(line_no) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

constexpr std::string_view kProgressHeader = "iter\tobjective\tseconds\tmacro_f1\tmicro_f1";

}  // namespace

void write_rank_cdf(std::ostream& out, const RankCdf& cdf) {
  out << "rank\tcdf\n";
  for (std::size_t r = 0; r < cdf.cdf.size(); ++r) out << (r + 1) << '\t' << format_double(cdf.cdf[r]) << '\n';
}

RankCdf read_rank_cdf(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "rank\tcdf") throw DataError("line 1: expected rank CDF header");
  RankCdf out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (cols.size() != 2) throw DataError("line " + std::to_string(line_no) + ": expected 2 columns");
    if (parse_double(cols[0], line_no) != static_cast<double>(out.cdf.size() + 1)) {
      throw DataError("line " + std::to_string(line_no) + ": ranks must be 1, 2, ...");
    }
    out.cdf.push_back(parse_double(cols[1], line_no));
  }
  return out;
}

Evaluation evaluate(const DenseWeights& W, const SparseDataset& data) {
  const std::size_t K = W.n_classes();
  const std::vector<double> scores = kernels::score_matrix(W, data);
  Evaluation ev;
  ev.predictions.resize(data.size());
  ev.ranks.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::span<const double> row(scores.data() + i * K, K);
    ev.predictions[i] = argmax(row);
    ev.ranks[i] = label_rank(row, data.labels[i]);
  }
  if (!data.labels.empty()) {
    const std::size_t n_classes = std::max(K, data.n_classes);
    ev.micro = micro_f1(ev.predictions, data.labels, n_classes);
    ev.macro = macro_f1(ev.predictions, data.labels, n_classes);
  }
  return ev;
}

void write_progress(std::ostream& out, const ProgressLog& log) {
  out << kProgressHeader << '\n';
  for (const ProgressRecord& r : log) {
    out << r.iteration << '\t' << format_double(r.objective) << '\t' << format_double(r.seconds) << '\t'
        << format_double(r.macro_f1) << '\t' << format_double(r.micro_f1) << '\n';
  }
}

ProgressLog read_progress(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kProgressHeader) {
    throw DataError("line 1: expected progress header '" + std::string(kProgressHeader) + "'");
  }
  ProgressLog log;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cols = split_tabs(line);
    if (cols.size() != 5) {
      throw DataError("line " + std::to_string(line_no) + ": expected 5 columns, got " +
                      std::to_string(cols.size()));
    }
    ProgressRecord r;
    std::size_t iter = 0;
    auto [p, ec] = std::from_chars(cols[0].data(), cols[0].data() + cols[0].size(), iter);
    if (ec != std::errc() || p != cols[0].data() + cols[0].size()) {
      throw DataError("line " + std::to_string(line_no) + ": bad iteration '" + std::string(cols[0]) + "'");
    }
    r.iteration = iter;
    r.objective = parse_double(cols[1], line_no);
    r.seconds = parse_double(cols[2], line_no);
    r.macro_f1 = parse_double(cols[3], line_no);
    r.micro_f1 = parse_double(cols[4], line_no);
    if (!log.empty()) {
      if (r.iteration <= log.back().iteration) {
        throw DataError("line " + std::to_string(line_no) + ": iteration not increasing");
      }
      if (r.seconds < log.back().seconds) {
        throw DataError("line " + std::to_string(line_no) + ": seconds decreased");
      }
    }
    log.push_back(r);
  }
  return log;
}

void write_predictions(std::ostream& out, const Evaluation& eval, std::span<const ClassId> labels,
                       const std::vector<std::string>& label_names) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << label_names.at(labels[i]) << ' ' << label_names.at(eval.predictions[i]) << ' ' << eval.ranks[i]
        << '\n';
  }
}

}  // namespace dsmlr
