#pragma once

// Independent reimplementations used to check the library. Deliberately
// written the slow, obvious way.

#include <algorithm>
#include <numeric>
#include <vector>

#include "dsmlr/types.hpp"

namespace dsmlr::oracle {

inline std::vector<std::vector<std::size_t>> confusion(const std::vector<ClassId>& pred,
                                                       const std::vector<ClassId>& truth, std::size_t K) {
  std::vector<std::vector<std::size_t>> m(K, std::vector<std::size_t>(K, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) ++m[truth[i]][pred[i]];
  return m;
}

inline double macro_f1(const std::vector<ClassId>& pred, const std::vector<ClassId>& truth, std::size_t K) {
  const auto m = confusion(pred, truth, K);
  double sum = 0.0;
  for (std::size_t c = 0; c < K; ++c) {
    double tp = double(m[c][c]), row = 0.0, col = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
      row += double(m[c][j]);
      col += double(m[j][c]);
    }
    const double precision = col > 0 ? tp / col : 0.0;
    const double recall = row > 0 ? tp / row : 0.0;
    sum += precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
  }
  return sum / double(K);
}

inline double accuracy(const std::vector<ClassId>& pred, const std::vector<ClassId>& truth) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += pred[i] == truth[i];
  return double(hit) / double(truth.size());
}

// Rank by a stable sort of class ids on descending score.
inline std::size_t rank_of(const std::vector<double>& scores, ClassId label) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return std::size_t(std::find(order.begin(), order.end(), label) - order.begin()) + 1;
}

inline std::vector<double> rank_cdf(const std::vector<std::vector<double>>& scores, const std::vector<ClassId>& truth,
                                    std::size_t K) {
  std::vector<double> cdf(K, 0.0);
  for (std::size_t r = 1; r <= K; ++r) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) count += rank_of(scores[i], truth[i]) <= r;
    cdf[r - 1] = double(count) / double(truth.size());
  }
  return cdf;
}

}  // namespace dsmlr::oracle
