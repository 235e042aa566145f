#include "dsmlr/synthetic.hpp"

#include <cmath>
#include <random>
#include <string>

#include "dsmlr/rng.hpp"

namespace dsmlr {

ParsedDataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.n_classes == 0 || spec.n_features == 0 || spec.n_rows < spec.n_classes) {
    throw StructuralError("synthetic data needs K >= 1, D >= 1 and N >= K");
  }
  std::mt19937_64 gen(derive_seed(spec.seed, {0x5717ULL}));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::size_t D = spec.n_features;
  std::vector<double> centroids(spec.n_classes * D);
  for (double& c : centroids) c = gauss(gen);

  ParsedDataset out;
  for (std::size_t k = 0; k < spec.n_classes; ++k) out.labels.intern(std::to_string(k));
  out.data.n_features = D;
  out.data.n_classes = spec.n_classes;

  std::vector<double> dense(D);
  for (std::size_t i = 0; i < spec.n_rows; ++i) {
    const auto y = static_cast<ClassId>(i < spec.n_classes ? i : gen() % spec.n_classes);
    SparseRow row;
    double sq = 0.0;
    for (std::size_t j = 0; j < D; ++j) {
      dense[j] = centroids[y * D + j] + spec.noise * gauss(gen);
      const bool keep = unit(gen) < spec.density;
      if (keep && dense[j] != 0.0) {
        row.indices.push_back(static_cast<FeatureId>(j));
        row.values.push_back(dense[j]);
        sq += dense[j] * dense[j];
      }
    }
    if (row.indices.empty()) {
      const auto j = static_cast<FeatureId>(gen() % D);
      row.indices.push_back(j);
      row.values.push_back(dense[j] != 0.0 ? dense[j] : 1.0);
      sq = row.values[0] * row.values[0];
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (double& v : row.values) v *= inv;
    out.data.rows.push_back(std::move(row));
    out.data.labels.push_back(y);
  }
  return out;
}

}  // namespace dsmlr
