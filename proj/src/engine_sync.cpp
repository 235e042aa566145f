#include "dsmlr/engine_sync.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <string>
#include <tuple>

#include "dsmlr/core_math.hpp"

namespace dsmlr {

void ring_shift(std::vector<WeightBlock>& held) {
  if (held.size() < 2) return;
  std::rotate(held.rbegin(), held.rbegin() + 1, held.rend());
}

namespace {

// Runs body(p) for every worker in parallel; the end of the loop is the
// inner-epoch barrier. The first exception (lowest worker id) is rethrown.
template <typename Body>
void for_each_worker(std::size_t workers, Body&& body) {
  std::vector<std::exception_ptr> errors(workers);
  const auto P = static_cast<std::int64_t>(workers);
#pragma omp parallel for schedule(static, 1) num_threads(static_cast<int>(workers))
  for (std::int64_t p = 0; p < P; ++p) {
    try {
      body(static_cast<std::size_t>(p));
    } catch (...) {
      errors[static_cast<std::size_t>(p)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

[[noreturn]] void rethrow_with_context(std::size_t t, const char* phase) {
  try {
    throw;
  } catch (const NumericError& e) {
    throw NumericError("sync iteration " + std::to_string(t) + " (" + phase + "): " + e.what());
  }
}

void check_ring(const std::vector<WeightBlock>& held, std::size_t K, std::size_t cap) {
  std::vector<int> seen(K, 0);
  for (const WeightBlock& blk : held) {
    if (blk.size() > cap) {
      throw IntegrityError("worker holds " + std::to_string(blk.size()) + " vectors, cap is " + std::to_string(cap));
    }
    for (ClassId k : blk.classes) {
      if (k >= K || seen[k]++ != 0) throw IntegrityError("class " + std::to_string(k) + " duplicated or invalid");
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    if (seen[k] != 1) throw IntegrityError("class " + std::to_string(k) + " missing from the ring");
  }
}

}  // namespace

TrainResult run_sync(const SparseDataset& data, const EngineConfig& cfg) {
  validate_engine_input(data, cfg);
  const std::size_t P = cfg.workers;
  const std::size_t N = data.size();
  const std::size_t K = data.n_classes;
  const std::size_t D = data.n_features;
  const Hyperparams& h = cfg.hyper;
  const std::size_t cap = (K + P - 1) / P;

  const RowPartition rows = partition_rows(N, P);
  std::vector<WeightBlock> held(P);
  {
    const ClassPartition blocks = contiguous_class_blocks(K, P);
    for (std::size_t p = 0; p < P; ++p) {
      held[p].classes = blocks[p];
      held[p].n_features = D;
      held[p].data.assign(blocks[p].size() * D, 0.0);
    }
  }

  TrainResult out;
  out.b.assign(N, -std::log(static_cast<double>(K)));
  std::vector<LogSumExp> partial(N);
  std::vector<std::uint64_t> versions(K, 0);
  // visits[p * K + k]: co-residence count of (worker, class) in the current phase.
  std::vector<int> visits(P * K, 0);
  std::size_t max_block = 0;

  auto check_visits = [&](const char* phase) {
    for (std::size_t j = 0; j < visits.size(); ++j) {
      if (visits[j] != 1) {
        throw IntegrityError(std::string(phase) + ": worker " + std::to_string(j / K) + " saw class " +
                             std::to_string(j % K) + " " + std::to_string(visits[j]) + " times");
      }
    }
    std::fill(visits.begin(), visits.end(), 0);
  };

  Stopwatch clock;
  for (std::size_t t = 1; t <= cfg.iterations; ++t) {
    const double step = h.step(t) * static_cast<double>(K);

    for (std::size_t s = 0; s < P; ++s) {
      try {
        for_each_worker(P, [&](std::size_t p) {
          WeightBlock& blk = held[p];
          for (std::size_t j = 0; j < blk.size(); ++j) {
            const ClassId k = blk.classes[j];
            const auto order = shuffled_rows(rows[p], cfg.seed, p, t, k);
            try {
              sgd_pass(blk.row(j), k, order, data, out.b, step, h.lambda);
            } catch (const NumericError& e) {
              throw NumericError("worker " + std::to_string(p) + ", class " + std::to_string(k) + ": " + e.what());
            }
            ++versions[k];
            ++visits[p * K + k];
          }
        });
      } catch (...) {
        rethrow_with_context(t, "stochastic epoch");
      }
      for (const WeightBlock& blk : held) max_block = std::max(max_block, blk.size());
      ring_shift(held);
      if (cfg.check_invariants) check_ring(held, K, cap);
    }
    if (cfg.check_invariants) check_visits("stochastic epochs");

    for (std::size_t s = 0; s < P; ++s) {
      for_each_worker(P, [&](std::size_t p) {
        const WeightBlock& blk = held[p];
        for (std::size_t j = 0; j < blk.size(); ++j) {
          const ClassId k = blk.classes[j];
          const auto w = blk.row(j);
          for (std::size_t i = rows[p].begin; i < rows[p].end; ++i) partial[i].add(sparse_dot(w, data.rows[i]));
          ++visits[p * K + k];
          if (cfg.recorder) cfg.recorder->record({p, t, k, versions[k], std::vector<double>(w.begin(), w.end())});
        }
      });
      ring_shift(held);
      if (cfg.check_invariants) check_ring(held, K, cap);
    }
    if (cfg.check_invariants) check_visits("accumulation epochs");

    try {
      for_each_worker(P, [&](std::size_t p) {
        for (std::size_t i = rows[p].begin; i < rows[p].end; ++i) {
          out.b[i] = refresh_b(partial[i]);
          partial[i] = LogSumExp{};
        }
      });
    } catch (...) {
      rethrow_with_context(t, "b refresh");
    }

    clock.pause();
    DenseWeights W(K, D);
    for (const WeightBlock& blk : held) {
      for (std::size_t j = 0; j < blk.size(); ++j) std::ranges::copy(blk.row(j), W.row(blk.classes[j]).begin());
    }
    ProgressRecord rec;
    rec.iteration = t;
    rec.seconds = clock.seconds();
    rec.objective = objective_l1(W, data, h);
    if (cfg.evaluator && cfg.eval_every > 0 && (t % cfg.eval_every == 0 || t == cfg.iterations)) {
      std::tie(rec.macro_f1, rec.micro_f1) = cfg.evaluator(W);
    }
    out.log.push_back(rec);
    if (t == cfg.iterations) out.weights = std::move(W);
    clock.resume();
  }

  out.stats.max_resident_vectors = max_block;
  out.stats.token_processings = cfg.iterations * P * K;
  out.stats.final_versions = std::move(versions);
  return out;
}

}  // namespace dsmlr
