#include "dsmlr/engine_async.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <random>
#include <shared_mutex>
#include <string>
#include <thread>
#include <tuple>

#include "dsmlr/core_math.hpp"
#include "dsmlr/rng.hpp"

namespace dsmlr {

std::size_t VisitState::visited_count() const {
  return static_cast<std::size_t>(std::count(visited.begin(), visited.end(), true));
}

std::size_t route_next(std::uint64_t packet_id, std::size_t current_worker, std::size_t workers,
                       std::uint64_t seed, VisitState& state) {
  if (state.visited.size() != workers) state.visited.resize(workers, false);
  if (current_worker < workers) state.visited[current_worker] = true;

  std::vector<std::size_t> candidates;
  for (std::size_t p = 0; p < workers; ++p) {
    if (!state.visited[p]) candidates.push_back(p);
  }
  if (candidates.empty()) {
    ++state.round;
    std::fill(state.visited.begin(), state.visited.end(), false);
    for (std::size_t p = 0; p < workers; ++p) candidates.push_back(p);
  }
  std::mt19937_64 gen(derive_seed(seed, {0x5EEDULL, packet_id, state.round, state.visited_count()}));
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  return candidates[pick(gen)];
}

void TokenQueue::push(TokenPacket packet) {
  {
    std::lock_guard lock(mu_);
    tokens_ += packet.tokens.size();
    packets_.push_back(std::move(packet));
  }
  cv_.notify_one();
}

std::optional<TokenPacket> TokenQueue::take_locked(std::uint64_t round) {
  auto it = std::find_if(packets_.begin(), packets_.end(),
                         [round](const TokenPacket& pk) { return pk.visits.round == round; });
  if (it == packets_.end()) return std::nullopt;
  TokenPacket pk = std::move(*it);
  packets_.erase(it);
  tokens_ -= pk.tokens.size();
  return pk;
}

std::optional<TokenPacket> TokenQueue::pop_round(std::uint64_t round) {
  std::unique_lock lock(mu_);
  while (true) {
    if (closed_) return std::nullopt;
    if (auto pk = take_locked(round)) return pk;
    cv_.wait(lock);
  }
}

std::optional<TokenPacket> TokenQueue::try_pop_round(std::uint64_t round) {
  std::lock_guard lock(mu_);
  if (closed_) return std::nullopt;
  return take_locked(round);
}

bool TokenQueue::wait_round(std::uint64_t round) {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] {
    return closed_ || std::any_of(packets_.begin(), packets_.end(),
                                  [round](const TokenPacket& pk) { return pk.visits.round == round; });
  });
  return !closed_;
}

void TokenQueue::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

std::size_t TokenQueue::token_count() const {
  std::lock_guard lock(mu_);
  return tokens_;
}

std::size_t TokenQueue::packet_count() const {
  std::lock_guard lock(mu_);
  return packets_.size();
}

std::vector<TokenPacket> TokenQueue::drain() {
  std::lock_guard lock(mu_);
  std::vector<TokenPacket> out(std::make_move_iterator(packets_.begin()), std::make_move_iterator(packets_.end()));
  packets_.clear();
  tokens_ = 0;
  return out;
}

DenseWeights drain_and_assemble(std::vector<TokenQueue>& queues, std::vector<TokenPacket> held,
                                std::size_t n_classes, std::size_t n_features,
                                std::vector<std::uint64_t>* versions) {
  for (TokenQueue& q : queues) {
    for (TokenPacket& pk : q.drain()) held.push_back(std::move(pk));
  }
  DenseWeights W(n_classes, n_features);
  std::vector<bool> found(n_classes, false);
  if (versions) versions->assign(n_classes, 0);
  for (const TokenPacket& pk : held) {
    for (const ClassToken& tok : pk.tokens) {
      if (tok.k >= n_classes) throw IntegrityError("token for unknown class " + std::to_string(tok.k));
      if (found[tok.k]) throw IntegrityError("class " + std::to_string(tok.k) + " recovered twice");
      if (tok.w.size() != n_features) throw IntegrityError("class " + std::to_string(tok.k) + " has wrong length");
      found[tok.k] = true;
      std::ranges::copy(tok.w, W.row(tok.k).begin());
      if (versions) (*versions)[tok.k] = tok.version;
    }
  }
  for (std::size_t k = 0; k < n_classes; ++k) {
    if (!found[k]) throw IntegrityError("class " + std::to_string(k) + " lost");
  }
  return W;
}

namespace {

// Gathers each class vector as it completes a round (has been processed by
// every worker in that outer iteration). Once all K have completed round t
// the assembled W^t is handed to a logging thread, which evaluates it off the
// workers' critical path.
class RoundCollector {
 public:
  RoundCollector(const SparseDataset& data, const EngineConfig& cfg)
      : data_(data), cfg_(cfg), K_(data.n_classes) {}

  void submit(std::size_t t, const ClassToken& tok, double seconds) {
    std::lock_guard lock(mu_);
    Pending& pend = pending_[t];
    if (pend.count == 0) pend.W = DenseWeights(K_, data_.n_features);
    std::ranges::copy(tok.w, pend.W.row(tok.k).begin());
    pend.seconds = std::max(pend.seconds, seconds);
    if (++pend.count == K_) {
      ready_.push_back({t, std::move(pend.W), pend.seconds});
      pending_.erase(t);
      cv_.notify_one();
    }
  }

  void stop() {
    {
      std::lock_guard lock(mu_);
      stopped_ = true;
    }
    cv_.notify_all();
  }

  // Logging thread body. Returns once every iteration was logged or stop()
  // was called.
  void run() {
    std::size_t done = 0;
    while (done < cfg_.iterations) {
      Ready r;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return stopped_ || !ready_.empty(); });
        if (ready_.empty()) return;
        r = std::move(ready_.front());
        ready_.pop_front();
      }
      ProgressRecord rec;
      rec.iteration = r.t;
      rec.seconds = r.seconds;
      rec.objective = objective_l1(r.W, data_, cfg_.hyper);
      if (cfg_.evaluator && cfg_.eval_every > 0 && (r.t % cfg_.eval_every == 0 || r.t == cfg_.iterations)) {
        std::tie(rec.macro_f1, rec.micro_f1) = cfg_.evaluator(r.W);
      }
      log_.push_back(rec);
      ++done;
    }
  }

  ProgressLog take_log() { return std::move(log_); }

 private:
  struct Pending {
    std::size_t count = 0;
    DenseWeights W;
    double seconds = 0.0;
  };
  struct Ready {
    std::size_t t = 0;
    DenseWeights W;
    double seconds = 0.0;
  };

  const SparseDataset& data_;
  const EngineConfig& cfg_;
  const std::size_t K_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::size_t, Pending> pending_;
  std::deque<Ready> ready_;
  bool stopped_ = false;
  ProgressLog log_;  // touched only by the logging thread until joined
};

class AsyncRun {
 public:
  AsyncRun(const SparseDataset& data, const EngineConfig& cfg)
      : data_(data),
        cfg_(cfg),
        P_(cfg.workers),
        K_(data.n_classes),
        rows_(partition_rows(data.size(), cfg.workers)),
        queues_(cfg.workers),
        held_(cfg.workers),
        b_(data.size(), -std::log(static_cast<double>(data.n_classes))),
        collector_(data, cfg) {
    const ClassPartition owners = partition_classes(K_, P_, cfg.seed);
    std::uint64_t next_id = 0;
    for (std::size_t p = 0; p < P_; ++p) {
      for (std::size_t j = 0; j < owners[p].size(); j += cfg.packet_size) {
        TokenPacket pk;
        pk.id = next_id++;
        pk.visits.visited.assign(P_, false);
        for (std::size_t m = j; m < std::min(j + cfg.packet_size, owners[p].size()); ++m) {
          pk.tokens.push_back({owners[p][m], std::vector<double>(data.n_features, 0.0), 0});
        }
        queues_[p].push(std::move(pk));
      }
    }
    for (auto& h : held_) h.store(0);
  }

  TrainResult run() {
    std::thread logger([this] {
      try {
        collector_.run();
      } catch (...) {
        fail(std::current_exception());
      }
    });
    std::vector<std::thread> threads;
    threads.reserve(P_);
    for (std::size_t p = 0; p < P_; ++p) threads.emplace_back([this, p] { worker_main(p); });
    for (auto& th : threads) th.join();
    if (error_) collector_.stop();
    logger.join();
    if (error_) std::rethrow_exception(error_);

    TrainResult out;
    if (cfg_.check_invariants) audit_conservation();
    out.weights = drain_and_assemble(queues_, {}, K_, data_.n_features, &out.stats.final_versions);
    if (cfg_.check_invariants) {
      for (std::size_t k = 0; k < K_; ++k) {
        if (out.stats.final_versions[k] != cfg_.iterations * P_) {
          throw IntegrityError("class " + std::to_string(k) + " processed " +
                               std::to_string(out.stats.final_versions[k]) + " times, expected " +
                               std::to_string(cfg_.iterations * P_));
        }
      }
    }
    out.log = collector_.take_log();
    out.b = std::move(b_);
    out.stats.max_resident_vectors = max_resident_.load();
    out.stats.max_queue_depth = max_queue_depth_.load();
    out.stats.conservation_checks = audits_.load();
    out.stats.token_processings = processings_.load();
    return out;
  }

 private:
  void worker_main(std::size_t p) {
    try {
      worker_loop(p);
    } catch (...) {
      fail(std::current_exception());
    }
  }

  void fail(std::exception_ptr e) {
    {
      std::lock_guard lock(error_mu_);
      if (!error_) error_ = e;
    }
    for (TokenQueue& q : queues_) q.close();
  }

  std::optional<TokenPacket> receive(std::size_t p, std::uint64_t round) {
    if (!cfg_.check_invariants) {
      auto pk = queues_[p].pop_round(round);
      if (pk) held_[p] += pk->tokens.size();
      return pk;
    }
    // Audited mode: the transfer between queue and worker happens under the
    // shared side of transfer_mu_ so an audit never observes it half done.
    while (true) {
      {
        std::shared_lock lock(transfer_mu_);
        if (auto pk = queues_[p].try_pop_round(round)) {
          held_[p] += pk->tokens.size();
          return pk;
        }
      }
      if (!queues_[p].wait_round(round)) return std::nullopt;
    }
  }

  void send(std::size_t from, std::size_t to, TokenPacket pk) {
    const std::size_t n = pk.tokens.size();
    if (cfg_.check_invariants) {
      std::shared_lock lock(transfer_mu_);
      queues_[to].push(std::move(pk));
      held_[from] -= n;
    } else {
      queues_[to].push(std::move(pk));
      held_[from] -= n;
    }
    const std::size_t depth = queues_[to].token_count();
    std::size_t prev = max_queue_depth_.load();
    while (depth > prev && !max_queue_depth_.compare_exchange_weak(prev, depth)) {
    }
  }

  void audit_conservation() {
    std::unique_lock lock(transfer_mu_);
    std::size_t total = 0;
    for (const TokenQueue& q : queues_) total += q.token_count();
    for (const auto& h : held_) total += h.load();
    if (total != K_) {
      throw IntegrityError("token count " + std::to_string(total) + " != K=" + std::to_string(K_));
    }
    ++audits_;
  }

  void worker_loop(std::size_t p) {
    const RowRange rows = rows_[p];
    const Hyperparams& h = cfg_.hyper;
    const std::size_t cap = (K_ + P_ - 1) / P_;
    std::vector<LogSumExp> partial(rows.size());
    std::vector<bool> seen(K_, false);

    for (std::size_t t = 1; t <= cfg_.iterations; ++t) {
      const double step = h.step(t) * static_cast<double>(K_);
      const std::uint64_t round = t - 1;
      std::size_t processed = 0;
      std::fill(seen.begin(), seen.end(), false);

      while (processed < K_) {
        auto maybe = receive(p, round);
        if (!maybe) return;  // aborted elsewhere
        TokenPacket pk = std::move(*maybe);
        const std::size_t resident = held_[p].load();
        std::size_t prev = max_resident_.load();
        while (resident > prev && !max_resident_.compare_exchange_weak(prev, resident)) {
        }
        if (cfg_.check_invariants && resident > cap + cfg_.packet_size) {
          throw IntegrityError("worker " + std::to_string(p) + " holds " + std::to_string(resident) + " vectors");
        }

        for (ClassToken& tok : pk.tokens) {
          const ClassId k = tok.k;
          if (cfg_.check_invariants) {
            const std::uint64_t expected = round * P_ + pk.visits.visited_count();
            if (tok.version != expected || seen[k]) {
              throw IntegrityError("worker " + std::to_string(p) + " got class " + std::to_string(k) +
                                   " at version " + std::to_string(tok.version) + ", expected " +
                                   std::to_string(expected));
            }
          }
          seen[k] = true;
          const auto order = shuffled_rows(rows, cfg_.seed, p, t, k);
          try {
            sgd_pass(tok.w, k, order, data_, b_, step, h.lambda);
          } catch (const NumericError& e) {
            throw NumericError("async worker " + std::to_string(p) + ", iteration " + std::to_string(t) +
                               ", class " + std::to_string(k) + ": " + e.what());
          }
          ++tok.version;
          ++processings_;

          for (std::size_t i = rows.begin; i < rows.end; ++i) {
            partial[i - rows.begin].add(sparse_dot(tok.w, data_.rows[i]));
          }
          if (cfg_.recorder) cfg_.recorder->record({p, t, k, tok.version, tok.w});
          ++processed;
        }

        const std::size_t dest = route_next(pk.id, p, P_, cfg_.seed, pk.visits);
        if (pk.visits.round > round) {
          const double now = clock_.seconds();
          for (const ClassToken& tok : pk.tokens) collector_.submit(t, tok, now);
        }
        send(p, dest, std::move(pk));
      }

      for (std::size_t i = rows.begin; i < rows.end; ++i) {
        const LogSumExp& acc = partial[i - rows.begin];
        try {
          b_[i] = refresh_b(acc);
        } catch (const NumericError& e) {
          throw NumericError("async worker " + std::to_string(p) + ", iteration " + std::to_string(t) +
                             ", row " + std::to_string(i) + ": " + e.what());
        }
        partial[i - rows.begin] = LogSumExp{};
      }
      if (cfg_.check_invariants) audit_conservation();
    }
  }

  const SparseDataset& data_;
  const EngineConfig& cfg_;
  const std::size_t P_;
  const std::size_t K_;
  const RowPartition rows_;
  std::vector<TokenQueue> queues_;
  std::vector<std::atomic<std::size_t>> held_;
  // Each worker writes only the entries of its own rows.
  std::vector<double> b_;

  std::shared_mutex transfer_mu_;
  std::mutex error_mu_;
  std::exception_ptr error_;

  RoundCollector collector_;
  Stopwatch clock_;

  std::atomic<std::size_t> max_resident_{0};
  std::atomic<std::size_t> max_queue_depth_{0};
  std::atomic<std::size_t> audits_{0};
  std::atomic<std::size_t> processings_{0};
};

}  // namespace

TrainResult run_async(const SparseDataset& data, const EngineConfig& cfg) {
  validate_engine_input(data, cfg);
  AsyncRun run(data, cfg);
  return run.run();
}

}  // namespace dsmlr
