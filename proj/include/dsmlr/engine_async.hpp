#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <vector>

#include "dsmlr/engine.hpp"

namespace dsmlr {

/// A class vector in transit. Owned by exactly one queue or worker.
struct ClassToken {
  ClassId k = 0;
  std::vector<double> w;
  std::uint64_t version = 0;  // passes applied so far
};

/// Which workers a packet has visited in its current round. A round is one
/// outer iteration from the packet's point of view.
struct VisitState {
  std::uint64_t round = 0;
  std::vector<bool> visited;

  std::size_t visited_count() const;
};

/// The unit that migrates between queues: one or more class tokens sharing a
/// route. With the default packet size every packet carries a single class.
struct TokenPacket {
  std::uint64_t id = 0;
  std::vector<ClassToken> tokens;
  VisitState visits;
};

/// Picks the next worker for a packet that was just processed. Chooses
/// uniformly among workers not yet visited this round; when every worker has
/// been visited the state advances to the next round, the visit set is
/// cleared, and the choice is uniform over all workers. The choice depends
/// only on (seed, packet id, round, visited count).
std::size_t route_next(std::uint64_t packet_id, std::size_t current_worker, std::size_t workers,
                       std::uint64_t seed, VisitState& state);

/// Many-producer single-consumer inbox with blocking, round-filtered pop.
class TokenQueue {
 public:
  void push(TokenPacket packet);
  /// Blocks until a packet in `round` is queued (returned) or the queue is
  /// closed (nullopt). Packets of later rounds stay queued.
  std::optional<TokenPacket> pop_round(std::uint64_t round);
  /// Non-blocking variant used by the invariant audits.
  std::optional<TokenPacket> try_pop_round(std::uint64_t round);
  /// Blocks until a packet in `round` is queued (true) or the queue is closed.
  bool wait_round(std::uint64_t round);
  void close();
  std::size_t token_count() const;
  std::size_t packet_count() const;
  /// Removes everything, regardless of round.
  std::vector<TokenPacket> drain();

 private:
  std::optional<TokenPacket> take_locked(std::uint64_t round);

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<TokenPacket> packets_;
  std::size_t tokens_ = 0;
  bool closed_ = false;
};

/// Rebuilds the full weight matrix from every queue and any packets still
/// held. Throws IntegrityError on a missing or duplicated class.
DenseWeights drain_and_assemble(std::vector<TokenQueue>& queues, std::vector<TokenPacket> held,
                                std::size_t n_classes, std::size_t n_features,
                                std::vector<std::uint64_t>* versions = nullptr);

/// Asynchronous token passing: class packets start in seeded random queues;
/// each worker pops a packet, runs one stochastic pass per class over its
/// rows, adds the resulting exp terms to its partial sums, and routes the
/// packet onward. After processing all K classes of an iteration it refreshes
/// its own b values, without waiting for other workers.
TrainResult run_async(const SparseDataset& data, const EngineConfig& cfg);

}  // namespace dsmlr
