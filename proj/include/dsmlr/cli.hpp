#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace dsmlr::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kDataError = 3,
  kNumericFailure = 4,
};

enum class Algorithm { Serial, Sync, Async, Oracle };

struct TrainConfig {
  Algorithm algorithm = Algorithm::Async;
  std::string train_path;
  std::string test_path;  // optional
  double lambda = 1e-3;
  double eta0 = 0.05;
  std::size_t iterations = 100;
  std::size_t workers = 1;
  std::uint64_t seed = 1;
  std::size_t eval_every = 1;
  std::string out_model = "model.bin";
  std::string out_progress = "progress.tsv";
  bool zero_based = false;
  std::size_t packet_size = 1;
  bool check_invariants = false;
};

struct EvalConfig {
  std::string model_path;
  std::string test_path;
  std::string out_cdf;          // empty: print the table to stdout
  std::string out_predictions;  // empty: no dump
  bool zero_based = false;
};

struct SynthConfig {
  std::string out_path;
  std::size_t rows = 200;
  std::size_t features = 20;
  std::size_t classes = 10;
  std::uint64_t seed = 7;
  double density = 0.5;
  double noise = 0.6;
  bool zero_based = false;
};

int cmd_train(const TrainConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_synth(const SynthConfig& cfg, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches to a subcommand. Unknown flags are rejected
/// before any file is opened.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dsmlr::cli
