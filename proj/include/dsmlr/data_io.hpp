#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dsmlr/types.hpp"

namespace dsmlr {

/// Original label strings mapped to dense class ids in first-appearance order.
class LabelMap {
 public:
  ClassId intern(const std::string& name);
  std::optional<ClassId> find(const std::string& name) const;
  const std::string& name(ClassId id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  friend bool operator==(const LabelMap& a, const LabelMap& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, ClassId> ids_;
};

struct ParseOptions {
  bool zero_based = false;
  /// Fixes D. Indices at or beyond it are a parse error unless
  /// truncate_extra_features is set, in which case they are dropped.
  std::optional<std::size_t> expected_features;
  bool truncate_extra_features = false;
  /// Labels seen here keep their ids; new labels are appended after them.
  LabelMap initial_labels;
};

struct ParsedDataset {
  SparseDataset data;
  LabelMap labels;
  std::size_t unsorted_rows = 0;       // rows whose indices had to be sorted
  std::size_t dropped_features = 0;    // entries removed by truncation
  std::size_t explicit_zeros = 0;      // idx:0 entries skipped
};

/// Reads "<label> <idx>:<val> ..." lines. Blank lines and '#' comments are
/// skipped. Throws DataError with the 1-based line number on malformed input.
ParsedDataset parse_libsvm(std::istream& in, const ParseOptions& opts = {});
ParsedDataset load_libsvm(const std::string& path, const ParseOptions& opts = {});

void write_libsvm(std::ostream& out, const SparseDataset& data, const LabelMap& labels,
                  bool zero_based = false);

struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  friend bool operator==(const RowRange&, const RowRange&) = default;
};

/// Balanced contiguous ranges; the first N % P workers get one extra row.
using RowPartition = std::vector<RowRange>;
RowPartition partition_rows(std::size_t n_rows, std::size_t workers);

/// Worker id -> sorted class ids. Classes are shuffled with the seed and dealt
/// round-robin, so sizes differ by at most one.
using ClassPartition = std::vector<std::vector<ClassId>>;
ClassPartition partition_classes(std::size_t n_classes, std::size_t workers, std::uint64_t seed);

/// Contiguous balanced class blocks (the ring engine's layout).
ClassPartition contiguous_class_blocks(std::size_t n_classes, std::size_t workers);

struct Model {
  DenseWeights weights;
  LabelMap labels;
  std::uint64_t n_train_rows = 0;
  double lambda = 0.0;
};

// Checkpoint layout, all integers and doubles little-endian:
//   bytes 0..7    magic "DSMLRCK1"
//   u64 N, u64 D, u64 K, f64 lambda
//   K times: u32 byte length, label bytes (no terminator)
//   K*D f64, class-major (row k is w_k)
void write_checkpoint(std::ostream& out, const Model& model);
Model read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const Model& model);
Model load_checkpoint(const std::string& path);

}  // namespace dsmlr
