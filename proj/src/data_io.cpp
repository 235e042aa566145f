#include "dsmlr/data_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <string_view>

#include "dsmlr/rng.hpp"

namespace dsmlr {

ClassId LabelMap::intern(const std::string& name) {
  auto it = ids_.find(name);
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<ClassId>(names_.size());
  names_.push_back(name);
  ids_.emplace(name, id);
  return id;
}

std::optional<ClassId> LabelMap::find(const std::string& name) const {
  auto it = ids_.find(name);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

namespace {

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
  throw DataError("line " + std::to_string(line_no) + ": " + what);
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

std::string_view next_token(std::string_view& rest) {
  std::size_t b = 0;
  while (b < rest.size() && is_space(rest[b])) ++b;
  std::size_t e = b;
  while (e < rest.size() && !is_space(rest[e])) ++e;
  std::string_view tok = rest.substr(b, e - b);
  rest.remove_prefix(e);
  return tok;
}

}  // namespace

ParsedDataset parse_libsvm(std::istream& in, const ParseOptions& opts) {
  ParsedDataset out;
  out.labels = opts.initial_labels;
  std::size_t max_index_plus_one = 0;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::pair<FeatureId, double>> entries;

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view rest(line);
    if (auto hash = rest.find('#'); hash != std::string_view::npos) rest = rest.substr(0, hash);
    std::string_view label = next_token(rest);
    if (label.empty()) continue;
    if (label.find(':') != std::string_view::npos) parse_fail(line_no, "missing label");

    entries.clear();
    for (std::string_view tok = next_token(rest); !tok.empty(); tok = next_token(rest)) {
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos || colon == 0 || colon + 1 == tok.size()) {
        parse_fail(line_no, "expected <index>:<value>, got '" + std::string(tok) + "'");
      }
      std::uint64_t idx = 0;
      auto [p1, e1] = std::from_chars(tok.data(), tok.data() + colon, idx);
      if (e1 != std::errc() || p1 != tok.data() + colon) {
        parse_fail(line_no, "bad feature index '" + std::string(tok.substr(0, colon)) + "'");
      }
      double val = 0.0;
      const char* vb = tok.data() + colon + 1;
      auto [p2, e2] = std::from_chars(vb, tok.data() + tok.size(), val);
      if (e2 != std::errc() || p2 != tok.data() + tok.size() || !std::isfinite(val)) {
        parse_fail(line_no, "bad feature value '" + std::string(tok.substr(colon + 1)) + "'");
      }
      if (!opts.zero_based) {
        if (idx == 0) parse_fail(line_no, "feature index 0 in 1-based input");
        --idx;
      }
      if (idx > std::numeric_limits<FeatureId>::max()) parse_fail(line_no, "feature index too large");
      if (opts.expected_features && idx >= *opts.expected_features) {
        if (!opts.truncate_extra_features) {
          parse_fail(line_no, "feature index " + std::to_string(idx) + " exceeds expected D=" +
                                  std::to_string(*opts.expected_features));
        }
        ++out.dropped_features;
        continue;
      }
      if (val == 0.0) {
        ++out.explicit_zeros;
        continue;
      }
      entries.emplace_back(static_cast<FeatureId>(idx), val);
    }

    if (!std::is_sorted(entries.begin(), entries.end(),
                        [](const auto& a, const auto& b) { return a.first < b.first; })) {
      std::sort(entries.begin(), entries.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      ++out.unsorted_rows;
    }
    SparseRow row;
    row.indices.reserve(entries.size());
    row.values.reserve(entries.size());
    for (const auto& [f, v] : entries) {
      if (!row.indices.empty() && row.indices.back() == f) {
        parse_fail(line_no, "duplicate feature index " + std::to_string(f));
      }
      row.indices.push_back(f);
      row.values.push_back(v);
    }
    if (!row.indices.empty()) max_index_plus_one = std::max<std::size_t>(max_index_plus_one, row.indices.back() + 1);

    out.data.labels.push_back(out.labels.intern(std::string(label)));
    out.data.rows.push_back(std::move(row));
  }
  if (in.bad()) throw DataError("read error after line " + std::to_string(line_no));

  out.data.n_features = opts.expected_features.value_or(max_index_plus_one);
  out.data.n_classes = out.labels.size();
  return out;
}

ParsedDataset load_libsvm(const std::string& path, const ParseOptions& opts) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return parse_libsvm(in, opts);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_libsvm(std::ostream& out, const SparseDataset& data, const LabelMap& labels,
                  bool zero_based) {
  std::array<char, 64> buf{};
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << labels.name(data.labels[i]);
    const SparseRow& r = data.rows[i];
    for (std::size_t j = 0; j < r.nnz(); ++j) {
      auto res = std::to_chars(buf.data(), buf.data() + buf.size(), r.values[j]);
      out << ' ' << (r.indices[j] + (zero_based ? 0 : 1)) << ':'
          << std::string_view(buf.data(), static_cast<std::size_t>(res.ptr - buf.data()));
    }
    out << '\n';
  }
}

RowPartition partition_rows(std::size_t n_rows, std::size_t workers) {
  if (workers == 0) throw StructuralError("partition_rows: need at least one worker");
  if (workers > n_rows) {
    throw StructuralError("partition_rows: " + std::to_string(workers) + " workers for " +
                          std::to_string(n_rows) + " rows");
  }
  RowPartition parts(workers);
  const std::size_t base = n_rows / workers;
  const std::size_t extra = n_rows % workers;
  std::size_t begin = 0;
  for (std::size_t p = 0; p < workers; ++p) {
    const std::size_t len = base + (p < extra ? 1 : 0);
    parts[p] = {begin, begin + len};
    begin += len;
  }
  return parts;
}

ClassPartition partition_classes(std::size_t n_classes, std::size_t workers, std::uint64_t seed) {
  if (workers == 0) throw StructuralError("partition_classes: need at least one worker");
  if (n_classes < workers) {
    throw StructuralError("partition_classes: " + std::to_string(n_classes) + " classes for " +
                          std::to_string(workers) + " workers");
  }
  std::vector<ClassId> order(n_classes);
  std::iota(order.begin(), order.end(), ClassId{0});
  std::mt19937_64 gen(derive_seed(seed, {0xC1A55ULL}));
  std::shuffle(order.begin(), order.end(), gen);
  ClassPartition parts(workers);
  for (std::size_t j = 0; j < n_classes; ++j) parts[j % workers].push_back(order[j]);
  for (auto& p : parts) std::sort(p.begin(), p.end());
  return parts;
}

ClassPartition contiguous_class_blocks(std::size_t n_classes, std::size_t workers) {
  const RowPartition ranges = partition_rows(n_classes, workers);
  ClassPartition parts(workers);
  for (std::size_t p = 0; p < workers; ++p) {
    for (std::size_t k = ranges[p].begin; k < ranges[p].end; ++k) parts[p].push_back(static_cast<ClassId>(k));
  }
  return parts;
}

namespace {

constexpr std::string_view kMagic = "DSMLRCK1";

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b.data(), 8);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b.data(), 4);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_uint(std::istream& in, int bytes) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), bytes);
  if (in.gcount() != bytes) throw DataError("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_uint(in, 8)); }

}  // namespace

void write_checkpoint(std::ostream& out, const Model& model) {
  const DenseWeights& W = model.weights;
  if (model.labels.size() != W.n_classes()) {
    throw StructuralError("checkpoint: label map has " + std::to_string(model.labels.size()) +
                          " entries for K=" + std::to_string(W.n_classes()));
  }
  out.write(kMagic.data(), static_cast<std::streamsize>(kMagic.size()));
  put_u64(out, model.n_train_rows);
  put_u64(out, W.n_features());
  put_u64(out, W.n_classes());
  put_f64(out, model.lambda);
  for (const std::string& name : model.labels.names()) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  for (double v : W.flat()) put_f64(out, v);
  if (!out) throw DataError("checkpoint write failed");
}

Model read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), 8);
  if (in.gcount() != 8 || std::string_view(magic.data(), 8) != kMagic) {
    throw DataError("not a checkpoint (bad magic)");
  }
  Model m;
  m.n_train_rows = get_uint(in, 8);
  const std::uint64_t D = get_uint(in, 8);
  const std::uint64_t K = get_uint(in, 8);
  m.lambda = get_f64(in);
  constexpr std::uint64_t kLimit = std::uint64_t{1} << 40;
  if (K == 0 || K > kLimit || D > kLimit || K * D > kLimit) throw DataError("checkpoint: implausible shape");
  for (std::uint64_t k = 0; k < K; ++k) {
    const auto len = static_cast<std::size_t>(get_uint(in, 4));
    if (len > (1u << 20)) throw DataError("checkpoint: label too long");
    std::string name(len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(len));
    if (static_cast<std::size_t>(in.gcount()) != len) throw DataError("checkpoint truncated");
    if (m.labels.intern(name) != k) throw DataError("checkpoint: duplicate label '" + name + "'");
  }
  m.weights = DenseWeights(K, D);
  for (double& v : m.weights.flat()) v = get_f64(in);
  return m;
}

void save_checkpoint(const std::string& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  write_checkpoint(out, model);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  try {
    return read_checkpoint(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

}  // namespace dsmlr
