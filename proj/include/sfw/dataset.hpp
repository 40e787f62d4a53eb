#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sfw/rng.hpp"

namespace sfw {

// One term of a sparse feature vector. Indices are 0-based in memory; the
// LIBSVM text format is 1-based and the conversion happens only at the
// parse/write boundary.
struct Feature {
  std::int32_t index = 0;
  double value = 0.0;
};

struct SparseExample {
  std::int8_t label = 1;  // -1 or +1
  std::vector<Feature> features;  // strictly ascending indices
};

struct Dataset {
  std::vector<SparseExample> examples;
  std::int32_t n_features = 0;  // highest 1-based feature index seen
  std::string name;

  std::int64_t size() const { return static_cast<std::int64_t>(examples.size()); }
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::int64_t line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}

  std::int64_t line() const { return line_; }

 private:
  std::int64_t line_;
};

namespace detail {

inline bool parse_full_double(std::string_view token, double& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const char* first = token.data();
  const char* last = token.data() + token.size();
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc{} && res.ptr == last;
}

inline bool parse_full_int(std::string_view token, std::int64_t& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const char* first = token.data();
  const char* last = token.data() + token.size();
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc{} && res.ptr == last;
}

inline void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace detail

// Parses the LIBSVM text format: `<label> <index>:<value> ...` per line,
// whitespace separated, 1-based strictly ascending indices, `#` starts a
// comment. Source labels may be any two distinct numeric values ({0,1},
// {1,2}, {-1,+1}, ...); the smaller one maps to -1, the larger to +1.
inline Dataset parse_libsvm(std::istream& in, std::string name = "") {
  Dataset d;
  d.name = std::move(name);
  std::vector<double> raw_labels;
  double seen_labels[2] = {0.0, 0.0};
  int distinct = 0;

  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text(line);
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    while (!text.empty() && (text.back() == '\r' || text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);

    std::size_t pos = 0;
    auto next_token = [&]() -> std::string_view {
      while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
      const std::size_t start = pos;
      while (pos < text.size() && text[pos] != ' ' && text[pos] != '\t') ++pos;
      return text.substr(start, pos - start);
    };

    const std::string_view label_token = next_token();
    if (label_token.empty()) continue;  // blank or comment-only line

    double raw = 0.0;
    if (!detail::parse_full_double(label_token, raw) || !std::isfinite(raw))
      throw ParseError(line_no, "malformed label '" + std::string(label_token) + "'");

    bool known = false;
    for (int i = 0; i < distinct; ++i) known = known || seen_labels[i] == raw;
    if (!known) {
      if (distinct == 2) throw ParseError(line_no, "more than two distinct labels");
      seen_labels[distinct++] = raw;
    }

    SparseExample ex;
    std::int64_t prev_index = 0;
    for (std::string_view token = next_token(); !token.empty(); token = next_token()) {
      const auto colon = token.find(':');
      if (colon == std::string_view::npos)
        throw ParseError(line_no, "malformed feature '" + std::string(token) + "'");
      std::int64_t index = 0;
      double value = 0.0;
      if (!detail::parse_full_int(token.substr(0, colon), index) ||
          !detail::parse_full_double(token.substr(colon + 1), value))
        throw ParseError(line_no, "malformed feature '" + std::string(token) + "'");
      if (index < 1) throw ParseError(line_no, "feature index must be >= 1");
      if (index == prev_index)
        throw ParseError(line_no, "duplicate feature index " + std::to_string(index));
      if (index < prev_index)
        throw ParseError(line_no, "non-ascending feature index " + std::to_string(index));
      if (!std::isfinite(value))
        throw ParseError(line_no, "non-finite value at index " + std::to_string(index));
      prev_index = index;
      ex.features.push_back({static_cast<std::int32_t>(index - 1), value});
      d.n_features = std::max(d.n_features, static_cast<std::int32_t>(index));
    }
    raw_labels.push_back(raw);
    d.examples.push_back(std::move(ex));
  }

  if (distinct < 2) throw std::runtime_error("fewer than two distinct labels in input");
  const double negative_raw = std::min(seen_labels[0], seen_labels[1]);
  for (std::size_t i = 0; i < raw_labels.size(); ++i)
    d.examples[i].label = raw_labels[i] == negative_raw ? std::int8_t{-1} : std::int8_t{1};
  return d;
}

inline Dataset parse_libsvm_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  auto slash = path.find_last_of('/');
  return parse_libsvm(in, slash == std::string::npos ? path : path.substr(slash + 1));
}

inline void write_libsvm(const Dataset& d, std::ostream& out) {
  std::string line;
  for (const auto& ex : d.examples) {
    line.clear();
    line += ex.label > 0 ? "+1" : "-1";
    for (const auto& f : ex.features) {
      line += ' ';
      line += std::to_string(f.index + 1);
      line += ':';
      detail::append_double(line, f.value);
    }
    line += '\n';
    out << line;
  }
}

struct DatasetStats {
  std::int64_t m = 0;
  std::int32_t n = 0;
  std::int64_t positives = 0;
  std::int64_t negatives = 0;
  double mean_nonzeros = 0.0;
};

inline DatasetStats dataset_stats(const Dataset& d) {
  if (d.examples.empty()) throw std::invalid_argument("dataset_stats: empty dataset");
  DatasetStats s;
  s.m = d.size();
  s.n = d.n_features;
  std::int64_t nnz = 0;
  for (const auto& ex : d.examples) {
    (ex.label > 0 ? s.positives : s.negatives)++;
    nnz += static_cast<std::int64_t>(ex.features.size());
  }
  s.mean_nonzeros = static_cast<double>(nnz) / static_cast<double>(s.m);
  return s;
}

// Deterministic random partition; the first part receives round(fraction * m)
// examples. Same seed, same partition.
inline std::pair<Dataset, Dataset> split_train_validation(const Dataset& d, double fraction,
                                                          std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("split fraction must lie in (0,1)");
  if (d.size() < 2) throw std::invalid_argument("split needs at least two examples");

  std::vector<std::int64_t> order(d.examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::int64_t>(i);
  Rng rng(seed);
  rng.shuffle(order);

  const auto first_size =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(d.size())));
  Dataset a, b;
  a.n_features = b.n_features = d.n_features;
  a.name = d.name + "/train";
  b.name = d.name + "/valid";
  a.examples.reserve(first_size);
  b.examples.reserve(order.size() - first_size);
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < first_size ? a : b).examples.push_back(d.examples[static_cast<std::size_t>(order[i])]);
  return {std::move(a), std::move(b)};
}

}  // namespace sfw
