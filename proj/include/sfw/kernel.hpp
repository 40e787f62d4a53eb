#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <list>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "sfw/dataset.hpp"
#include "sfw/rng.hpp"

namespace sfw {

struct KernelParams {
  double gamma = 1.0;   // RBF width, k(x,y) = exp(-gamma * ||x-y||^2)
  double C = 1.0;       // L2-SVM regularization; contributes delta_ij / C
  bool add_bias = true; // absorb the bias via the +1 kernel offset
};

inline void validate(const KernelParams& p) {
  if (!(p.gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  if (!(p.C > 0.0)) throw std::invalid_argument("C must be positive");
}

inline double squared_distance(std::span<const Feature> a, std::span<const Feature> b) {
  double d2 = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].index == b[j].index) {
      const double t = a[i].value - b[j].value;
      d2 += t * t;
      ++i;
      ++j;
    } else if (a[i].index < b[j].index) {
      d2 += a[i].value * a[i].value;
      ++i;
    } else {
      d2 += b[j].value * b[j].value;
      ++j;
    }
  }
  for (; i < a.size(); ++i) d2 += a[i].value * a[i].value;
  for (; j < b.size(); ++j) d2 += b[j].value * b[j].value;
  return d2;
}

inline double squared_distance(const SparseExample& a, const SparseExample& b) {
  return squared_distance(std::span<const Feature>(a.features), std::span<const Feature>(b.features));
}

inline double rbf(std::span<const Feature> a, std::span<const Feature> b, double gamma) {
  return std::exp(-gamma * squared_distance(a, b));
}

inline double rbf(const SparseExample& a, const SparseExample& b, double gamma) {
  return std::exp(-gamma * squared_distance(a, b));
}

// Bounded LRU store for kernel columns. A cached column is the exact vector
// the fresh computation would produce, so reads are transparent.
class ColumnCache {
 public:
  explicit ColumnCache(std::size_t capacity) : capacity_(capacity < 1 ? 1 : capacity) {}

  const std::vector<double>* find(std::int32_t j) {
    const auto it = entries_.find(j);
    if (it == entries_.end()) {
      ++misses_;
      return nullptr;
    }
    ++hits_;
    order_.splice(order_.begin(), order_, it->second.lru);
    return &it->second.column;
  }

  // only called after a miss on j
  const std::vector<double>& insert(std::int32_t j, std::vector<double> column) {
    if (entries_.size() >= capacity_) {
      entries_.erase(order_.back());
      order_.pop_back();
    }
    order_.push_front(j);
    return entries_.emplace(j, Entry{std::move(column), order_.begin()}).first->second.column;
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  struct Entry {
    std::vector<double> column;
    std::list<std::int32_t>::iterator lru;
  };

  std::size_t capacity_;
  std::list<std::int32_t> order_;  // most recent first
  std::unordered_map<std::int32_t, Entry> entries_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

// Effective L2-SVM kernel over a dataset:
//
//   K_ij = y_i y_j (k(x_i, x_j) + bias) + delta_ij / C,  bias in {0, 1}.
//
// Positive definite for any gamma, C > 0. Columns are memoized (LRU) because
// the solvers revisit recent vertices; the diagonal is a constant. The cache
// is mutable state behind a const read surface: one solver thread owns an
// instance (single-writer contract).
class EffectiveKernel {
 public:
  EffectiveKernel(const Dataset& data, KernelParams params,
                  std::size_t cache_bytes = std::size_t{1} << 30)
      : data_(&data),
        params_(params),
        cache_(columns_for_budget(cache_bytes, data.size())) {
    validate(params_);
    if (data.examples.empty()) throw std::invalid_argument("effective kernel over empty dataset");
    const double bias = params_.add_bias ? 1.0 : 0.0;
    diagonal_ = 1.0 * (1.0 + bias) + 1.0 / params_.C;
  }

  std::int32_t size() const { return static_cast<std::int32_t>(data_->size()); }

  double entry(std::int32_t i, std::int32_t j) const {
    const auto& xs = data_->examples;
    const double bias = params_.add_bias ? 1.0 : 0.0;
    const double sign = static_cast<double>(xs[static_cast<std::size_t>(i)].label) *
                        static_cast<double>(xs[static_cast<std::size_t>(j)].label);
    double v = sign * (rbf(xs[static_cast<std::size_t>(i)], xs[static_cast<std::size_t>(j)],
                           params_.gamma) +
                       bias);
    if (i == j) v += 1.0 / params_.C;
    return v;
  }

  double diag(std::int32_t) const { return diagonal_; }

  // Valid until the next column() call on this kernel.
  std::span<const double> column(std::int32_t j) const {
    if (const auto* hit = cache_.find(j)) return {hit->data(), hit->size()};
    std::vector<double> col(static_cast<std::size_t>(size()));
    for (std::int32_t i = 0; i < size(); ++i) col[static_cast<std::size_t>(i)] = entry(i, j);
    const auto& stored = cache_.insert(j, std::move(col));
    return {stored.data(), stored.size()};
  }

  const KernelParams& params() const { return params_; }
  const Dataset& data() const { return *data_; }
  const ColumnCache& cache() const { return cache_; }

  static std::size_t columns_for_budget(std::size_t bytes, std::int64_t m) {
    const std::size_t per_column = sizeof(double) * static_cast<std::size_t>(m < 1 ? 1 : m);
    const std::size_t columns = bytes / per_column;
    return columns < 2 ? 2 : columns;
  }

 private:
  const Dataset* data_;
  KernelParams params_;
  mutable ColumnCache cache_;
  double diagonal_ = 0.0;
};

// Explicit symmetric matrix, row-major. Used for plain simplex QPs and in
// tests; column j aliases row j directly.
class DenseKernel {
 public:
  DenseKernel(std::int32_t n, std::vector<double> values) : n_(n), values_(std::move(values)) {
    if (values_.size() != static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_))
      throw std::invalid_argument("dense kernel: size mismatch");
  }

  static DenseKernel identity(std::int32_t n) {
    std::vector<double> v(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    for (std::int32_t i = 0; i < n; ++i)
      v[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] = 1.0;
    return DenseKernel(n, std::move(v));
  }

  std::int32_t size() const { return n_; }

  double entry(std::int32_t i, std::int32_t j) const {
    return values_[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) +
                   static_cast<std::size_t>(j)];
  }

  double diag(std::int32_t i) const { return entry(i, i); }

  std::span<const double> column(std::int32_t j) const {
    return {values_.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(n_),
            static_cast<std::size_t>(n_)};
  }

 private:
  std::int32_t n_;
  std::vector<double> values_;
};

template <class K>
concept KernelMatrix = requires(const K& k, std::int32_t i) {
  { k.size() } -> std::convertible_to<std::int32_t>;
  { k.entry(i, i) } -> std::convertible_to<double>;
  { k.diag(i) } -> std::convertible_to<double>;
  { k.column(i) } -> std::convertible_to<std::span<const double>>;
};

// Kernel width heuristic: inverse mean squared pairwise distance over a
// seeded sample of at most `sample_size` points.
inline double gamma_heuristic(const Dataset& d, std::int32_t sample_size = 1000,
                              std::uint64_t seed = 0) {
  const auto m = static_cast<std::int32_t>(d.size());
  if (m < 2) throw std::invalid_argument("width heuristic needs at least two examples");
  const std::int32_t k = sample_size < m ? sample_size : m;
  if (k < 2) throw std::invalid_argument("width heuristic needs a sample of at least two points");

  std::vector<std::int32_t> idx(static_cast<std::size_t>(m));
  for (std::int32_t i = 0; i < m; ++i) idx[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  for (std::int32_t i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(i) +
                   static_cast<std::size_t>(rng.next_below(static_cast<std::uint64_t>(m - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
  }

  double total = 0.0;
  for (std::int32_t a = 0; a < k; ++a)
    for (std::int32_t b = a + 1; b < k; ++b)
      total += squared_distance(d.examples[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])],
                                d.examples[static_cast<std::size_t>(idx[static_cast<std::size_t>(b)])]);
  const double pairs = 0.5 * static_cast<double>(k) * static_cast<double>(k - 1);
  const double mean = total / pairs;
  if (!(mean > 0.0)) throw std::runtime_error("degenerate data for width heuristic");
  return 1.0 / mean;
}

}  // namespace sfw
