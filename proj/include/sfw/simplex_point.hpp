#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace sfw {

// Sparse point on the unit simplex: support indices, parallel weights, and an
// inverse index for O(1) lookup. The support list is unordered; removal swaps
// with the last slot.
class SimplexPoint {
 public:
  SimplexPoint() = default;
  explicit SimplexPoint(std::int32_t dim) : slot_(static_cast<std::size_t>(dim), -1) {}

  std::int32_t dim() const { return static_cast<std::int32_t>(slot_.size()); }
  std::int32_t support_size() const { return static_cast<std::int32_t>(support_.size()); }
  std::span<const std::int32_t> support() const { return support_; }
  std::span<const double> weights() const { return weights_; }

  bool contains(std::int32_t i) const { return slot_[static_cast<std::size_t>(i)] >= 0; }

  double operator[](std::int32_t i) const {
    const std::int32_t s = slot_[static_cast<std::size_t>(i)];
    return s >= 0 ? weights_[static_cast<std::size_t>(s)] : 0.0;
  }

  void clear() {
    for (const std::int32_t i : support_) slot_[static_cast<std::size_t>(i)] = -1;
    support_.clear();
    weights_.clear();
  }

  // O(|support|) copy; reuses this point's storage.
  void assign_from(const SimplexPoint& other) {
    clear();
    if (slot_.size() != other.slot_.size()) slot_.assign(other.slot_.size(), -1);
    support_ = other.support_;
    weights_ = other.weights_;
    for (std::size_t s = 0; s < support_.size(); ++s)
      slot_[static_cast<std::size_t>(support_[s])] = static_cast<std::int32_t>(s);
  }

  void set(std::int32_t i, double w) {
    const std::int32_t s = slot_[static_cast<std::size_t>(i)];
    if (w == 0.0) {
      if (s >= 0) remove_slot(s);
      return;
    }
    if (s >= 0) {
      weights_[static_cast<std::size_t>(s)] = w;
    } else {
      slot_[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(support_.size());
      support_.push_back(i);
      weights_.push_back(w);
    }
  }

  void add(std::int32_t i, double w) {
    const std::int32_t s = slot_[static_cast<std::size_t>(i)];
    if (s >= 0) {
      weights_[static_cast<std::size_t>(s)] += w;
    } else if (w != 0.0) {
      slot_[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(support_.size());
      support_.push_back(i);
      weights_.push_back(w);
    }
  }

  void scale(double c) {
    for (double& w : weights_) w *= c;
  }

  double sum() const {
    double s = 0.0;
    for (const double w : weights_) s += w;
    return s;
  }

  double min_weight() const {
    double lo = weights_.empty() ? 0.0 : weights_.front();
    for (const double w : weights_) lo = w < lo ? w : lo;
    return lo;
  }

  // First support entry with weight below `tol`, or -1.
  std::int32_t find_below(double tol) const {
    for (std::size_t s = 0; s < support_.size(); ++s)
      if (weights_[s] < tol) return support_[s];
    return -1;
  }

 private:
  void remove_slot(std::int32_t s) {
    const auto us = static_cast<std::size_t>(s);
    const std::int32_t index = support_[us];
    const std::size_t last = support_.size() - 1;
    if (us != last) {
      support_[us] = support_[last];
      weights_[us] = weights_[last];
      slot_[static_cast<std::size_t>(support_[us])] = s;
    }
    support_.pop_back();
    weights_.pop_back();
    slot_[static_cast<std::size_t>(index)] = -1;
  }

  std::vector<std::int32_t> support_;
  std::vector<double> weights_;
  std::vector<std::int32_t> slot_;  // index -> position in support_, or -1
};

}  // namespace sfw
