#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "sfw/dataset.hpp"
#include "sfw/rng.hpp"

namespace sfw {

// Two seeded Gaussian blobs in the plane, labels alternating so the classes
// stay balanced. The default separation leaves the classes overlapping, which
// gives the solvers a realistically dense support to work on. Lets the test
// and benchmark suites run without any external dataset.
inline Dataset make_two_blobs(std::int32_t m, std::uint64_t seed, double separation = 1.2,
                              double sigma = 1.0) {
  if (m < 2) throw std::invalid_argument("synthetic dataset needs at least two examples");
  Rng rng(seed);
  Dataset d;
  d.n_features = 2;
  d.name = "blobs-m" + std::to_string(m) + "-s" + std::to_string(seed);
  d.examples.reserve(static_cast<std::size_t>(m));
  for (std::int32_t i = 0; i < m; ++i) {
    const std::int8_t label = (i % 2 == 0) ? std::int8_t{1} : std::int8_t{-1};
    const double center = static_cast<double>(label) * separation;
    SparseExample ex;
    ex.label = label;
    ex.features = {{0, center + sigma * rng.next_normal()},
                   {1, center + sigma * rng.next_normal()}};
    d.examples.push_back(std::move(ex));
  }
  return d;
}

}  // namespace sfw
