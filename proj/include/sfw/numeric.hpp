#pragma once

#include <cmath>
#include <stdexcept>

namespace sfw {

// Golden-section search for a unimodal function on [lo, hi]. Returns the
// minimizer within `tol`. Test suites use this as the independent check for
// every closed-form steplength; the function may return long double so the
// comparisons resolve below the double noise floor.
template <class F>
double golden_section_minimize(F&& phi, double lo, double hi, double tol = 1e-10) {
  if (!(lo <= hi)) throw std::invalid_argument("golden section: empty interval");
  constexpr double inv_phi = 0.6180339887498949;  // (sqrt(5) - 1) / 2
  double a = lo, b = hi;
  if (b - a <= tol) return 0.5 * (a + b);

  auto eval = [&](double x) {
    const auto v = phi(x);
    if (!std::isfinite(static_cast<double>(v)))
      throw std::runtime_error("non-finite value in numeric line search");
    return v;
  };

  auto f1 = eval(lo);  // deduce the value type, then overwrite
  auto f2 = f1;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  f1 = eval(x1);
  f2 = eval(x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = eval(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = eval(x2);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace sfw
