#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

namespace reslab {

// Samples psi(x0 + j h), j = 0..n-1, of a function that vanishes outside
// [x0, x0 + (n-1) h]. Interpolated piecewise-quadratically over consecutive
// sample pairs, so n must be odd.
struct SampledFunction {
  double x0 = 0.0;
  double h = 0.0;
  std::vector<std::complex<double>> values;

  double x_end() const { return x0 + h * static_cast<double>(values.size() - 1); }
  double x_at(std::size_t j) const { return x0 + h * static_cast<double>(j); }
  // The interpolant; zero outside the sampled interval.
  std::complex<double> operator()(double x) const;

  static SampledFunction from(const std::function<std::complex<double>(double)>& f, double lo, double hi,
                              std::size_t n);
};

}  // namespace reslab
