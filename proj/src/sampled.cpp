#include "reslab/sampled.hpp"

#include <algorithm>

#include "reslab/errors.hpp"

namespace reslab {

SampledFunction SampledFunction::from(const std::function<std::complex<double>(double)>& f, double lo,
                                      double hi, std::size_t n) {
  if (n < 3 || n % 2 == 0 || !(hi > lo)) {
    throw Error("spectral", ErrorCode::InvalidArgument, "sampling needs hi > lo and an odd count >= 3");
  }
  SampledFunction s;
  s.x0 = lo;
  s.h = (hi - lo) / static_cast<double>(n - 1);
  s.values.resize(n);
  for (std::size_t j = 0; j < n; ++j) s.values[j] = f(j + 1 == n ? hi : lo + s.h * static_cast<double>(j));
  return s;
}

std::complex<double> SampledFunction::operator()(double x) const {
  if (values.size() < 3 || !(x >= x0) || !(x <= x_end())) return 0.0;
  const std::size_t panels = (values.size() - 1) / 2;
  const std::size_t p = std::min(panels - 1, static_cast<std::size_t>((x - x0) / (2.0 * h)));
  const std::complex<double> y0 = values[2 * p];
  const std::complex<double> y1 = values[2 * p + 1];
  const std::complex<double> y2 = values[2 * p + 2];
  const double tau = (x - x_at(2 * p + 1)) / h;
  return y1 + tau * (0.5 * (y2 - y0) + tau * (0.5 * (y2 + y0) - y1));
}

}  // namespace reslab
