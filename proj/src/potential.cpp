#include "reslab/potential.hpp"

#include <algorithm>
#include <cmath>

#include "reslab/errors.hpp"

namespace reslab {

namespace {

[[noreturn]] void reject(const char* what) {
  throw Error("potential", ErrorCode::InvalidArgument, what);
}

}  // namespace

PiecewisePotential::PiecewisePotential(std::vector<double> breakpoints, std::vector<double> heights)
    : breakpoints_(std::move(breakpoints)), heights_(std::move(heights)) {
  if (breakpoints_.size() < 2) reject("need at least two breakpoints");
  if (heights_.size() + 1 != breakpoints_.size()) reject("need exactly one height per interval");
  for (double x : breakpoints_) {
    if (!std::isfinite(x)) reject("breakpoints must be finite");
  }
  for (double h : heights_) {
    if (!std::isfinite(h)) reject("heights must be finite");
  }
  for (std::size_t j = 1; j < breakpoints_.size(); ++j) {
    if (!(breakpoints_[j] > breakpoints_[j - 1])) reject("breakpoints must be strictly increasing");
  }
  if (std::all_of(heights_.begin(), heights_.end(), [](double h) { return h == 0.0; })) {
    reject("all heights are zero; use PiecewisePotential::free()");
  }
}

PiecewisePotential PiecewisePotential::free() { return PiecewisePotential(); }

double PiecewisePotential::evaluate(double x) const {
  if (heights_.empty() || x < breakpoints_.front() || x >= breakpoints_.back()) return 0.0;
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
  return heights_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

double PiecewisePotential::half_support() const {
  if (breakpoints_.empty()) return 0.0;
  return std::max(std::abs(breakpoints_.front()), std::abs(breakpoints_.back()));
}

bool PiecewisePotential::is_symmetric(double tol) const {
  const std::size_t n = breakpoints_.size();
  for (std::size_t j = 0; j < n; ++j) {
    if (std::abs(breakpoints_[j] + breakpoints_[n - 1 - j]) > tol) return false;
  }
  const std::size_t m = heights_.size();
  for (std::size_t j = 0; j < m; ++j) {
    if (std::abs(heights_[j] - heights_[m - 1 - j]) > tol) return false;
  }
  return true;
}

bool PiecewisePotential::has_negative_region() const {
  return std::any_of(heights_.begin(), heights_.end(), [](double h) { return h < 0.0; });
}

double PiecewisePotential::cell_average(double a, double b) const {
  if (!(b > a)) return evaluate(a);
  double integral = 0.0;
  for (std::size_t j = 0; j < heights_.size(); ++j) {
    const double lo = std::max(a, breakpoints_[j]);
    const double hi = std::min(b, breakpoints_[j + 1]);
    if (hi > lo) integral += heights_[j] * (hi - lo);
  }
  return integral / (b - a);
}

PiecewisePotential make_double_well(double ell, double delta, double lambda) {
  if (!(ell > 0.0) || !(delta > 0.0) || !(lambda > 0.0)) {
    reject("double well needs ell > 0, delta > 0 and lambda > 0");
  }
  PiecewisePotential v({-(ell + delta), -ell, ell, ell + delta}, {lambda, 0.0, lambda});
  v.inner_half_width_ = ell;
  return v;
}

PiecewisePotential make_rectangular_well(double ell, double lambda) {
  if (!(ell > 0.0) || !(lambda > 0.0)) reject("rectangular well needs ell > 0 and lambda > 0");
  return PiecewisePotential({-ell, ell}, {lambda});
}

}  // namespace reslab
