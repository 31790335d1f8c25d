#pragma once

#include <optional>
#include <span>
#include <vector>

namespace reslab {

// Compactly supported, piecewise-constant potential. heights[j] is the value
// on [breakpoints[j], breakpoints[j+1]); V vanishes outside
// [breakpoints.front(), breakpoints.back()). Right-continuous everywhere.
class PiecewisePotential {
 public:
  // Throws Error(potential, InvalidArgument) on unsorted breakpoints, size
  // mismatch, non-finite values, or an all-zero height list.
  PiecewisePotential(std::vector<double> breakpoints, std::vector<double> heights);

  static PiecewisePotential free();

  double operator()(double x) const { return evaluate(x); }
  double evaluate(double x) const;

  std::span<const double> breakpoints() const { return breakpoints_; }
  std::span<const double> heights() const { return heights_; }
  std::size_t interval_count() const { return heights_.size(); }

  // L = max(|x_0|, |x_n|); zero for the free potential.
  double half_support() const;
  bool is_free() const { return heights_.empty(); }
  bool is_symmetric(double tol = 1e-12) const;
  bool has_negative_region() const;

  // Inner half-width ell of a double well; unset for other shapes.
  std::optional<double> inner_half_width() const { return inner_half_width_; }

  // (1/(b-a)) * integral of V over [a, b].
  double cell_average(double a, double b) const;

 private:
  PiecewisePotential() = default;
  friend PiecewisePotential make_double_well(double, double, double);

  std::vector<double> breakpoints_;
  std::vector<double> heights_;
  std::optional<double> inner_half_width_;
};

// lambda on [-(ell+delta), -ell) and [ell, ell+delta), zero elsewhere.
PiecewisePotential make_double_well(double ell, double delta, double lambda);

// lambda on [-ell, ell).
PiecewisePotential make_rectangular_well(double ell, double lambda);

}  // namespace reslab
