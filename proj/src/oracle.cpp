#include "reslab/oracle.hpp"

#include <cmath>

#if defined(__SSE2__)
#include <xmmintrin.h>
#endif

#include "reslab/errors.hpp"

namespace reslab {

namespace {

using cd = std::complex<double>;

// Far tails of the packet decay into subnormals, which are two orders of
// magnitude slower on x86. Flushes them to zero for the current thread.
class FlushSubnormals {
 public:
#if defined(__SSE2__)
  FlushSubnormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040); }
  ~FlushSubnormals() { _mm_setcsr(saved_); }

 private:
  unsigned saved_;
#endif
};

[[noreturn]] void invalid(const std::string& msg) { throw Error("oracle", ErrorCode::InvalidArgument, msg); }

std::size_t node_count(double box, double h) {
  const double cells = 2.0 * box / h;
  const double rounded = std::round(cells);
  if (!(box > 0.0) || !(h > 0.0) || std::abs(cells - rounded) > 1e-9 * rounded || rounded < 4) {
    invalid("2 box / h must be an integer of at least 4");
  }
  return static_cast<std::size_t>(rounded) + 1;
}

// (1 + i dt H / 2) psi_new = (1 - i dt H / 2) psi_old on the interior nodes.
class Stepper {
 public:
  Stepper(const PiecewisePotential& v, double box, double h, std::size_t n) : h_(h), v_(n, 0.0) {
    for (std::size_t j = 1; j + 1 < n; ++j) {
      const double x = -box + h * static_cast<double>(j);
      v_[j] = v.cell_average(x - 0.5 * h, x + 0.5 * h);
    }
  }

  void factor(double dt) {
    if (dt == dt_) return;
    dt_ = dt;
    const std::size_t n = v_.size();
    const double inv_h2 = 1.0 / (h_ * h_);
    off_ = cd(0.0, -0.5 * dt * inv_h2);
    diag_.assign(n, 0.0);
    rhs_diag_.assign(n, 0.0);
    for (std::size_t j = 1; j + 1 < n; ++j) {
      const double hj = 2.0 * inv_h2 + v_[j];
      diag_[j] = cd(1.0, 0.5 * dt * hj);
      rhs_diag_[j] = cd(1.0, -0.5 * dt * hj);
    }
    // Forward elimination factors for the constant off-diagonal.
    c_prime_.assign(n, 0.0);
    inv_denom_.assign(n, 0.0);
    cd prev = 0.0;
    for (std::size_t j = 1; j + 1 < n; ++j) {
      inv_denom_[j] = 1.0 / (diag_[j] - off_ * prev);
      prev = off_ * inv_denom_[j];
      c_prime_[j] = prev;
    }
    rhs_.assign(n, 0.0);
  }

  void step(std::vector<cd>& psi) {
    const std::size_t n = psi.size();
    cd prev = 0.0;
    cd left = 0.0;
    for (std::size_t j = 1; j + 1 < n; ++j) {
      const cd here = psi[j];
      const cd r = rhs_diag_[j] * here - off_ * (left + psi[j + 1]);
      left = here;
      prev = (r - off_ * prev) * inv_denom_[j];
      rhs_[j] = prev;
    }
    psi[n - 1] = 0.0;
    psi[0] = 0.0;
    cd next = 0.0;
    for (std::size_t j = n - 2; j >= 1; --j) {
      next = rhs_[j] - c_prime_[j] * next;
      psi[j] = next;
    }
  }

 private:
  double h_;
  std::vector<double> v_;
  double dt_ = -1.0;
  cd off_;
  std::vector<cd> diag_, rhs_diag_, c_prime_, inv_denom_, rhs_;
};

void check_times(const std::vector<double>& times) {
  double prev = 0.0;
  for (double t : times) {
    if (!std::isfinite(t) || t < prev) invalid("times must be finite, nonnegative and sorted");
    prev = t;
  }
}

}  // namespace

GridWave GridWave::from(const std::function<cd(double)>& f, double box, double h) {
  GridWave w;
  w.box = box;
  w.h = h;
  const std::size_t n = node_count(box, h);
  w.values.resize(n);
  for (std::size_t j = 1; j + 1 < n; ++j) w.values[j] = f(w.x_at(j));
  return w;
}

std::vector<GridWave> propagate_crank_nicolson(const GridWave& psi0, const PiecewisePotential& v,
                                               const std::vector<double>& times, const PropagationOptions& options) {
  const std::size_t n = node_count(psi0.box, psi0.h);
  if (psi0.values.size() != n) invalid("grid values do not match box and spacing");
  if (!(options.dt > 0.0)) invalid("dt must be positive");
  check_times(times);
  Stepper stepper(v, psi0.box, psi0.h, n);
  const FlushSubnormals guard;
  std::vector<cd> psi = psi0.values;
  psi.front() = 0.0;
  psi.back() = 0.0;
  std::vector<GridWave> out;
  double now = 0.0;
  const double v_max = 2.0 * options.k_max;
  for (double t : times) {
    const double span = t - now;
    if (span > 0.0) {
      const double steps = std::max(1.0, std::ceil(span / options.dt - 1e-9));
      stepper.factor(span / steps);
      for (long s = 0; s < static_cast<long>(steps); ++s) stepper.step(psi);
    }
    now = t;
    GridWave snap;
    snap.box = psi0.box;
    snap.h = psi0.h;
    snap.dt = options.dt;
    snap.t = t;
    snap.values = psi;
    snap.box_violation = options.window > 0.0 && v_max > 0.0 && options.window + 2.0 * v_max * t > psi0.box;
    out.push_back(std::move(snap));
  }
  return out;
}

std::vector<GridWave> propagate_richardson(const std::function<cd(double)>& psi0, double box, double h,
                                           const PiecewisePotential& v, const std::vector<double>& times,
                                           const PropagationOptions& options) {
  auto coarse = propagate_crank_nicolson(GridWave::from(psi0, box, h), v, times, options);
  PropagationOptions fine_options = options;
  fine_options.dt = 0.5 * options.dt;
  const auto fine = propagate_crank_nicolson(GridWave::from(psi0, box, 0.5 * h), v, times, fine_options);
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    auto& c = coarse[i].values;
    for (std::size_t j = 0; j < c.size(); ++j) c[j] = (4.0 * fine[i].values[2 * j] - c[j]) / 3.0;
  }
  return coarse;
}

double grid_norm2(const GridWave& w) {
  double s = 0.0;
  for (const cd y : w.values) s += std::norm(y);
  return s * w.h;
}

std::vector<double> window_nodes(const GridWave& w, double window) {
  std::vector<double> x;
  for (std::size_t j = 0; j < w.values.size(); ++j) {
    const double xj = w.x_at(j);
    if (std::abs(xj) <= window * (1.0 + 1e-12)) x.push_back(xj);
  }
  return x;
}

std::vector<Comparison> compare(const EvolutionResult& spectral, const std::vector<GridWave>& grid, double window) {
  auto misaligned = [](const std::string& msg) { throw Error("oracle", ErrorCode::MisalignedGrids, msg); };
  if (spectral.times.size() != grid.size()) misaligned("time lists differ in length");
  std::vector<Comparison> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const GridWave& g = grid[i];
    if (std::abs(spectral.times[i] - g.t) > 1e-12 * std::max(1.0, g.t)) misaligned("time lists differ");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t q = 0; q < spectral.x_grid.size(); ++q) {
      const double x = spectral.x_grid[q];
      if (std::abs(x) > window * (1.0 + 1e-12)) continue;
      const double pos = (x + g.box) / g.h;
      const double j = std::round(pos);
      if (std::abs(pos - j) > 1e-9 || j < 0 || j >= static_cast<double>(g.values.size())) {
        misaligned("spectral x-grid point is not a grid node");
      }
      const cd ref = g.values[static_cast<std::size_t>(j)];
      num += std::norm(spectral.profiles[i][q] - ref);
      den += std::norm(ref);
    }
    if (!(den > 0.0)) misaligned("no grid nodes inside the window");
    out.push_back({g.t, std::sqrt(num / den), g.box_violation});
  }
  return out;
}

}  // namespace reslab
