#pragma once

// Crank-Nicolson propagation of i psi_t = -psi_xx + V psi on [-B, B] with
// psi(+-B) = 0. Shares nothing with the spectral route beyond the potential
// description.

#include <complex>
#include <functional>
#include <vector>

#include "reslab/potential.hpp"
#include "reslab/spectral.hpp"

namespace reslab {

struct GridWave {
  double box = 0.0;  // B
  double h = 0.0;
  double dt = 0.0;
  double t = 0.0;
  std::vector<std::complex<double>> values;  // at -B + j h, j = 0..n-1, ends pinned to zero
  // Flux moving at v_max may have reflected off the box and re-entered the window.
  bool box_violation = false;

  double x_at(std::size_t j) const { return -box + h * static_cast<double>(j); }
  static GridWave from(const std::function<std::complex<double>(double)>& f, double box, double h);
};

struct PropagationOptions {
  double dt = 1e-3;
  double window = 0.0;  // W; 0 disables the box check
  double k_max = 0.0;   // v_max = 2 k_max
};

// Snapshots at each requested time (sorted, nonnegative).
std::vector<GridWave> propagate_crank_nicolson(const GridWave& psi0, const PiecewisePotential& v,
                                               const std::vector<double>& times, const PropagationOptions& options);

// Runs at (h, dt) and (h/2, dt/2) combined as (4 fine - coarse) / 3 on the
// coarse grid.
std::vector<GridWave> propagate_richardson(const std::function<std::complex<double>(double)>& psi0, double box,
                                           double h, const PiecewisePotential& v, const std::vector<double>& times,
                                           const PropagationOptions& options);

double grid_norm2(const GridWave& w);

struct Comparison {
  double t = 0.0;
  double l2_diff = 0.0;  // relative, over |x| <= window
  bool flag = false;
};

// Spectral profiles must sit on grid nodes inside the window and share the
// time list; otherwise Error(oracle, MisalignedGrids).
std::vector<Comparison> compare(const EvolutionResult& spectral, const std::vector<GridWave>& grid, double window);

// Grid nodes in [-window, window], the x_grid to hand to evolve().
std::vector<double> window_nodes(const GridWave& w, double window);

}  // namespace reslab
