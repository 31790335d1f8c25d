#pragma once

// Generalised Fourier transform with respect to u+-(k, x), its inverse, and the
// time evolution psi(t) = int_0^inf (psi^+ u+ + psi^- u-) e^{-i k^2 t} dk.
//
// Quadrature runs in eps = k^2. Each eps-panel carries Gauss-Legendre nodes;
// for t != 0 the integrand is expanded in Legendre polynomials on the panel and
// integrated against e^{-i eps t} exactly (spherical Bessel moments), so the
// panel width is not tied to 1/t. The panel touching eps = 0 uses nodes in k
// instead, where the integrand is smooth.

#include <complex>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "reslab/potential.hpp"
#include "reslab/precision.hpp"
#include "reslab/resonance.hpp"
#include "reslab/sampled.hpp"
#include "reslab/scattering.hpp"

namespace reslab {

using cdouble = std::complex<double>;

inline constexpr int kPanelNodes = 16;

// Integral of |psi|^2 for the piecewise-quadratic interpolant.
double squared_norm(const SampledFunction& psi);

// int psi conj(f) dx with psi replaced by its quadratic interpolant.
cdouble overlap(const SampledFunction& psi, const PiecewiseWave<double>& f);

struct TransformValue {
  cdouble plus;
  cdouble minus;
};

// psi^+-(k) at one real k > 0. The scattering solve runs at precision `p`, so
// a(k) stays accurate next to a narrow resonance; the overlap integrals run in
// double.
TransformValue transform_at(const SampledFunction& psi, const PiecewisePotential& v, double k,
                            Precision p = Precision::standard());
// k carried at wide precision, for offsets below the double spacing of Re z.
TransformValue transform_at(const SampledFunction& psi, const PiecewisePotential& v, const WideReal& k,
                            Precision p);

// psi^+ of c 1_ell cos(z x) on the double well, from the closed-form a2(k).
cdouble truncated_cos_transform(double ell, double delta, double lambda, cdouble z, cdouble c, double k,
                                Precision p = Precision::standard());
cdouble truncated_cos_transform(double ell, double delta, double lambda, cdouble z, cdouble c, const WideReal& k,
                                Precision p);

// conj(residue_scale) <G, psi> / (k - conj z): the principal part of psi^+
// near Re z, with k - conj z formed at wide precision.
cdouble eta_bar(const Resonance& r, cdouble overlap, const WideReal& k);

enum class PanelKind { Origin, Regular };

struct SpectralPanel {
  PanelKind kind = PanelKind::Regular;
  double eps_lo = 0.0;
  double eps_hi = 0.0;
};

struct SpectralOptions {
  double k_max = 0.0;  // 0: Re z + max(40 Gamma/(2 sqrt E), 10) over tracked resonances, else 10
  double tol = 1e-6;   // Parseval defect, relative
  double k_max_limit = 0.0;  // 0: 64 k_max
  std::vector<cdouble> resonances;  // tracked roots z
  double base_dk = 0.0;        // 0: min(0.25, 1 / support half-width)
  double origin_eps = 1e-10;   // right end of the k-node panel at eps = 0
  int max_panels = 40000;
  bool bound_state_check = true;
};

struct ResonanceResolution {
  cdouble z;
  int samples_within_half_width = 0;
};

struct SpectralCoefficients {
  std::vector<SpectralPanel> panels;  // consecutive, kPanelNodes nodes each
  std::vector<double> k_grid;
  std::vector<double> weight;  // dk weight of each node
  std::vector<cdouble> psi_hat_plus;
  std::vector<cdouble> psi_hat_minus;
  double k_max = 0.0;
  double input_norm2 = 0.0;
  double spectral_mass = 0.0;
  double parseval_defect = 0.0;  // |spectral_mass - input_norm2| / input_norm2
  std::vector<ResonanceResolution> resolution;
  std::vector<std::string> warnings;
};

// Smallest grid k with at most `fraction` of the spectral mass above it.
double effective_bandwidth(const SpectralCoefficients& c, double fraction);

// Throws TruncationError when the defect is still above tol once k_max has
// grown to k_max_limit.
SpectralCoefficients forward_transform(const SampledFunction& psi, const PiecewisePotential& v,
                                       const SpectralOptions& options = {});

std::vector<cdouble> inverse_transform(const SpectralCoefficients& c, const PiecewisePotential& v,
                                       const std::vector<double>& x_grid);

// Node weights w_j(t) with int_0^inf F(k) e^{-i k^2 t} dk ~ sum_j w_j(t) F(k_j)
// for F smooth on the grid. w_j(0) = weight[j].
std::vector<cdouble> evolution_weights(const SpectralCoefficients& c, double t);

struct EvolutionResult {
  std::vector<double> times;
  std::vector<double> x_grid;
  std::vector<std::vector<cdouble>> profiles;  // [t][x]
  std::vector<cdouble> survival_amplitude;     // <psi0, psi(t)>
  std::vector<double> window_mass;
  std::vector<bool> reliable;
  double window = 0.0;
  double spectral_mass = 0.0;       // survival amplitude at t = 0
  double quadrature_error = 0.0;    // bound on the survival amplitude error, independent of t
};

// `window` is the half-width W of the reporting window [-W, W]; x_grid points
// may lie anywhere.
EvolutionResult evolve(const SpectralCoefficients& c, const PiecewisePotential& v,
                       const std::vector<double>& times, double window, const std::vector<double>& x_grid);

struct SurvivalPoint {
  double t = 0.0;
  double P = 0.0;
};

// P(t) = |<psi0, psi(t)>|^2 / |<psi0, psi0>|^2.
std::vector<SurvivalPoint> survival_probability(const EvolutionResult& r);

// Symmetric-difference estimate of dP/dt at t = 0 with step dt.
double survival_slope_at_zero(const SpectralCoefficients& c, double dt);

// Least-squares slope of log|A| against log t over the last decade of reliable
// positive times. Returns nullopt when fewer than three points qualify.
std::optional<double> long_time_slope(const EvolutionResult& r);

// Least-squares decay rate of the window mass over [t_lo, t_hi].
std::optional<double> window_decay_rate(const EvolutionResult& r, double t_lo, double t_hi);

// Breit-Wigner pole approximation amplitude(t) = c' e^{-i E t - Gamma t} with
// c' = (|f(+sqrt E)|^2 + |f(-sqrt E)|^2) / (2 sqrt E) * pi / Gamma.
struct PoleApproximation {
  std::vector<double> times;
  std::vector<cdouble> amplitude;
  cdouble prefactor;
  bool narrow = true;  // Gamma / E <= 0.1
};

PoleApproximation pole_approximation_evolution(const Resonance& r, std::pair<cdouble, cdouble> tilde_f,
                                               const std::vector<double>& times);

// f(+-sqrt E) read off the principal part of psi^+- near z, for psi with
// overlap <G, psi> = int psi conj(G).
std::pair<cdouble, cdouble> laurent_tilde_f(const Resonance& r, cdouble overlap);

// Rescales the prefactor so the amplitude matches `exact` at t_ref.
PoleApproximation calibrate_pole(const Resonance& r, cdouble exact, double t_ref,
                                 const std::vector<double>& times);

// L1 masses over k in I and |x| <= L.
struct LaurentSplit {
  double principal_mass = 0.0;  // |eta G|
  double remainder_mass = 0.0;  // |integrand - eta G|
  double outside_mass = 0.0;    // |integrand| for k outside I
  double ratio() const { return principal_mass / remainder_mass; }
};

// I = [Re z - half_width, Re z + half_width]. Throws Error(spectral,
// NotApplicable) for the free potential.
LaurentSplit laurent_split_diagnostic(const SpectralCoefficients& c, const PiecewisePotential& v,
                                      const Resonance& r, double half_width);

// Composite Gauss-Legendre nodes on [lo, hi] split at `cuts`, panel length at
// most max_panel.
struct QuadratureRule {
  std::vector<double> x;
  std::vector<double> w;
};
QuadratureRule composite_rule(double lo, double hi, std::vector<double> cuts, double max_panel);

}  // namespace reslab
