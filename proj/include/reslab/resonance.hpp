#pragma once

// Resonances are zeros z of a(k) in the lower half plane, z^2 = E - i Gamma.
// At a zero, f+(z, .) is purely outgoing on both sides; scaled to unit peak
// modulus on the inner region it is the Gamow function G.

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "reslab/potential.hpp"
#include "reslab/precision.hpp"
#include "reslab/sampled.hpp"
#include "reslab/scattering.hpp"
#include "reslab/units.hpp"

namespace reslab {

// Which factor of a = a1 a2 vanishes for a symmetric potential: even roots
// have b+(z) = b-(z) = +1, odd roots -1. None for asymmetric potentials.
enum class Channel { Even, Odd, None };
const char* to_string(Channel c);

struct Resonance {
  WideComplex z_wide;
  std::complex<double> z;
  double E = 0.0;
  double Gamma = 0.0;  // -Im z^2
  Channel channel = Channel::None;
  int digits = 15;  // working precision of the final refinement

  // G = f+(z, .) / normalization.
  std::complex<double> normalization;
  // u+(k, x) ~ residue_scale * G(x) / (k - z) near z; u- uses residue_scale_minus.
  std::complex<double> residue_scale;
  std::complex<double> residue_scale_minus;
  std::complex<double> a_prime;

  std::complex<double> b_plus;
  std::complex<double> b_minus;
  // Admissible |b+ b- - 1| given the root error and db/dk.
  double b_tolerance = 0.0;

  double root_error = 0.0;  // |a(z) / a'(z)| + rounding floor, absolute in k
  std::vector<double> newton_steps;
  std::optional<bool> simple_root;  // argument-principle count in a small disk == 1
};

struct ResonanceQuery {
  double k_min = 0.0;
  double k_max = 0.0;
  double max_im = 1.0;
  Precision precision = Precision::standard();
  bool escalate = true;  // move to a wider tier when Im z is not resolved
  int scan_points = 4000;
  int max_iter = 80;
  bool verify_simple = true;
};

struct ResonanceReport {
  std::vector<Resonance> roots;  // sorted by Re z
  std::vector<std::string> diagnostics;
  // Soft check: Gamma nondecreasing in Re z.
  bool gamma_monotone = true;
};

ResonanceReport find_resonances(const PiecewisePotential& v, const ResonanceQuery& query);

std::vector<Resonance> find_resonances(const PiecewisePotential& v, double k_min, double k_max,
                                       double max_im, Precision precision = Precision::standard());

// 2 + ceil(log10(|Re z| / |Im z|)).
int digits_needed(std::complex<double> z);

// Winding number of a(k) along the boundary, evaluated in double.
int count_zeros_in_disk(const PiecewisePotential& v, std::complex<double> center, double radius);
int count_zeros_in_rectangle(const PiecewisePotential& v, double re_lo, double re_hi, double im_lo,
                             double im_hi);

struct GamowFunction {
  std::complex<double> z;
  Channel channel = Channel::None;
  std::complex<double> normalization;
  double reference_half_width = 0.0;  // interval on which max |G| = 1
  PiecewiseWave<double> wave;

  std::complex<double> operator()(double x) const { return wave(x); }
  std::complex<double> derivative(double x) const { return wave.derivative(x); }
};

// Throws Error(resonance, InconsistentRoot) when |b+(z) b-(z) - 1| exceeds
// r.b_tolerance, or, for symmetric potentials, b+(z) != b-(z).
GamowFunction gamow_from_resonance(const PiecewisePotential& v, const Resonance& r);

// 1_w G on a uniform grid.
struct TruncatedGamow {
  double half_width = 0.0;
  SampledFunction samples;
  double squared_norm = 0.0;  // integral of |G|^2 over [-w, w]
};

TruncatedGamow truncate(const GamowFunction& g, double half_width, int samples = 4001);

// Integral of |f|^2 over [lo, hi], exact to rounding for piecewise
// exponentials.
double squared_norm(const PiecewiseWave<double>& f, double lo, double hi);

double decay_rate_si(const Resonance& r, const UnitScheme& units);

}  // namespace reslab
