#pragma once

// Conversion between the natural units m = 1/2, hbar = 1 (lengths in a0,
// energies in |E1|) and SI.

namespace reslab {

inline constexpr double kHbarJs = 1.054571817e-34;
inline constexpr double kJoulePerMeV = 1.602176634e-13;

class UnitScheme {
 public:
  // Throws Error(units, InvalidArgument) when a0 or E1 is not positive or
  // when hbar^2 / (2 m a0^2) deviates from |E1| by more than 2%.
  UnitScheme(double a0_m, double E1_MeV, double particle_mass_kg);

  // alpha particle in a uranium-sized nucleus: a0 = 7.2 fm, |E1| = 0.1 MeV.
  static UnitScheme alpha_decay_default();

  double a0() const { return a0_; }
  double E1_abs() const { return E1_abs_; }
  double E1_MeV() const { return E1_abs_ / kJoulePerMeV; }
  double hbar() const { return kHbarJs; }
  double particle_mass() const { return mass_; }

  // hbar^2 / (2 m a0^2) / |E1|; 1 for a perfectly consistent scheme.
  double consistency_ratio() const;

  double to_si_length(double x) const { return a0_ * x; }
  double to_si_wavenumber(double k) const { return k / a0_; }
  double to_si_energy(double lambda) const { return E1_abs_ * lambda; }
  double to_si_time(double t) const { return (kHbarJs / E1_abs_) * t; }
  double to_si_rate(double gamma) const { return (E1_abs_ / kHbarJs) * gamma; }

  double from_si_length(double x_si) const { return x_si / a0_; }
  double from_si_wavenumber(double k_si) const { return k_si * a0_; }
  double from_si_energy(double e_si) const { return e_si / E1_abs_; }
  double from_si_time(double t_si) const { return t_si * (E1_abs_ / kHbarJs); }
  double from_si_rate(double rate_si) const { return rate_si * (kHbarJs / E1_abs_); }

  double to_mev(double lambda) const { return to_si_energy(lambda) / kJoulePerMeV; }
  // hbar * k_SI, the momentum the resonance root is usually quoted in.
  double to_si_momentum(double k) const { return kHbarJs * to_si_wavenumber(k); }

 private:
  double a0_;
  double E1_abs_;
  double mass_;
};

}  // namespace reslab
