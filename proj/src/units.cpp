#include "reslab/units.hpp"

#include <cmath>
#include <sstream>

#include "reslab/errors.hpp"

namespace reslab {

UnitScheme::UnitScheme(double a0_m, double E1_MeV, double particle_mass_kg)
    : a0_(a0_m), E1_abs_(std::abs(E1_MeV) * kJoulePerMeV), mass_(particle_mass_kg) {
  if (!(a0_ > 0.0) || !(E1_abs_ > 0.0) || !(mass_ > 0.0)) {
    throw Error("units", ErrorCode::InvalidArgument, "a0, E1 and the particle mass must be positive");
  }
  const double ratio = consistency_ratio();
  if (!(ratio >= 0.98 && ratio <= 1.02)) {
    std::ostringstream os;
    os << "inconsistent unit scheme: hbar^2/(2 m a0^2) / |E1| = " << ratio;
    throw Error("units", ErrorCode::InvalidArgument, os.str());
  }
}

UnitScheme UnitScheme::alpha_decay_default() { return UnitScheme(7.2e-15, 0.1, 6.69e-27); }

double UnitScheme::consistency_ratio() const {
  return kHbarJs * kHbarJs / (2.0 * mass_ * a0_ * a0_) / E1_abs_;
}

}  // namespace reslab
