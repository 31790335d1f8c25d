#pragma once

// Jost-type solutions f+(k,x), f-(k,x) of -f'' + V f = k^2 f normalised to a
// unit outgoing wave (f+ = e^{ikx} for x > L, f- = e^{-ikx} for x < -L), the
// incident coefficient a(k), reflection amplitudes b+-(k), and the
// generalised eigenfunctions u+- = f+- / (sqrt(2 pi) a).
//
// Every region stores the solution as (value, derivative) at an anchor point
// and evaluates it through cos(k~ s) and sin(k~ s)/k~, which are even in k~.
// The result therefore does not depend on the branch of k~ = sqrt(k^2 - V_j),
// and stays well defined at k~ = 0.

#include <cstddef>
#include <span>
#include <vector>

#include "reslab/potential.hpp"
#include "reslab/precision.hpp"

namespace reslab {

template <class Real>
struct WaveSegment {
  using Complex = complex_t<Real>;

  Real left{};
  Real right{};
  bool unbounded_left = false;
  bool unbounded_right = false;
  Real height{};
  Complex k_tilde{};
  Real anchor{};
  Complex value{};       // f(anchor)
  Complex derivative{};  // f'(anchor)
  // f = alpha e^{i k~ x} + beta e^{-i k~ x} with absolute x. Zero when k~ = 0.
  Complex alpha{};
  Complex beta{};

  bool contains(const Real& x) const;
};

template <class Real>
class PiecewiseWave {
 public:
  using Complex = complex_t<Real>;

  PiecewiseWave() = default;
  explicit PiecewiseWave(std::vector<WaveSegment<Real>> segments) : segments_(std::move(segments)) {}

  const std::vector<WaveSegment<Real>>& segments() const { return segments_; }
  std::size_t locate(const Real& x) const;

  Complex operator()(const Real& x) const;
  Complex derivative(const Real& x) const;

  PiecewiseWave scaled(const Complex& factor) const;
  // x -> -x.
  PiecewiseWave mirrored() const;

 private:
  std::vector<WaveSegment<Real>> segments_;
};

// Evaluates (value, derivative) at `x` given the segment data.
template <class Real>
void propagate(const WaveSegment<Real>& seg, const Real& x, complex_t<Real>& value,
               complex_t<Real>& derivative);

template <class Real>
struct ScatteringSolution {
  using Complex = complex_t<Real>;

  Complex k{};
  Complex a{};        // from the f+ sweep
  Complex a_minus{};  // from the independent f- sweep
  Complex b_plus{};
  Complex b_minus{};
  PiecewiseWave<Real> f_plus;
  PiecewiseWave<Real> f_minus;
};

template <class Real>
struct EigenfunctionValue {
  complex_t<Real> u_plus{};
  complex_t<Real> u_minus{};
};

struct TransmissionReflection {
  double T = 0.0;
  double R_plus = 0.0;
  double R_minus = 0.0;
};

// Transfer-matrix backend. Throws Error(scattering, DegeneratePoint) for
// k = 0 and PrecisionExhausted when the sweep overflows the working type.
template <class Real>
ScatteringSolution<Real> solve_scattering(const PiecewisePotential& v, const complex_t<Real>& k);

// Same sweep with k~_j replaced by branch_signs[j] * principal_sqrt(k^2 - V_j)
// for interval j. Exposed to check branch invariance.
template <class Real>
ScatteringSolution<Real> solve_scattering(const PiecewisePotential& v, const complex_t<Real>& k,
                                          std::span<const int> branch_signs);

// a(k) alone. Cheaper than solve_scattering; used by the root finder.
template <class Real>
complex_t<Real> incident_coefficient(const PiecewisePotential& v, const complex_t<Real>& k);

// u+-(k, x) = f+-(k, x) / (sqrt(2 pi) a). Throws Error(scattering,
// AtResonance) when a vanishes to working precision.
template <class Real>
EigenfunctionValue<Real> eigenfunction_at(const ScatteringSolution<Real>& sol, const Real& x);

// T = 1/|a|^2, R+- = |b+-|^2/|a|^2. Real k > 0 only.
template <class Real>
TransmissionReflection transmission_reflection(const ScatteringSolution<Real>& sol);

// max_x |W(f+, f-)(x) + 2ik a| / (|2ik a| + 1e-300).
template <class Real>
double wronskian_residual(const ScatteringSolution<Real>& sol, std::span<const double> x_samples);

struct BoundStateScan {
  double kappa_max = 0.0;  // 0: derived from the deepest negative height
  int samples = 4000;
};

// True when a(i kappa) changes sign on the scanned kappa grid, which signals
// a bound state at energy -kappa^2. Advisory only.
bool bound_state_diagnostic(const PiecewisePotential& v, const BoundStateScan& scan = {});

// ---------------------------------------------------------------------------
// Closed form for the symmetric double well (wells of height lambda on
// ell <= |x| < ell + delta).

template <class Real>
struct DoubleWellCoefficients {
  using Complex = complex_t<Real>;
  Complex k{};
  Complex k_tilde{};
  Complex A{};
  // A continued from real k, where it equals conj(A); this is A(-k).
  Complex A_reflected{};
  Complex a1{};
  Complex a2{};
  Complex a{};
  Complex b_plus{};
  Complex c1{};
  Complex c2{};
  Complex c3{};
  Complex c4{};
};

// Uses the principal branch of k~ unless `k_tilde` is given.
template <class Real>
DoubleWellCoefficients<Real> double_well_coefficients(const Real& ell, const Real& delta,
                                                      const Real& lambda, const complex_t<Real>& k);
template <class Real>
DoubleWellCoefficients<Real> double_well_coefficients(const Real& ell, const Real& delta,
                                                      const Real& lambda, const complex_t<Real>& k,
                                                      const complex_t<Real>& k_tilde);

// Full solution assembled from the closed-form coefficients; region layout
// matches solve_scattering on make_double_well(ell, delta, lambda).
template <class Real>
ScatteringSolution<Real> closed_form_double_well(const Real& ell, const Real& delta, const Real& lambda,
                                                 const complex_t<Real>& k);

template <class Real>
bool WaveSegment<Real>::contains(const Real& x) const {
  return (unbounded_left || x >= left) && (unbounded_right || x < right);
}

template <class Real>
void propagate(const WaveSegment<Real>& seg, const Real& x, complex_t<Real>& value,
               complex_t<Real>& derivative) {
  using Complex = complex_t<Real>;
  using std::cos;
  using std::sin;
  const Real s = x - seg.anchor;
  const Complex ks = seg.k_tilde * s;
  const Complex c = cos(ks);
  Complex sin_over_k;
  Complex k_sin;
  if (seg.k_tilde == Complex(0)) {
    sin_over_k = Complex(s);
    k_sin = Complex(0);
  } else {
    const Complex sn = sin(ks);
    sin_over_k = sn / seg.k_tilde;
    k_sin = seg.k_tilde * sn;
  }
  value = seg.value * c + seg.derivative * sin_over_k;
  derivative = seg.derivative * c - k_sin * seg.value;
}

template <class Real>
PiecewiseWave<double> to_double(const PiecewiseWave<Real>& w) {
  std::vector<WaveSegment<double>> out;
  out.reserve(w.segments().size());
  for (const auto& s : w.segments()) {
    WaveSegment<double> d;
    d.left = convert_real<double>(s.left);
    d.right = convert_real<double>(s.right);
    d.unbounded_left = s.unbounded_left;
    d.unbounded_right = s.unbounded_right;
    d.height = convert_real<double>(s.height);
    d.k_tilde = convert_complex<double>(s.k_tilde);
    d.anchor = convert_real<double>(s.anchor);
    d.value = convert_complex<double>(s.value);
    d.derivative = convert_complex<double>(s.derivative);
    d.alpha = convert_complex<double>(s.alpha);
    d.beta = convert_complex<double>(s.beta);
    out.push_back(d);
  }
  return PiecewiseWave<double>(std::move(out));
}

#define RESLAB_SCATTERING_EXTERN(R)                                                                      \
  extern template class PiecewiseWave<R>;                                                                \
  extern template ScatteringSolution<R> solve_scattering<R>(const PiecewisePotential&,                  \
                                                            const complex_t<R>&);                        \
  extern template ScatteringSolution<R> solve_scattering<R>(const PiecewisePotential&,                  \
                                                            const complex_t<R>&, std::span<const int>); \
  extern template complex_t<R> incident_coefficient<R>(const PiecewisePotential&, const complex_t<R>&); \
  extern template EigenfunctionValue<R> eigenfunction_at<R>(const ScatteringSolution<R>&, const R&);    \
  extern template TransmissionReflection transmission_reflection<R>(const ScatteringSolution<R>&);      \
  extern template double wronskian_residual<R>(const ScatteringSolution<R>&, std::span<const double>);  \
  extern template DoubleWellCoefficients<R> double_well_coefficients<R>(const R&, const R&, const R&,   \
                                                                        const complex_t<R>&);            \
  extern template DoubleWellCoefficients<R> double_well_coefficients<R>(                                \
      const R&, const R&, const R&, const complex_t<R>&, const complex_t<R>&);                          \
  extern template ScatteringSolution<R> closed_form_double_well<R>(const R&, const R&, const R&,       \
                                                                   const complex_t<R>&);

RESLAB_SCATTERING_EXTERN(double)
RESLAB_SCATTERING_EXTERN(Real50)
RESLAB_SCATTERING_EXTERN(Real100)

#undef RESLAB_SCATTERING_EXTERN

}  // namespace reslab
