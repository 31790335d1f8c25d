#include "reslab/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "reslab/errors.hpp"

namespace reslab {

namespace {

template <class Real>
complex_t<Real> imag_unit() {
  return complex_t<Real>(Real(0), Real(1));
}

template <class Real>
void fill_amplitudes(WaveSegment<Real>& seg) {
  using Complex = complex_t<Real>;
  using std::exp;
  if (seg.k_tilde == Complex(0)) {
    seg.alpha = Complex(0);
    seg.beta = Complex(0);
    return;
  }
  const Complex i = imag_unit<Real>();
  const Complex ratio = seg.derivative / (i * seg.k_tilde);
  const Complex phase = exp(i * seg.k_tilde * seg.anchor);
  seg.alpha = (seg.value + ratio) / Real(2) / phase;
  seg.beta = (seg.value - ratio) / Real(2) * phase;
}

template <class Real>
WaveSegment<Real> make_segment(const Real& left, const Real& right, bool open_left, bool open_right,
                               const Real& height, const complex_t<Real>& k_tilde, const Real& anchor,
                               const complex_t<Real>& value, const complex_t<Real>& derivative) {
  WaveSegment<Real> seg;
  seg.left = left;
  seg.right = right;
  seg.unbounded_left = open_left;
  seg.unbounded_right = open_right;
  seg.height = height;
  seg.k_tilde = k_tilde;
  seg.anchor = anchor;
  seg.value = value;
  seg.derivative = derivative;
  fill_amplitudes(seg);
  return seg;
}

template <class Real>
complex_t<Real> region_wavenumber(const complex_t<Real>& k, const Real& height, int sign) {
  using std::sqrt;
  const complex_t<Real> kt = sqrt(k * k - complex_t<Real>(height));
  return sign < 0 ? -kt : kt;
}

// Potential data converted to the working type.
template <class Real>
struct Layout {
  std::vector<Real> x;
  std::vector<Real> h;
};

template <class Real>
Layout<Real> layout_of(const PiecewisePotential& v) {
  Layout<Real> out;
  for (double x : v.breakpoints()) out.x.push_back(convert_real<Real>(x));
  for (double h : v.heights()) out.h.push_back(convert_real<Real>(h));
  return out;
}

template <class Real>
void require_nonzero(const complex_t<Real>& k) {
  if (k == complex_t<Real>(0)) {
    throw Error("scattering", ErrorCode::DegeneratePoint, "k = 0 is excluded");
  }
}

template <class Real>
[[noreturn]] void overflow() {
  const int next = digits_of<Real> < 50 ? 50 : kMaxSupportedDigits;
  throw PrecisionExhausted("scattering", next, "transfer-matrix sweep overflowed the working precision");
}

// Sweep from x > L inward with f+ = e^{ikx}; returns (value, derivative) at
// the leftmost breakpoint and, if `segments` is non-null, the region data.
template <class Real>
void sweep_plus(const Layout<Real>& lay, const complex_t<Real>& k, std::span<const int> signs,
                complex_t<Real>& v, complex_t<Real>& d, std::vector<WaveSegment<Real>>* segments) {
  using Complex = complex_t<Real>;
  using std::exp;
  const Complex i = imag_unit<Real>();
  const std::size_t n = lay.x.size();
  const Real& xr = lay.x[n - 1];
  v = exp(i * k * xr);
  d = i * k * v;
  if (segments) segments->push_back(make_segment(xr, Real(0), false, true, Real(0), k, xr, v, d));
  for (std::size_t jj = n - 1; jj-- > 0;) {
    const int sign = signs.empty() ? 1 : signs[jj];
    WaveSegment<Real> seg = make_segment(lay.x[jj], lay.x[jj + 1], false, false, lay.h[jj],
                                         region_wavenumber(k, lay.h[jj], sign), lay.x[jj + 1], v, d);
    propagate(seg, lay.x[jj], v, d);
    if (segments) segments->push_back(std::move(seg));
  }
  if (segments) {
    segments->push_back(make_segment(Real(0), lay.x[0], true, false, Real(0), k, lay.x[0], v, d));
    std::reverse(segments->begin(), segments->end());
  }
}

template <class Real>
void sweep_minus(const Layout<Real>& lay, const complex_t<Real>& k, std::span<const int> signs,
                 complex_t<Real>& v, complex_t<Real>& d, std::vector<WaveSegment<Real>>& segments) {
  using Complex = complex_t<Real>;
  using std::exp;
  const Complex i = imag_unit<Real>();
  const std::size_t n = lay.x.size();
  v = exp(-i * k * lay.x[0]);
  d = -i * k * v;
  segments.push_back(make_segment(Real(0), lay.x[0], true, false, Real(0), k, lay.x[0], v, d));
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const int sign = signs.empty() ? 1 : signs[j];
    WaveSegment<Real> seg = make_segment(lay.x[j], lay.x[j + 1], false, false, lay.h[j],
                                         region_wavenumber(k, lay.h[j], sign), lay.x[j], v, d);
    propagate(seg, lay.x[j + 1], v, d);
    segments.push_back(std::move(seg));
  }
  segments.push_back(make_segment(lay.x[n - 1], Real(0), false, true, Real(0), k, lay.x[n - 1], v, d));
}

template <class Real>
ScatteringSolution<Real> free_solution(const complex_t<Real>& k) {
  using Complex = complex_t<Real>;
  const Complex i = imag_unit<Real>();
  ScatteringSolution<Real> sol;
  sol.k = k;
  sol.a = Complex(1);
  sol.a_minus = Complex(1);
  sol.b_plus = Complex(0);
  sol.b_minus = Complex(0);
  sol.f_plus = PiecewiseWave<Real>(
      {make_segment(Real(0), Real(0), true, true, Real(0), k, Real(0), Complex(1), i * k)});
  sol.f_minus = PiecewiseWave<Real>(
      {make_segment(Real(0), Real(0), true, true, Real(0), k, Real(0), Complex(1), -i * k)});
  return sol;
}

}  // namespace

template <class Real>
std::size_t PiecewiseWave<Real>::locate(const Real& x) const {
  for (std::size_t j = 0; j < segments_.size(); ++j) {
    if (segments_[j].contains(x)) return j;
  }
  return segments_.size() - 1;
}

template <class Real>
typename PiecewiseWave<Real>::Complex PiecewiseWave<Real>::operator()(const Real& x) const {
  Complex v;
  Complex d;
  propagate(segments_[locate(x)], x, v, d);
  return v;
}

template <class Real>
typename PiecewiseWave<Real>::Complex PiecewiseWave<Real>::derivative(const Real& x) const {
  Complex v;
  Complex d;
  propagate(segments_[locate(x)], x, v, d);
  return d;
}

template <class Real>
PiecewiseWave<Real> PiecewiseWave<Real>::scaled(const Complex& factor) const {
  std::vector<WaveSegment<Real>> out = segments_;
  for (auto& seg : out) {
    seg.value *= factor;
    seg.derivative *= factor;
    seg.alpha *= factor;
    seg.beta *= factor;
  }
  return PiecewiseWave(std::move(out));
}

template <class Real>
PiecewiseWave<Real> PiecewiseWave<Real>::mirrored() const {
  std::vector<WaveSegment<Real>> out;
  out.reserve(segments_.size());
  for (auto it = segments_.rbegin(); it != segments_.rend(); ++it) {
    WaveSegment<Real> seg = *it;
    seg.left = -it->right;
    seg.right = -it->left;
    seg.unbounded_left = it->unbounded_right;
    seg.unbounded_right = it->unbounded_left;
    seg.anchor = -it->anchor;
    seg.derivative = -it->derivative;
    seg.alpha = it->beta;
    seg.beta = it->alpha;
    out.push_back(std::move(seg));
  }
  return PiecewiseWave(std::move(out));
}

template <class Real>
ScatteringSolution<Real> solve_scattering(const PiecewisePotential& v, const complex_t<Real>& k,
                                          std::span<const int> branch_signs) {
  using Complex = complex_t<Real>;
  using std::exp;
  require_nonzero<Real>(k);
  if (!branch_signs.empty() && branch_signs.size() != v.interval_count()) {
    throw Error("scattering", ErrorCode::InvalidArgument, "one branch sign per interval expected");
  }
  if (v.is_free()) return free_solution<Real>(k);

  const Layout<Real> lay = layout_of<Real>(v);
  const Complex i = imag_unit<Real>();
  ScatteringSolution<Real> sol;
  sol.k = k;

  std::vector<WaveSegment<Real>> plus;
  Complex vl;
  Complex dl;
  sweep_plus(lay, k, branch_signs, vl, dl, &plus);
  const Complex ratio_l = dl / (i * k);
  sol.a = (vl + ratio_l) / Real(2) * exp(-i * k * lay.x.front());
  sol.b_plus = (vl - ratio_l) / Real(2) * exp(i * k * lay.x.front());

  std::vector<WaveSegment<Real>> minus;
  Complex vr;
  Complex dr;
  sweep_minus(lay, k, branch_signs, vr, dr, minus);
  const Complex ratio_r = dr / (i * k);
  sol.a_minus = (vr - ratio_r) / Real(2) * exp(i * k * lay.x.back());
  sol.b_minus = (vr + ratio_r) / Real(2) * exp(-i * k * lay.x.back());

  if (!is_finite<Real>(sol.a) || !is_finite<Real>(sol.b_plus) || !is_finite<Real>(sol.a_minus) ||
      !is_finite<Real>(sol.b_minus)) {
    overflow<Real>();
  }
  sol.f_plus = PiecewiseWave<Real>(std::move(plus));
  sol.f_minus = PiecewiseWave<Real>(std::move(minus));
  return sol;
}

template <class Real>
ScatteringSolution<Real> solve_scattering(const PiecewisePotential& v, const complex_t<Real>& k) {
  return solve_scattering<Real>(v, k, std::span<const int>{});
}

template <class Real>
complex_t<Real> incident_coefficient(const PiecewisePotential& v, const complex_t<Real>& k) {
  using Complex = complex_t<Real>;
  using std::exp;
  require_nonzero<Real>(k);
  if (v.is_free()) return Complex(1);
  const Layout<Real> lay = layout_of<Real>(v);
  const Complex i = imag_unit<Real>();
  Complex vl;
  Complex dl;
  sweep_plus<Real>(lay, k, {}, vl, dl, nullptr);
  const Complex a = (vl + dl / (i * k)) / Real(2) * exp(-i * k * lay.x.front());
  if (!is_finite<Real>(a)) overflow<Real>();
  return a;
}

template <class Real>
EigenfunctionValue<Real> eigenfunction_at(const ScatteringSolution<Real>& sol, const Real& x) {
  using std::abs;
  using std::sqrt;
  const Real eps = std::numeric_limits<Real>::epsilon();
  const Real scale = std::max(Real(1), Real(abs(sol.b_plus)));
  if (!(abs(sol.a) > Real(16) * eps * scale)) {
    throw Error("scattering", ErrorCode::AtResonance, "a(k) vanishes: u+- has a pole here");
  }
  const Real norm = sqrt(Real(2) * pi_v<Real>());
  EigenfunctionValue<Real> out;
  out.u_plus = sol.f_plus(x) / (norm * sol.a);
  out.u_minus = sol.f_minus(x) / (norm * sol.a);
  return out;
}

template <class Real>
TransmissionReflection transmission_reflection(const ScatteringSolution<Real>& sol) {
  using std::imag;
  using std::norm;
  using std::real;
  if (imag(sol.k) != Real(0) || !(real(sol.k) > Real(0))) {
    throw Error("scattering", ErrorCode::InvalidArgument, "T and R are defined for real k > 0 only");
  }
  const Real a2 = norm(sol.a);
  TransmissionReflection out;
  out.T = convert_real<double>(Real(1) / a2);
  out.R_plus = convert_real<double>(Real(norm(sol.b_plus)) / a2);
  out.R_minus = convert_real<double>(Real(norm(sol.b_minus)) / a2);
  return out;
}

template <class Real>
double wronskian_residual(const ScatteringSolution<Real>& sol, std::span<const double> x_samples) {
  using Complex = complex_t<Real>;
  using std::abs;
  if (x_samples.size() < 2) {
    throw Error("scattering", ErrorCode::InvalidArgument, "need at least two sample points");
  }
  const Complex i = imag_unit<Real>();
  const Complex expected = -Real(2) * i * sol.k * sol.a;
  const Real denom = Real(abs(expected)) + Real(1e-300);
  Real worst(0);
  for (double xd : x_samples) {
    const Real x = convert_real<Real>(xd);
    Complex fp, dfp, fm, dfm;
    propagate(sol.f_plus.segments()[sol.f_plus.locate(x)], x, fp, dfp);
    propagate(sol.f_minus.segments()[sol.f_minus.locate(x)], x, fm, dfm);
    const Complex w = fp * dfm - dfp * fm;
    worst = std::max(worst, Real(abs(w - expected)) / denom);
  }
  return convert_real<double>(worst);
}

bool bound_state_diagnostic(const PiecewisePotential& v, const BoundStateScan& scan) {
  if (v.is_free()) return false;
  double kappa_max = scan.kappa_max;
  if (kappa_max <= 0.0) {
    double deepest = 0.0;
    for (double h : v.heights()) deepest = std::min(deepest, h);
    if (deepest >= 0.0) return false;
    kappa_max = std::sqrt(-deepest);
  }
  const int n = std::max(scan.samples, 16);
  double previous = 0.0;
  bool have_previous = false;
  for (int j = 1; j <= n; ++j) {
    const double kappa = kappa_max * j / n;
    const std::complex<double> a = incident_coefficient<double>(v, {0.0, kappa});
    // a(i kappa) is real for a real potential.
    const double value = a.real();
    if (value == 0.0) return true;
    if (have_previous && std::signbit(value) != std::signbit(previous)) return true;
    previous = value;
    have_previous = true;
  }
  return false;
}

template <class Real>
DoubleWellCoefficients<Real> double_well_coefficients(const Real& ell, const Real& delta,
                                                      const Real& /*lambda*/, const complex_t<Real>& k,
                                                      const complex_t<Real>& kt) {
  using Complex = complex_t<Real>;
  using std::cos;
  using std::exp;
  using std::sin;
  require_nonzero<Real>(k);
  if (kt == Complex(0)) {
    throw Error("scattering", ErrorCode::DegeneratePoint, "k^2 = lambda: closed form divides by k~");
  }
  const Complex i = imag_unit<Real>();
  const Complex half_i = i / Real(2);
  const Complex s = sin(kt * delta);
  const Complex c = cos(kt * delta);
  const Complex q = k / kt;
  const Complex sum = q + kt / k;
  const Complex g = (q - kt / k) * s;

  DoubleWellCoefficients<Real> out;
  out.k = k;
  out.k_tilde = kt;
  out.A = c - half_i * sum * s;
  out.A_reflected = c + half_i * sum * s;
  const Complex e_delta = exp(i * k * delta);
  const Complex e_2l = exp(Real(2) * i * k * ell);
  out.a1 = e_delta * (out.A - half_i * e_2l * g);
  out.a2 = e_delta * (out.A + half_i * e_2l * g);
  out.a = out.a1 * out.a2;
  out.b_plus = -half_i * g * (out.A / e_2l + out.A_reflected * e_2l);

  const Complex quarter_i = i / Real(4);
  const Complex inner = exp(i * kt * ell);
  const Complex inner_inv = Real(1) / inner;
  const Complex left_phase = exp(-i * k * (ell - delta));
  const Complex far_phase = exp(i * k * (Real(3) * ell + delta));
  out.c1 = inner * left_phase * (Real(1) + q) / Real(2) * out.A -
           quarter_i * inner * far_phase * (Real(1) - q) * g;
  out.c2 = inner_inv * left_phase * (Real(1) - q) / Real(2) * out.A -
           quarter_i * inner_inv * far_phase * (Real(1) + q) * g;
  out.c3 = (Real(1) + q) / Real(2) * exp(i * (k - kt) * (ell + delta));
  out.c4 = (Real(1) - q) / Real(2) * exp(i * (k + kt) * (ell + delta));
  return out;
}

template <class Real>
DoubleWellCoefficients<Real> double_well_coefficients(const Real& ell, const Real& delta,
                                                      const Real& lambda, const complex_t<Real>& k) {
  return double_well_coefficients<Real>(ell, delta, lambda, k, region_wavenumber(k, lambda, 1));
}

template <class Real>
ScatteringSolution<Real> closed_form_double_well(const Real& ell, const Real& delta, const Real& lambda,
                                                 const complex_t<Real>& k) {
  using Complex = complex_t<Real>;
  using std::exp;
  const DoubleWellCoefficients<Real> cf = double_well_coefficients<Real>(ell, delta, lambda, k);
  const Complex i = imag_unit<Real>();

  auto from_amplitudes = [&](const Real& left, const Real& right, bool open_l, bool open_r,
                             const Real& height, const Complex& kt, const Real& anchor,
                             const Complex& alpha, const Complex& beta) {
    const Complex ep = exp(i * kt * anchor);
    const Complex em = Real(1) / ep;
    WaveSegment<Real> seg;
    seg.left = left;
    seg.right = right;
    seg.unbounded_left = open_l;
    seg.unbounded_right = open_r;
    seg.height = height;
    seg.k_tilde = kt;
    seg.anchor = anchor;
    seg.value = alpha * ep + beta * em;
    seg.derivative = i * kt * (alpha * ep - beta * em);
    seg.alpha = alpha;
    seg.beta = beta;
    return seg;
  };

  const Real outer = ell + delta;
  const Real zero(0);
  std::vector<WaveSegment<Real>> segs;
  segs.push_back(from_amplitudes(zero, -outer, true, false, zero, k, -outer, cf.a, cf.b_plus));
  segs.push_back(from_amplitudes(-outer, -ell, false, false, lambda, cf.k_tilde, -ell, cf.c1, cf.c2));
  segs.push_back(from_amplitudes(-ell, ell, false, false, zero, k, ell, (cf.a1 + cf.a2) / Real(2),
                                 (cf.a1 - cf.a2) / Real(2)));
  segs.push_back(from_amplitudes(ell, outer, false, false, lambda, cf.k_tilde, outer, cf.c3, cf.c4));
  segs.push_back(from_amplitudes(outer, zero, false, true, zero, k, outer, Complex(1), Complex(0)));

  ScatteringSolution<Real> sol;
  sol.k = k;
  sol.a = cf.a;
  sol.a_minus = cf.a;
  sol.b_plus = cf.b_plus;
  sol.b_minus = cf.b_plus;
  sol.f_plus = PiecewiseWave<Real>(std::move(segs));
  sol.f_minus = sol.f_plus.mirrored();
  return sol;
}

#define RESLAB_SCATTERING_INSTANTIATE(R)                                                                     \
  template class PiecewiseWave<R>;                                                                          \
  template ScatteringSolution<R> solve_scattering<R>(const PiecewisePotential&, const complex_t<R>&);       \
  template ScatteringSolution<R> solve_scattering<R>(const PiecewisePotential&, const complex_t<R>&,        \
                                                     std::span<const int>);                                 \
  template complex_t<R> incident_coefficient<R>(const PiecewisePotential&, const complex_t<R>&);            \
  template EigenfunctionValue<R> eigenfunction_at<R>(const ScatteringSolution<R>&, const R&);               \
  template TransmissionReflection transmission_reflection<R>(const ScatteringSolution<R>&);                 \
  template double wronskian_residual<R>(const ScatteringSolution<R>&, std::span<const double>);             \
  template DoubleWellCoefficients<R> double_well_coefficients<R>(const R&, const R&, const R&,              \
                                                                 const complex_t<R>&);                      \
  template DoubleWellCoefficients<R> double_well_coefficients<R>(const R&, const R&, const R&,              \
                                                                 const complex_t<R>&, const complex_t<R>&); \
  template ScatteringSolution<R> closed_form_double_well<R>(const R&, const R&, const R&, const complex_t<R>&);

RESLAB_SCATTERING_INSTANTIATE(double)
RESLAB_SCATTERING_INSTANTIATE(Real50)
RESLAB_SCATTERING_INSTANTIATE(Real100)

}  // namespace reslab
