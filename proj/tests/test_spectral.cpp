#include <algorithm>
#include <cmath>
#include <complex>
#include <thread>
#include <vector>

#include "doctest.h"
#include "reslab/errors.hpp"
#include "reslab/parallel.hpp"
#include "reslab/spectral.hpp"

using namespace reslab;
using cd = std::complex<double>;

namespace {

constexpr double kPi = 3.14159265358979323846;

void use_all_cores() { set_default_threads(static_cast<int>(std::max(1u, std::thread::hardware_concurrency()))); }

cd bump(double x, double w, int n) {
  const double u = 1.0 - (x / w) * (x / w);
  return u > 0.0 ? std::pow(u, n) : 0.0;
}

SampledFunction bump_samples(double w = 0.8, int n = 6, std::size_t count = 801) {
  return SampledFunction::from([&](double x) { return bump(x, w, n); }, -w, w, count);
}

// Composite Simpson on the exact function, independent of the Filon route.
cd fourier_oracle(double w, int n, double k) {
  const int m = 20000;
  const double h = 2.0 * w / m;
  cd s = 0.0;
  for (int j = 0; j <= m; ++j) {
    const double x = -w + j * h;
    const double c = (j == 0 || j == m) ? 1.0 : (j % 2 ? 4.0 : 2.0);
    s += c * bump(x, w, n) * std::exp(cd(0.0, -k * x));
  }
  return s * h / 3.0 / std::sqrt(2.0 * kPi);
}

double relative_l2(const std::vector<cd>& a, const std::vector<cd>& b) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return std::sqrt(num / den);
}

// Lowest even resonance of (1, 0.8, 20): E ~ 1.64, Gamma ~ 6.6e-4.
struct Moderate {
  PiecewisePotential v = make_double_well(1, 0.8, 20);
  Resonance r;
  GamowFunction g;
  TruncatedGamow tg;
  SpectralCoefficients c;
};

const Moderate& moderate() {
  static const Moderate m = [] {
    use_all_cores();
    Moderate out;
    ResonanceQuery q;
    q.k_min = 1.0;
    q.k_max = 1.5;
    q.max_im = 0.1;
    out.r = find_resonances(out.v, q).roots.at(0);
    out.g = gamow_from_resonance(out.v, out.r);
    out.tg = truncate(out.g, 1.0, 2001);
    SpectralOptions o;
    o.tol = 1e-3;
    o.resonances = {out.r.z};
    out.c = forward_transform(out.tg.samples, out.v, o);
    return out;
  }();
  return m;
}

std::vector<double> log_times(double lo, double hi, double ratio) {
  std::vector<double> t;
  for (double x = lo; x <= hi; x *= ratio) t.push_back(x);
  return t;
}

}  // namespace

TEST_CASE("sampled functions and interpolant norm") {
  CHECK_THROWS_AS(SampledFunction::from([](double) { return cd(1.0); }, 0.0, 1.0, 4), Error);
  CHECK_THROWS_AS(SampledFunction::from([](double) { return cd(1.0); }, 1.0, 0.0, 5), Error);
  const auto s = SampledFunction::from([](double x) { return cd(x * x, 2.0 * x); }, -1.0, 1.0, 9);
  // The quadratic interpolant of a quadratic is exact: int x^4 + 4 x^2.
  CHECK(squared_norm(s) == doctest::Approx(0.4 + 8.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("free potential transform equals Fourier halves") {
  const auto psi = bump_samples(0.8, 6, 4001);
  for (double k : {0.01, 0.7, 3.0, 11.0, 25.0}) {
    const auto t = transform_at(psi, PiecewisePotential::free(), k);
    const cd ref_plus = fourier_oracle(0.8, 6, k);
    const cd ref_minus = fourier_oracle(0.8, 6, -k);
    CHECK(std::abs(t.plus - ref_plus) < 1e-9);
    CHECK(std::abs(t.minus - ref_minus) < 1e-9);
  }
  CHECK_THROWS_AS(transform_at(psi, PiecewisePotential::free(), 0.0), Error);
}

TEST_CASE("closed-form truncated cosine transform") {
  const Moderate& m = moderate();
  // G = G(0) cos(z x) on the inner region.
  const cd c = m.g(0.0);
  for (double k : {0.3, 1.0, m.r.z.real(), 1.5, 4.0, 9.0}) {
    const cd numeric = transform_at(m.tg.samples, m.v, k).plus;
    const cd closed = truncated_cos_transform(1.0, 0.8, 20.0, m.r.z, c, k);
    CHECK(std::abs(numeric - closed) <= 1e-8 * std::abs(closed));
  }
}

TEST_CASE("principal part matches the transform near a narrow root") {
  ResonanceQuery q;
  q.k_min = 7.0;
  q.k_max = 8.0;
  q.precision = Precision::extended(50);
  const Resonance r = find_resonances(make_double_well(1, 2, 436), q).roots.at(0);
  const auto v = make_double_well(1, 2, 436);
  const GamowFunction g = gamow_from_resonance(v, r);
  const TruncatedGamow tg = truncate(g, 1.0, 4001);
  const double hw = std::abs(r.z.imag());
  for (int i = -10; i <= 10; i += 2) {
    const WideReal k = real(r.z_wide) + WideReal(i) * WideReal(hw);
    const cd numeric = transform_at(tg.samples, v, k, Precision::extended(50)).plus;
    const cd eta = eta_bar(r, tg.squared_norm, k);
    CHECK(std::abs(std::abs(numeric) / std::abs(eta) - 1.0) < 0.05);
    const cd closed = truncated_cos_transform(1.0, 2.0, 436.0, r.z, 1.0, k, Precision::extended(50));
    CHECK(std::abs(numeric - closed) <= 1e-8 * std::abs(closed));
  }
}

TEST_CASE("Parseval and round trip on smooth inputs") {
  use_all_cores();
  const auto psi = bump_samples();
  std::vector<double> xs;
  std::vector<cd> ref;
  for (std::size_t j = 0; j < psi.values.size(); j += 8) {
    xs.push_back(psi.x_at(j));
    ref.push_back(psi.values[j]);
  }
  for (const auto& v : {PiecewisePotential::free(), make_double_well(1, 0.8, 20)}) {
    SpectralOptions o;
    o.tol = 1e-14;
    const auto c = forward_transform(psi, v, o);
    CHECK(c.parseval_defect < 1e-14);
    CHECK(std::is_sorted(c.k_grid.begin(), c.k_grid.end()));
    CHECK(c.k_grid.front() > 0.0);
    CHECK(c.k_grid.back() <= c.k_max);
    CHECK(relative_l2(inverse_transform(c, v, xs), ref) < 1e-6);
  }
}

TEST_CASE("zero input and zero coefficients") {
  const auto zero = SampledFunction::from([](double) { return cd(0.0); }, -1.0, 1.0, 11);
  const auto v = make_double_well(1, 0.8, 20);
  const auto c = forward_transform(zero, v);
  CHECK(c.parseval_defect == 0.0);
  CHECK(c.spectral_mass == 0.0);
  for (const cd y : inverse_transform(c, v, {-0.5, 0.0, 1.2})) CHECK(y == cd(0.0));
}

TEST_CASE("truncation error reports the defect") {
  const Moderate& m = moderate();
  SpectralOptions o;
  o.tol = 1e-6;
  o.k_max = 20.0;
  o.k_max_limit = 30.0;
  try {
    forward_transform(m.tg.samples, m.v, o);
    FAIL("expected TruncationError");
  } catch (const TruncationError& e) {
    CHECK(e.defect() > 1e-6);
    CHECK(e.k_max() == doctest::Approx(30.0));
    CHECK(e.qualified_code() == "spectral.TruncationError");
  }
}

TEST_CASE("grid resolves the Breit-Wigner peak") {
  const Moderate& m = moderate();
  REQUIRE(m.c.resolution.size() == 1);
  CHECK(m.c.resolution[0].samples_within_half_width >= 32);
  CHECK(m.c.parseval_defect < 1e-3);
}

TEST_CASE("bound states are flagged") {
  const auto psi = bump_samples(0.8, 6, 201);
  const PiecewisePotential v({-1.0, 1.0}, {-5.0});
  SpectralOptions o;
  o.k_max_limit = 20.0;
  // The bound-state mass is missing from the continuum integral.
  CHECK_THROWS_AS(forward_transform(psi, v, o), TruncationError);
  o.tol = 1.0;
  CHECK_FALSE(forward_transform(psi, v, o).warnings.empty());
}

TEST_CASE("evolution at t = 0 reproduces the inverse transform") {
  const Moderate& m = moderate();
  const std::vector<double> xs = {-1.5, -0.7, 0.0, 0.3, 0.99, 1.4};
  const auto inv = inverse_transform(m.c, m.v, xs);
  const auto ev = evolve(m.c, m.v, {0.0}, 1.8, xs);
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(std::abs(ev.profiles[0][i] - inv[i]) < 1e-12);
  CHECK(std::abs(ev.survival_amplitude[0] - m.c.spectral_mass) < 1e-12);
  CHECK(survival_probability(ev)[0].P == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(evolve(m.c, m.v, {std::nan("")}, 1.8, xs), Error);
}

TEST_CASE("window mass bounded by the conserved total mass") {
  const Moderate& m = moderate();
  const auto times = log_times(0.1, 3000.0, 3.0);
  const auto ev = evolve(m.c, m.v, times, 1.8, {});
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(ev.window_mass[i] <= m.c.spectral_mass * (1.0 + 1e-9));
  }
  // A wider window captures more of the outgoing flux.
  const auto wide = evolve(m.c, m.v, times, 6.0, {});
  for (std::size_t i = 0; i < times.size(); ++i) CHECK(wide.window_mass[i] >= ev.window_mass[i] - 1e-12);
}

TEST_CASE("even data stays even on the symmetric well") {
  use_all_cores();
  const auto psi = bump_samples(0.8, 6, 401);
  const auto v = make_double_well(1, 0.8, 20);
  SpectralOptions o;
  o.tol = 1e-10;
  const auto c = forward_transform(psi, v, o);
  const std::vector<double> xs = {-1.7, -1.1, -0.4, 0.4, 1.1, 1.7};
  const auto ev = evolve(c, v, {0.5, 5.0, 50.0}, 2.0, xs);
  for (const auto& row : ev.profiles) {
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(row[i] - row[5 - i]) < 1e-9);
  }
}

TEST_CASE("free Gaussian follows the analytic propagator") {
  use_all_cores();
  const double s = 0.25;  // sigma^2
  const auto psi = SampledFunction::from([&](double x) { return cd(std::exp(-x * x / (4.0 * s))); }, -4.0, 4.0, 1601);
  SpectralOptions o;
  o.tol = 1e-12;
  const auto c = forward_transform(psi, PiecewisePotential::free(), o);
  const std::vector<double> xs = {-3.0, -1.0, -0.2, 0.0, 0.5, 2.0};
  const std::vector<double> times = {0.1, 0.5, 2.0};
  const auto ev = evolve(c, PiecewisePotential::free(), times, 4.0, xs);
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    const cd tau = s + cd(0.0, times[ti]);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const cd exact = std::sqrt(s / tau) * std::exp(-xs[i] * xs[i] / (4.0 * tau));
      CHECK(std::abs(ev.profiles[ti][i] - exact) < 1e-6);
    }
  }
}

TEST_CASE("window mass decays at twice the width") {
  const Moderate& m = moderate();
  const double lo = 5.0 / m.r.E;
  const double hi = 0.5 / m.r.Gamma;
  const auto ev = evolve(m.c, m.v, log_times(lo, hi, 1.1), 1.8, {});
  const auto rate = window_decay_rate(ev, lo, hi);
  REQUIRE(rate.has_value());
  CHECK(std::abs(*rate / (2.0 * m.r.Gamma) - 1.0) < 0.05);
  // Envelope: P never rises by more than a small oscillation.
  const auto P = survival_probability(ev);
  for (std::size_t i = 1; i < P.size(); ++i) CHECK(P[i].P <= P[i - 1].P * 1.01);
}

TEST_CASE("survival slope at t = 0") {
  const Moderate& m = moderate();
  for (double dt : {1e-2, 1e-4, 1e-6}) {
    CHECK(std::abs(survival_slope_at_zero(m.c, dt)) <= 1e-3 * m.r.E);
  }
}

TEST_CASE("long-time tails") {
  use_all_cores();
  const auto psi = bump_samples();
  SpectralOptions o;
  o.tol = 1e-12;
  const auto times = log_times(1.0, 1e7, 1.3);
  // Free motion: |A| ~ t^{-1/2}.
  const auto cf = forward_transform(psi, PiecewisePotential::free(), o);
  const auto free_slope = long_time_slope(evolve(cf, PiecewisePotential::free(), times, 1.0, {}));
  REQUIRE(free_slope.has_value());
  CHECK(*free_slope == doctest::Approx(-0.5).epsilon(0.02));
  // A barrier makes a(k) ~ 1/k at threshold, so |psi^|^2 ~ k^2 and |A| ~ t^{-3/2}.
  const auto v = make_rectangular_well(0.8, 2.0);
  const auto cb = forward_transform(psi, v, o);
  const auto barrier_slope = long_time_slope(evolve(cb, v, times, 1.0, {}));
  REQUIRE(barrier_slope.has_value());
  CHECK(*barrier_slope == doctest::Approx(-1.5).epsilon(0.02));
}

TEST_CASE("pole approximation") {
  const Moderate& m = moderate();
  const auto times = log_times(5.0 / m.r.E, 0.5 / m.r.Gamma, 1.2);
  const auto f = laurent_tilde_f(m.r, m.tg.squared_norm);
  const auto p = pole_approximation_evolution(m.r, f, times);
  CHECK(p.narrow);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const cd expect = p.prefactor * std::exp(cd(-m.r.Gamma * times[i], -m.r.E * times[i]));
    CHECK(std::abs(p.amplitude[i] - expect) <= 1e-14 * std::abs(expect));
  }
  const auto ev = evolve(m.c, m.v, times, 1.8, {});
  // Laurent-derived prefactor against the exact survival amplitude.
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double pole_P = std::norm(p.amplitude[i] / ev.spectral_mass);
    CHECK(std::abs(ev.window_mass[i] - pole_P * m.tg.squared_norm) < 0.1 * ev.window_mass[i]);
  }
  const double t_ref = 5.0 / m.r.E;
  const auto ref = evolve(m.c, m.v, {t_ref}, 1.8, {});
  const auto cal = calibrate_pole(m.r, ref.survival_amplitude[0], t_ref, {t_ref, 2.0 * t_ref});
  CHECK(std::abs(cal.amplitude[0] - ref.survival_amplitude[0]) < 1e-12);
  // Gamma -> 0: constant magnitude.
  Resonance sharp = m.r;
  sharp.Gamma = 1e-300;
  const auto flat = pole_approximation_evolution(sharp, {1.0, 0.0}, {0.0, 1e3, 1e6});
  CHECK(std::abs(flat.amplitude[2]) == doctest::Approx(std::abs(flat.amplitude[0])));
  Resonance broad = m.r;
  broad.Gamma = 0.5 * m.r.E;
  CHECK_FALSE(pole_approximation_evolution(broad, f, times).narrow);
}

TEST_CASE("Laurent split") {
  const Moderate& m = moderate();
  const double hw = m.r.Gamma / (2.0 * std::sqrt(m.r.E));
  double previous = HUGE_VAL;
  for (double n : {20.0, 200.0, 2000.0, 1e6}) {
    const auto s = laurent_split_diagnostic(m.c, m.v, m.r, n * hw);
    if (n == 20.0) CHECK(s.ratio() > 10.0);
    CHECK(s.ratio() < previous);
    previous = s.ratio();
  }
  try {
    laurent_split_diagnostic(m.c, PiecewisePotential::free(), m.r, hw);
    FAIL("expected NotApplicable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotApplicable);
  }
}
