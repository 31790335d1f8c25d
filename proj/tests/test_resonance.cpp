#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "reslab/errors.hpp"
#include "reslab/resonance.hpp"

using namespace reslab;
using cd = std::complex<double>;

namespace {

// 60-digit root of a(k) for (ell, delta, lambda) = (1, 2, 436), computed
// independently with mpmath from the closed-form a1(k).
const char* kU234Re = "7.4872419260189873642874140902705709234812282547026";
const double kU234Im = -5.868228378019402e-35;

ResonanceReport u234_report(Precision p = Precision::extended(50)) {
  ResonanceQuery q;
  q.k_min = 7.0;
  q.k_max = 8.0;
  q.max_im = 1.0;
  q.precision = p;
  return find_resonances(make_double_well(1, 2, 436), q);
}

const Resonance& single_root(const ResonanceReport& rep) {
  REQUIRE(rep.roots.size() == 1);
  return rep.roots.front();
}

// Sixth-order central second derivative.
cd second_derivative(const GamowFunction& g, double x, double h) {
  const double c[] = {-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0};
  cd sum = c[0] * g(x);
  for (int j = 1; j <= 3; ++j) sum += c[j] * (g(x + j * h) + g(x - j * h));
  return sum / (h * h);
}

ResonanceReport small_well_report() {
  ResonanceQuery q;
  q.k_min = 1.0;
  q.k_max = 6.0;
  q.max_im = 2.0;
  return find_resonances(make_double_well(1, 0.5, 30), q);
}

}  // namespace

TEST_CASE("U-234 root in SI units") {
  const auto rep = u234_report();
  const Resonance& r = single_root(rep);
  const auto units = UnitScheme::alpha_decay_default();
  const double re_si = units.to_si_momentum(r.z.real());
  const double im_si = units.to_si_momentum(r.z.imag());
  CHECK(std::abs(re_si / 1.0967e-19 - 1.0) < 1e-4);
  CHECK(std::abs(im_si / -8.5951e-55 - 1.0) < 1e-2);
  CHECK(std::abs(decay_rate_si(r, units) / 1.3361e-13 - 1.0) < 1e-3);
  CHECK(r.channel == Channel::Even);
  CHECK(r.digits >= digits_needed(r.z));
  CHECK(digits_needed(r.z) == 38);
}

TEST_CASE("U-234 root matches the frozen high-precision value") {
  const Resonance& r = single_root(u234_report());
  const WideReal re(kU234Re);
  CHECK(static_cast<double>(abs(real(r.z_wide) - re) / re) < 1e-45);
  CHECK(std::abs(r.z.imag() / kU234Im - 1.0) < 1e-12);
  CHECK(r.Gamma == doctest::Approx(-2.0 * r.z.real() * r.z.imag()).epsilon(1e-14));
  CHECK(r.E > 0.0);
  CHECK(r.Gamma > 0.0);
  // Even channel: a2 vanishes, a1 does not.
  const auto z = convert_complex<Real50>(r.z_wide);
  const auto cf = double_well_coefficients<Real50>(Real50(1), Real50(2), Real50(436), z);
  CHECK(static_cast<double>(abs(cf.a2)) < 1e-30);
  CHECK(static_cast<double>(abs(cf.a1)) > 1e10);
  CHECK(std::abs(r.b_plus * r.b_minus - 1.0) <= r.b_tolerance);
  CHECK(std::abs(r.b_plus - 1.0) <= r.b_tolerance);
  REQUIRE(r.simple_root.has_value());
  CHECK(*r.simple_root);
}

TEST_CASE("double precision request escalates for U-234") {
  const auto rep = u234_report(Precision::standard());
  const Resonance& r = single_root(rep);
  CHECK(r.digits == 50);
  CHECK(std::abs(r.z.imag() / kU234Im - 1.0) < 1e-12);

  ResonanceQuery q;
  q.k_min = 7.0;
  q.k_max = 8.0;
  q.escalate = false;
  const auto stuck = find_resonances(make_double_well(1, 2, 436), q);
  CHECK(stuck.roots.empty());
  CHECK_FALSE(stuck.diagnostics.empty());
}

TEST_CASE("non-converging seeds are dropped with a diagnostic") {
  ResonanceQuery q;
  q.k_min = 1.0;
  q.k_max = 6.0;
  q.max_im = 2.0;
  q.max_iter = 1;
  q.escalate = false;
  const auto rep = find_resonances(make_double_well(1, 0.5, 30), q);
  CHECK(rep.roots.empty());
  CHECK_FALSE(rep.diagnostics.empty());
}

TEST_CASE("free potential has no resonances") {
  CHECK(find_resonances(PiecewisePotential::free(), 0.5, 20.0, 1.0).empty());
}

TEST_CASE("invalid windows are rejected") {
  const auto v = make_double_well(1, 1, 10);
  CHECK_THROWS_AS(find_resonances(v, 0.0, 3.0, 1.0), Error);
  CHECK_THROWS_AS(find_resonances(v, 3.0, 2.0, 1.0), Error);
  CHECK_THROWS_AS(find_resonances(v, 1.0, 3.0, -1.0), Error);
  CHECK_THROWS_AS(find_resonances(v, 1.0, 3.0, 1.0, Precision::extended(200)), PrecisionExhausted);
}

TEST_CASE("roots of a shallow double well in double precision") {
  const auto v = make_double_well(1, 0.5, 30);
  const auto rep = small_well_report();
  REQUIRE(rep.roots.size() >= 3);
  for (const auto& r : rep.roots) {
    const auto sol = solve_scattering<double>(v, r.z);
    CHECK(std::abs(sol.a) < 1e-10);
    CHECK(r.z.imag() < 0.0);
    CHECK(r.z.imag() > -2.0);
    CHECK(r.digits == 15);
    CHECK(r.Gamma == doctest::Approx(-2.0 * r.z.real() * r.z.imag()).epsilon(1e-12));
    REQUIRE(r.simple_root.has_value());
    CHECK(*r.simple_root);
    CHECK(std::abs(r.b_plus * r.b_minus - 1.0) <= r.b_tolerance);
    CHECK(std::abs(r.b_plus - r.b_minus) <= r.b_tolerance);
    // Exactly one factor of a = a1 a2 vanishes, and it matches the channel.
    const auto cf = double_well_coefficients<double>(1, 0.5, 30, r.z);
    const double scale = std::abs(cf.a1) + std::abs(cf.a2);
    const bool a1_zero = std::abs(cf.a1) < 1e-10 * scale;
    const bool a2_zero = std::abs(cf.a2) < 1e-10 * scale;
    CHECK(a1_zero != a2_zero);
    CHECK(a2_zero == (r.channel == Channel::Even));
    // Newton steps shrink once the iteration is in the basin.
    const auto& s = r.newton_steps;
    REQUIRE(s.size() >= 2);
    CHECK(s.back() < s[s.size() - 2]);
  }
  for (std::size_t j = 1; j < rep.roots.size(); ++j) {
    CHECK(rep.roots[j].z.real() > rep.roots[j - 1].z.real());
  }
  CHECK(rep.gamma_monotone);
  // Independent zero count over a rectangle that encloses the window.
  CHECK(count_zeros_in_rectangle(v, 1.0, 6.0, -2.0, 0.05) == static_cast<int>(rep.roots.size()));
}

TEST_CASE("argument principle sees no zeros away from roots") {
  const auto v = make_double_well(1, 0.5, 30);
  CHECK(count_zeros_in_disk(v, cd(3.0, 1.0), 0.5) == 0);
  CHECK(count_zeros_in_rectangle(v, 0.5, 6.0, 0.1, 2.0) == 0);
}

TEST_CASE("Gamow function: outgoing tails, continuity, and the ODE") {
  const auto v = make_double_well(1, 0.5, 30);
  const auto rep = small_well_report();
  for (const auto& r : rep.roots) {
    const auto g = gamow_from_resonance(v, r);
    const cd z = g.z;
    const cd i(0, 1);
    // Tails.
    const cd right = g(2.0) / std::exp(i * z * 2.0);
    const cd left = g(-2.0) / std::exp(-i * z * -2.0);
    for (double x : {1.6, 2.5, 3.1, 4.0, 6.0}) {
      CHECK(std::abs(g(x) / std::exp(i * z * x) - right) < 1e-9 * std::abs(right));
      CHECK(std::abs(g(-x) / std::exp(-i * z * -x) - left) < 1e-9 * std::abs(left));
    }
    CHECK(std::abs(g(8.0)) / std::abs(g(2.0)) ==
          doctest::Approx(std::exp(std::abs(z.imag()) * 6.0)).epsilon(1e-9));
    // Value and slope are continuous across breakpoints.
    for (double x : {-1.5, -1.0, 1.0, 1.5}) {
      const double e = 1e-9;
      CHECK(std::abs(g(x + e) - g(x - e)) < 1e-6 * (1 + std::abs(g(x))));
      CHECK(std::abs(g.derivative(x + e) - g.derivative(x - e)) < 1e-6 * (1 + std::abs(g.derivative(x))));
    }
    // -G'' + V G = z^2 G away from breakpoints.
    const double h = 1e-3;
    const std::vector<std::pair<double, double>> regions{{-3.0, -1.5}, {-1.5, -1.0}, {-1.0, 1.0}, {1.0, 1.5}, {1.5, 3.0}};
    // Scaled by the largest |G| of the region; pointwise |G| vanishes at nodes.
    double worst = 0.0;
    for (const auto& [lo, hi] : regions) {
      std::vector<double> xs;
      double gmax = 0.0;
      for (int j = 0; j < 50; ++j) {
        xs.push_back(lo + 4 * h + (hi - lo - 8 * h) * (j + 0.5) / 50);
        gmax = std::max(gmax, std::abs(g(xs.back())));
      }
      for (double x : xs) {
        const cd res = -second_derivative(g, x, h) + v(x) * g(x) - z * z * g(x);
        worst = std::max(worst, std::abs(res) / (std::abs(z * z) * gmax));
      }
    }
    CHECK(worst < 1e-8);
    // Middle region matches a1 cos(zx) + i a2 sin(zx), scaled by the normalization.
    const auto cf = double_well_coefficients<double>(1, 0.5, 30, z);
    for (double x : {-0.7, 0.0, 0.4}) {
      const cd expected = (cf.a1 * std::cos(z * x) + i * cf.a2 * std::sin(z * x)) / g.normalization;
      CHECK(std::abs(g(x) - expected) < 1e-8);
    }
    // Peak modulus on [-ell, ell] is 1.
    double peak = 0.0;
    for (int j = 0; j <= 20000; ++j) peak = std::max(peak, std::abs(g(-1.0 + j * 1e-4)));
    CHECK(peak <= 1.0 + 1e-9);
    CHECK(peak > 1.0 - 1e-6);
  }
}

TEST_CASE("U-234 Gamow function is cos(zx) on the inner region") {
  const auto v = make_double_well(1, 2, 436);
  const Resonance& r = single_root(u234_report());
  const auto g = gamow_from_resonance(v, r);
  for (double x : {-0.9, -0.3, 0.0, 0.5, 0.99}) {
    CHECK(std::abs(g(x) - std::cos(g.z * x)) < 1e-12);
  }
  const auto t = truncate(g, 1.0, 2001);
  CHECK(t.samples.values.size() == 2001);
  CHECK(std::abs(t.samples.values[1000] - 1.0) < 1e-12);
  CHECK(std::abs(t.samples.values[1500] - std::cos(g.z * 0.5)) < 1e-12);
}

TEST_CASE("inconsistent roots are refused") {
  const auto v = make_double_well(1, 0.5, 30);
  const auto rep = small_well_report();
  REQUIRE_FALSE(rep.roots.empty());
  Resonance bad = rep.roots.front();
  bad.b_plus = 1.5;
  try {
    gamow_from_resonance(v, bad);
    FAIL("expected InconsistentRoot");
  } catch (const Error& e) {
    CHECK(e.qualified_code() == "resonance.InconsistentRoot");
  }
  Resonance moved = rep.roots.front();
  moved.z_wide += WideComplex(WideReal(0), WideReal("1e-4"));
  CHECK_THROWS_AS(gamow_from_resonance(v, moved), Error);
  CHECK_THROWS_AS(gamow_from_resonance(make_double_well(1, 0.6, 30), rep.roots.front()), Error);
}

TEST_CASE("truncation norm against the analytic antiderivative") {
  const auto v = make_double_well(1, 0.5, 30);
  const auto rep = small_well_report();
  for (const auto& r : rep.roots) {
    if (r.channel != Channel::Even) continue;
    const auto g = gamow_from_resonance(v, r);
    const double ell = 1.0;
    const auto t = truncate(g, ell);
    // |c|^2 * integral of |cos(zx)|^2 = |c|^2 * (sinh(2 b ell)/(2b) + sin(2 a ell)/(2a)), z = a + ib.
    const cd c = g(0.0);
    const double a = g.z.real();
    const double b = g.z.imag();
    const double exact = std::norm(c) * (std::sinh(2 * b * ell) / (2 * b) + std::sin(2 * a * ell) / (2 * a));
    CHECK(t.squared_norm == doctest::Approx(exact).epsilon(1e-13));
    for (std::size_t j = 0; j < t.samples.values.size(); j += 250) {
      const double x = t.samples.x_at(j);
      CHECK(std::abs(t.samples.values[j] - c * std::cos(g.z * x)) < 1e-10);
    }
    CHECK(truncate(g, 1e-6).squared_norm < 1e-5);
    CHECK(truncate(g, 1e-3).squared_norm > truncate(g, 1e-6).squared_norm);
  }
  CHECK_THROWS_AS(truncate(gamow_from_resonance(v, rep.roots.front()), 0.0), Error);
}

TEST_CASE("decay rate conversion") {
  const auto units = UnitScheme::alpha_decay_default();
  Resonance r;
  CHECK(decay_rate_si(r, units) == 0.0);
  r.Gamma = 8.795e-34;
  CHECK(decay_rate_si(r, units) == doctest::Approx(1.336e-13).epsilon(1e-3));
}
