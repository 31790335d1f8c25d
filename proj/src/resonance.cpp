#include "reslab/resonance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

#include "reslab/errors.hpp"
#include "reslab/parallel.hpp"

namespace reslab {

namespace {

using cd = std::complex<double>;
constexpr double kPi = 3.14159265358979323846;
constexpr int kTiers[] = {15, 50, kMaxSupportedDigits};

template <class Real>
Real pow10(int e) {
  using std::pow;
  return pow(Real(10), Real(e));
}

template <class Real>
struct Refined {
  complex_t<Real> z;
  bool converged = false;
  std::vector<double> steps;
  std::string why;
};

// Damped Newton on a(k) with a central-difference derivative.
template <class Real>
Refined<Real> newton(const PiecewisePotential& v, complex_t<Real> z, const ResonanceQuery& q) {
  using Complex = complex_t<Real>;
  using std::abs;
  using std::imag;
  using std::real;
  const int d = digits_of<Real>;
  const Real tol = pow10<Real>(-(d - 2));
  const Real h_scale = pow10<Real>(-(d / 2));
  const double re_hi = 2.0 * q.k_max + 1.0;
  const double im_lo = -3.0 * q.max_im - 1.0;
  Refined<Real> out;
  try {
    Complex fz = incident_coefficient<Real>(v, z);
    for (int it = 0; it < q.max_iter; ++it) {
      const Real h = h_scale * abs(z);
      const Complex da = (incident_coefficient<Real>(v, z + h) - incident_coefficient<Real>(v, z - h)) / (Real(2) * h);
      if (da == Complex(0)) {
        out.why = "vanishing derivative";
        break;
      }
      const Complex step = fz / da;
      Real damping(1);
      Complex zn = z - step;
      Complex fn = incident_coefficient<Real>(v, zn);
      for (int j = 0; j < 30 && abs(fn) > Real(2) * abs(fz); ++j) {
        damping /= 2;
        zn = z - damping * step;
        fn = incident_coefficient<Real>(v, zn);
      }
      const Real moved = abs(damping * step);
      out.steps.push_back(convert_real<double>(moved));
      z = zn;
      fz = fn;
      const double zr = convert_real<double>(real(z));
      const double zi = convert_real<double>(imag(z));
      if (!(zr > 0.0 && zr < re_hi && zi > im_lo && zi < 1.0)) {
        out.why = "left the search region";
        break;
      }
      if (moved <= tol * abs(z)) {
        out.converged = true;
        break;
      }
    }
    if (!out.converged && out.why.empty()) out.why = "no convergence";
  } catch (const Error& e) {
    out.why = e.what();
  }
  out.z = z;
  return out;
}

// Point of largest |f| on [-w, w]; ties resolved towards small |x|, then x >= 0.
double argmax_modulus(const PiecewiseWave<double>& f, double w) {
  const int n = 4000;
  std::vector<double> mod(n + 1);
  double best = 0.0;
  for (int j = 0; j <= n; ++j) {
    mod[j] = std::abs(f(-w + 2.0 * w * j / n));
    best = std::max(best, mod[j]);
  }
  int pick = -1;
  for (int j = 0; j <= n; ++j) {
    if (mod[j] < best * (1.0 - 1e-9)) continue;
    const double x = -w + 2.0 * w * j / n;
    if (pick < 0) {
      pick = j;
      continue;
    }
    const double xp = -w + 2.0 * w * pick / n;
    if (std::abs(x) < std::abs(xp) - 1e-12 || (std::abs(std::abs(x) - std::abs(xp)) <= 1e-12 && x > xp)) pick = j;
  }
  double lo = -w + 2.0 * w * std::max(pick - 1, 0) / n;
  double hi = -w + 2.0 * w * std::min(pick + 1, n) / n;
  const double x_grid = -w + 2.0 * w * pick / n;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - g * (hi - lo);
  double d = lo + g * (hi - lo);
  double fc = std::abs(f(c));
  double fd = std::abs(f(d));
  for (int it = 0; it < 80 && hi - lo > 1e-13 * std::max(1.0, w); ++it) {
    if (fc >= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - g * (hi - lo);
      fc = std::abs(f(c));
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + g * (hi - lo);
      fd = std::abs(f(d));
    }
  }
  const double x = 0.5 * (lo + hi);
  return std::abs(f(x)) > mod[pick] * (1.0 + 1e-12) ? x : x_grid;
}

double reference_half_width(const PiecewisePotential& v) {
  return v.inner_half_width().value_or(v.half_support());
}

template <class Real>
Resonance finalize(const PiecewisePotential& v, const complex_t<Real>& z, std::vector<double> steps) {
  using Complex = complex_t<Real>;
  using std::abs;
  using std::imag;
  using std::real;
  const int d = digits_of<Real>;
  const Real h = pow10<Real>(-(d / 2)) * abs(z);
  const auto sol = solve_scattering<Real>(v, z);
  const auto up = solve_scattering<Real>(v, z + h);
  const auto dn = solve_scattering<Real>(v, z - h);
  const Complex da = (up.a - dn.a) / (Real(2) * h);
  const Complex dbp = (up.b_plus - dn.b_plus) / (Real(2) * h);
  const Complex dbm = (up.b_minus - dn.b_minus) / (Real(2) * h);

  Resonance r;
  r.z_wide = convert_complex<WideReal>(z);
  r.z = convert_complex<double>(z);
  const Complex z2 = z * z;
  r.E = convert_real<double>(Real(real(z2)));
  r.Gamma = convert_real<double>(Real(-imag(z2)));
  r.digits = d;
  r.a_prime = convert_complex<double>(da);
  r.b_plus = convert_complex<double>(sol.b_plus);
  r.b_minus = convert_complex<double>(sol.b_minus);
  const Real err = Real(abs(sol.a / da)) + pow10<Real>(-d) * abs(z);
  r.root_error = convert_real<double>(err);
  const Real sens = Real(abs(dbp)) * Real(abs(sol.b_minus)) + Real(abs(sol.b_plus)) * Real(abs(dbm));
  // Rounding in the sweep is relative to the largest intermediate amplitude.
  Real peak(1);
  for (const auto& seg : sol.f_plus.segments()) {
    const Real kt = std::max(Real(1), Real(abs(seg.k_tilde)));
    peak = std::max(peak, Real(Real(abs(seg.value)) + Real(abs(seg.derivative)) / kt));
  }
  r.b_tolerance = convert_real<double>(Real(1e3) * (err * sens + pow10<Real>(-d) * peak) + pow10<Real>(-(d - 4)));
  if (v.is_symmetric()) {
    r.channel = std::abs(r.b_plus - 1.0) < std::abs(r.b_plus + 1.0) ? Channel::Even : Channel::Odd;
  }
  const PiecewiseWave<double> f = to_double(sol.f_plus);
  r.normalization = f(argmax_modulus(f, reference_half_width(v)));
  r.residue_scale = r.normalization / (std::sqrt(2.0 * kPi) * r.a_prime);
  r.residue_scale_minus = r.residue_scale / r.b_plus;
  r.newton_steps = std::move(steps);
  return r;
}

struct SeedOutcome {
  std::optional<Resonance> root;
  std::string why;
};

SeedOutcome refine_seed(const PiecewisePotential& v, double seed, const ResonanceQuery& q) {
  const int first = q.precision.tier_digits();
  WideComplex z(WideReal(seed), WideReal(0));
  const WideComplex start = z;
  SeedOutcome out;
  std::ostringstream why;
  for (int tier : kTiers) {
    if (tier < first) continue;
    const bool last = !q.escalate || tier == kMaxSupportedDigits;
    bool converged = false;
    std::vector<double> steps;
    dispatch(Precision{tier}, [&](auto tag) {
      using Real = typename decltype(tag)::type;
      auto r = newton<Real>(v, convert_complex<Real>(z), q);
      converged = r.converged;
      steps = std::move(r.steps);
      if (converged) {
        z = convert_complex<WideReal>(r.z);
      } else {
        why << "seed " << seed << ": " << r.why << " at " << tier << " digits";
      }
    });
    if (!converged) {
      z = start;
      if (last) break;
      why << "; ";
      continue;
    }
    const cd zd = convert_complex<double>(z);
    const int needed = digits_needed(zd);
    if (needed <= tier) {
      if (zd.imag() >= 0.0) {
        why << "seed " << seed << ": root " << zd << " is not in the lower half plane";
        break;
      }
      dispatch(Precision{tier}, [&](auto tag) {
        using Real = typename decltype(tag)::type;
        out.root = finalize<Real>(v, convert_complex<Real>(z), std::move(steps));
      });
      return out;
    }
    if (last) {
      why << "seed " << seed << ": Im z unresolved at " << tier << " digits (needs " << needed << ")";
      break;
    }
  }
  out.why = why.str();
  return out;
}

std::vector<double> scan_minima(const PiecewisePotential& v, const ResonanceQuery& q) {
  const int n = std::max(q.scan_points, 8);
  std::vector<double> ks(n);
  std::vector<double> mod(n);
  for (int j = 0; j < n; ++j) ks[j] = q.k_min + (q.k_max - q.k_min) * j / (n - 1);
  parallel_for(ks.size(), [&](std::size_t j) {
    const cd k(ks[j], 0.0);
    try {
      mod[j] = std::log(std::abs(incident_coefficient<double>(v, k)));
    } catch (const PrecisionExhausted&) {
      mod[j] = convert_real<double>(Real50(log(abs(incident_coefficient<Real50>(v, convert_complex<Real50>(k))))));
    }
  });
  std::vector<double> seeds;
  for (int j = 1; j + 1 < n; ++j) {
    if (mod[j] < mod[j - 1] && mod[j] <= mod[j + 1]) seeds.push_back(ks[j]);
  }
  return seeds;
}

double winding_segment(const PiecewisePotential& v, cd p0, cd p1, cd f0, cd f1, int depth) {
  const double step = std::arg(f1 / f0);
  if (std::abs(step) < 0.4 || depth > 40) return step;
  const cd pm = 0.5 * (p0 + p1);
  const cd fm = incident_coefficient<double>(v, pm);
  return winding_segment(v, p0, pm, f0, fm, depth + 1) + winding_segment(v, pm, p1, fm, f1, depth + 1);
}

int winding(const PiecewisePotential& v, const std::vector<cd>& polygon) {
  double total = 0.0;
  std::vector<cd> values;
  for (const cd& p : polygon) values.push_back(incident_coefficient<double>(v, p));
  for (std::size_t j = 0; j < polygon.size(); ++j) {
    const std::size_t n = (j + 1) % polygon.size();
    total += winding_segment(v, polygon[j], polygon[n], values[j], values[n], 0);
  }
  return static_cast<int>(std::lround(total / (2.0 * kPi)));
}

}  // namespace

const char* to_string(Channel c) {
  switch (c) {
    case Channel::Even: return "even";
    case Channel::Odd: return "odd";
    case Channel::None: return "none";
  }
  return "none";
}

int digits_needed(std::complex<double> z) {
  if (z.imag() == 0.0) return std::numeric_limits<int>::max();
  const double ratio = std::abs(z.real()) / std::abs(z.imag());
  return 2 + std::max(0, static_cast<int>(std::ceil(std::log10(ratio))));
}

int count_zeros_in_disk(const PiecewisePotential& v, std::complex<double> center, double radius) {
  const int n = 64;
  std::vector<cd> circle;
  for (int j = 0; j < n; ++j) circle.push_back(center + std::polar(radius, 2.0 * kPi * j / n));
  return winding(v, circle);
}

int count_zeros_in_rectangle(const PiecewisePotential& v, double re_lo, double re_hi, double im_lo,
                             double im_hi) {
  const int n = 64;
  std::vector<cd> path;
  for (int j = 0; j < n; ++j) path.emplace_back(re_lo + (re_hi - re_lo) * j / n, im_lo);
  for (int j = 0; j < n; ++j) path.emplace_back(re_hi, im_lo + (im_hi - im_lo) * j / n);
  for (int j = 0; j < n; ++j) path.emplace_back(re_hi - (re_hi - re_lo) * j / n, im_hi);
  for (int j = 0; j < n; ++j) path.emplace_back(re_lo, im_hi - (im_hi - im_lo) * j / n);
  return winding(v, path);
}

ResonanceReport find_resonances(const PiecewisePotential& v, const ResonanceQuery& q) {
  if (!(q.k_min > 0.0) || !(q.k_max > q.k_min)) {
    throw Error("resonance", ErrorCode::InvalidArgument, "k window must satisfy 0 < k_min < k_max");
  }
  if (!(q.max_im > 0.0)) throw Error("resonance", ErrorCode::InvalidArgument, "max_im must be positive");
  q.precision.tier_digits();
  ResonanceReport report;
  if (v.is_free()) return report;

  const std::vector<double> seeds = scan_minima(v, q);
  std::vector<SeedOutcome> outcomes(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t j) { outcomes[j] = refine_seed(v, seeds[j], q); });

  std::vector<Resonance> found;
  for (auto& o : outcomes) {
    if (!o.root) {
      report.diagnostics.push_back(o.why);
      continue;
    }
    const Resonance& r = *o.root;
    if (r.z.real() < q.k_min || r.z.real() > q.k_max || !(r.z.imag() > -q.max_im)) continue;
    found.push_back(std::move(*o.root));
  }
  std::sort(found.begin(), found.end(), [](const Resonance& a, const Resonance& b) { return a.z.real() < b.z.real(); });
  for (auto& r : found) {
    if (!report.roots.empty()) {
      Resonance& prev = report.roots.back();
      const double tol_prev = std::pow(10.0, -(prev.digits - 2)) * std::abs(prev.z);
      const double tol_here = std::pow(10.0, -(r.digits - 2)) * std::abs(r.z);
      const double radius = 1e3 * std::max({tol_prev, tol_here, prev.root_error, r.root_error});
      if (std::abs(prev.z - r.z) < radius) {
        if (r.root_error < prev.root_error) prev = std::move(r);
        continue;
      }
    }
    report.roots.push_back(std::move(r));
  }

  if (q.verify_simple) {
    for (std::size_t j = 0; j < report.roots.size(); ++j) {
      Resonance& r = report.roots[j];
      double radius = 0.02 * std::abs(r.z);
      for (std::size_t i = 0; i < report.roots.size(); ++i) {
        if (i != j) radius = std::min(radius, 0.4 * std::abs(report.roots[i].z - r.z));
      }
      try {
        r.simple_root = count_zeros_in_disk(v, r.z, radius) == 1;
      } catch (const Error& e) {
        report.diagnostics.push_back(std::string("argument principle skipped: ") + e.what());
      }
    }
  }
  for (std::size_t j = 1; j < report.roots.size(); ++j) {
    if (report.roots[j].Gamma < report.roots[j - 1].Gamma) report.gamma_monotone = false;
  }
  return report;
}

std::vector<Resonance> find_resonances(const PiecewisePotential& v, double k_min, double k_max,
                                       double max_im, Precision precision) {
  ResonanceQuery q;
  q.k_min = k_min;
  q.k_max = k_max;
  q.max_im = max_im;
  q.precision = precision;
  return find_resonances(v, q).roots;
}

GamowFunction gamow_from_resonance(const PiecewisePotential& v, const Resonance& r) {
  if (v.is_free()) throw Error("resonance", ErrorCode::NotApplicable, "free potential has no resonances");
  const double mismatch = std::abs(r.b_plus * r.b_minus - 1.0);
  if (!(mismatch <= r.b_tolerance)) {
    std::ostringstream os;
    os << "|b+(z) b-(z) - 1| = " << mismatch << " exceeds " << r.b_tolerance;
    throw Error("resonance", ErrorCode::InconsistentRoot, os.str());
  }
  if (v.is_symmetric() && !(std::abs(r.b_plus - r.b_minus) <= r.b_tolerance)) {
    throw Error("resonance", ErrorCode::InconsistentRoot, "b+(z) != b-(z) for a symmetric potential");
  }
  GamowFunction g;
  g.z = r.z;
  g.channel = r.channel;
  g.normalization = r.normalization;
  g.reference_half_width = reference_half_width(v);
  dispatch(Precision{r.digits}, [&](auto tag) {
    using Real = typename decltype(tag)::type;
    const auto z = convert_complex<Real>(r.z_wide);
    const auto sol = solve_scattering<Real>(v, z);
    // a(z) must still vanish relative to its slope at this precision.
    const double drift = convert_real<double>(Real(abs(sol.a))) / std::abs(r.a_prime);
    if (!(drift <= 10.0 * r.root_error)) {
      throw Error("resonance", ErrorCode::InconsistentRoot, "a(z) does not vanish for this potential");
    }
    g.wave = to_double(sol.f_plus).scaled(1.0 / r.normalization);
  });
  return g;
}

double squared_norm(const PiecewiseWave<double>& f, double lo, double hi) {
  using Rule = boost::math::quadrature::gauss<double, 20>;
  double total = 0.0;
  for (const auto& seg : f.segments()) {
    const double a = seg.unbounded_left ? lo : std::max(lo, seg.left);
    const double b = seg.unbounded_right ? hi : std::min(hi, seg.right);
    if (!(b > a)) continue;
    const double scale = 1.0 + std::abs(seg.k_tilde.real()) + std::abs(seg.k_tilde.imag());
    const int pieces = std::max(1, static_cast<int>(std::ceil((b - a) * scale / 2.0)));
    const double w = (b - a) / pieces;
    for (int p = 0; p < pieces; ++p) {
      const double left = a + p * w;
      total += Rule::integrate(
          [&](double x) {
            cd val;
            cd der;
            propagate(seg, x, val, der);
            return std::norm(val);
          },
          left, left + w);
    }
  }
  return total;
}

TruncatedGamow truncate(const GamowFunction& g, double half_width, int samples) {
  if (!(half_width > 0.0)) throw Error("resonance", ErrorCode::InvalidArgument, "half width must be positive");
  if (samples < 3 || samples % 2 == 0) {
    throw Error("resonance", ErrorCode::InvalidArgument, "need an odd sample count of at least three");
  }
  TruncatedGamow t;
  t.half_width = half_width;
  t.samples = SampledFunction::from([&](double x) { return g(x); }, -half_width, half_width, samples);
  t.squared_norm = squared_norm(g.wave, -half_width, half_width);
  return t;
}

double decay_rate_si(const Resonance& r, const UnitScheme& units) { return units.to_si_rate(r.Gamma); }

}  // namespace reslab
