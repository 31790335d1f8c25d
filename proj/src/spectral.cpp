#include "reslab/spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/legendre.hpp>

#include "reslab/errors.hpp"
#include "reslab/parallel.hpp"

namespace reslab {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kN = kPanelNodes;
const double kSqrt2Pi = std::sqrt(2.0 * kPi);
// Phase k^2 |t| at the edge of the origin panel beyond which its plain
// Gauss rule is no longer trusted.
constexpr double kOriginPhaseLimit = 20.0;

struct Gauss {
  std::array<double, kN> x{};
  std::array<double, kN> w{};
  // (2n+1)/2 w_i P_n(x_i): maps node values to Legendre coefficients.
  std::array<std::array<double, kN>, kN> to_legendre{};
};

const Gauss& gauss() {
  static const Gauss g = [] {
    Gauss r;
    using Rule = boost::math::quadrature::gauss<double, kN>;
    const auto& a = Rule::abscissa();
    const auto& wt = Rule::weights();
    for (int i = 0; i < kN / 2; ++i) {
      r.x[kN / 2 - 1 - i] = -a[i];
      r.w[kN / 2 - 1 - i] = wt[i];
      r.x[kN / 2 + i] = a[i];
      r.w[kN / 2 + i] = wt[i];
    }
    for (int n = 0; n < kN; ++n) {
      for (int i = 0; i < kN; ++i) {
        r.to_legendre[n][i] = 0.5 * (2 * n + 1) * r.w[i] * boost::math::legendre_p(n, r.x[i]);
      }
    }
    return r;
  }();
  return g;
}

// ---------------------------------------------------------------------------
// Overlap of the quadratic interpolant with conj(f), one wave segment at a time.

struct Moments {
  cdouble c0;   // int cos(w t)
  cdouble c2;   // int t^2 cos(w t)
  cdouble s1t;  // int t sin(w t) / w
};

Moments filon_moments(cdouble w) {
  Moments m;
  if (std::abs(w) < 1.0) {
    const cdouble w2 = w * w;
    cdouble pe = 1.0;  // (-1)^n w^2n / (2n)!
    cdouble po = 1.0;  // (-1)^n w^2n / (2n+1)!
    for (int n = 0; n < 30; ++n) {
      if (n > 0) {
        pe *= -w2 / double((2 * n - 1) * (2 * n));
        po *= -w2 / double((2 * n) * (2 * n + 1));
      }
      m.c0 += pe * (2.0 / (2 * n + 1));
      m.c2 += pe * (2.0 / (2 * n + 3));
      m.s1t += po * (2.0 / (2 * n + 3));
      if (std::abs(pe) < 1e-18) break;
    }
    return m;
  }
  const cdouble s = std::sin(w);
  const cdouble c = std::cos(w);
  const cdouble w2 = w * w;
  m.c0 = 2.0 * s / w;
  m.c2 = 2.0 * ((w2 - 2.0) * s + 2.0 * w * c) / (w2 * w);
  m.s1t = 2.0 * (s - w * c) / (w2 * w);
  return m;
}

cdouble sinc(cdouble z) {
  if (std::abs(z) < 1e-4) return 1.0 - z * z / 6.0;
  return std::sin(z) / z;
}

// int_l^r q(x) conj(f(x)) dx with q the quadratic through (l, ql), (m, qm), (r, qr).
cdouble segment_overlap(const WaveSegment<double>& s, double l, double r, cdouble ql, cdouble qm, cdouble qr,
                        const Moments& mom) {
  const double mid = 0.5 * (l + r);
  const double w = 0.5 * (r - l);
  const cdouble q0 = qm;
  const cdouble q1 = 0.5 * (qr - ql);
  const cdouble q2 = 0.5 * (qr + ql) - qm;
  const cdouble kappa = std::conj(s.k_tilde);
  const cdouble even = q0 * mom.c0 + q2 * mom.c2;
  const double offset = mid - s.anchor;
  const cdouble theta = kappa * offset;
  const cdouble ct = std::cos(theta);
  const cdouble st = std::sin(theta);
  const cdouble cos_part = w * (ct * even - st * q1 * (kappa * w) * mom.s1t);
  const cdouble sin_part = w * (offset * sinc(theta) * even + ct * w * q1 * mom.s1t);
  return std::conj(s.value) * cos_part + std::conj(s.derivative) * sin_part;
}

}  // namespace

cdouble overlap(const SampledFunction& psi, const PiecewiseWave<double>& f) {
  const std::size_t panels = (psi.values.size() - 1) / 2;
  const double h = psi.h;
  cdouble total = 0.0;
  for (const auto& s : f.segments()) {
    const double seg_lo = s.unbounded_left ? -std::numeric_limits<double>::infinity() : s.left;
    const double seg_hi = s.unbounded_right ? std::numeric_limits<double>::infinity() : s.right;
    if (seg_hi <= psi.x0 || seg_lo >= psi.x_end()) continue;
    const double p_lo = std::floor((std::max(seg_lo, psi.x0) - psi.x0) / (2.0 * h));
    const double p_hi = std::ceil((std::min(seg_hi, psi.x_end()) - psi.x0) / (2.0 * h));
    const std::size_t first = static_cast<std::size_t>(std::max(0.0, p_lo));
    const std::size_t last = std::min(panels, static_cast<std::size_t>(std::max(0.0, p_hi)));
    const Moments full = filon_moments(std::conj(s.k_tilde) * h);
    for (std::size_t p = first; p < last; ++p) {
      const double l = psi.x_at(2 * p);
      const double r = psi.x_at(2 * p + 2);
      const double lo = std::max(l, seg_lo);
      const double hi = std::min(r, seg_hi);
      if (!(hi > lo)) continue;
      const cdouble y0 = psi.values[2 * p];
      const cdouble y1 = psi.values[2 * p + 1];
      const cdouble y2 = psi.values[2 * p + 2];
      if (lo == l && hi == r) {
        total += segment_overlap(s, l, r, y0, y1, y2, full);
        continue;
      }
      const double mid = 0.5 * (l + r);
      const cdouble q1 = 0.5 * (y2 - y0);
      const cdouble q2 = 0.5 * (y2 + y0) - y1;
      auto q = [&](double x) {
        const double tau = (x - mid) / h;
        return y1 + tau * (q1 + tau * q2);
      };
      const double sub_mid = 0.5 * (lo + hi);
      total += segment_overlap(s, lo, hi, q(lo), q(sub_mid), q(hi),
                               filon_moments(std::conj(s.k_tilde) * (0.5 * (hi - lo))));
    }
  }
  return total;
}

namespace {

void check_samples(const SampledFunction& psi) {
  if (psi.values.size() < 3 || psi.values.size() % 2 == 0 || !(psi.h > 0.0)) {
    throw Error("spectral", ErrorCode::InvalidArgument, "samples need h > 0 and an odd count >= 3");
  }
}

struct NodeWaves {
  PiecewiseWave<double> f_plus;
  PiecewiseWave<double> f_minus;
  cdouble a;
};

NodeWaves node_waves(const PiecewisePotential& v, const WideReal& k, Precision p) {
  NodeWaves out;
  dispatch(p, [&](auto tag) {
    using R = typename decltype(tag)::type;
    const auto sol = solve_scattering<R>(v, complex_t<R>(convert_real<R>(k)));
    out.a = convert_complex<double>(sol.a);
    if constexpr (std::is_same_v<R, double>) {
      out.f_plus = sol.f_plus;
      out.f_minus = sol.f_minus;
    } else {
      out.f_plus = to_double(sol.f_plus);
      out.f_minus = to_double(sol.f_minus);
    }
  });
  return out;
}

NodeWaves node_waves(const PiecewisePotential& v, double k, Precision p) {
  if (!p.is_extended()) {
    NodeWaves out;
    const auto sol = solve_scattering<double>(v, cdouble(k));
    out.a = sol.a;
    out.f_plus = sol.f_plus;
    out.f_minus = sol.f_minus;
    return out;
  }
  return node_waves(v, WideReal(k), p);
}

TransformValue transform_with(const SampledFunction& psi, const NodeWaves& w) {
  const cdouble denom = kSqrt2Pi * std::conj(w.a);
  return {overlap(psi, w.f_plus) / denom, overlap(psi, w.f_minus) / denom};
}

// ---------------------------------------------------------------------------
// Panel construction.

struct PanelData {
  SpectralPanel panel;
  std::array<double, kN> k{};
  std::array<double, kN> dk{};
  std::array<cdouble, kN> plus{};
  std::array<cdouble, kN> minus{};
  double mass = 0.0;
};

void place_nodes(PanelData& d) {
  const auto& g = gauss();
  if (d.panel.kind == PanelKind::Origin) {
    const double kr = std::sqrt(d.panel.eps_hi);
    for (int i = 0; i < kN; ++i) {
      d.k[i] = 0.5 * kr * (1.0 + g.x[i]);
      d.dk[i] = 0.5 * kr * g.w[i];
    }
    return;
  }
  const double m = 0.5 * (d.panel.eps_lo + d.panel.eps_hi);
  const double h = 0.5 * (d.panel.eps_hi - d.panel.eps_lo);
  for (int i = 0; i < kN; ++i) {
    d.k[i] = std::sqrt(m + h * g.x[i]);
    d.dk[i] = h * g.w[i] / (2.0 * d.k[i]);
  }
}

PanelData evaluate_panel(const SampledFunction& psi, const PiecewisePotential& v, const SpectralPanel& p) {
  PanelData d;
  d.panel = p;
  place_nodes(d);
  for (int i = 0; i < kN; ++i) {
    const auto t = transform_with(psi, node_waves(v, d.k[i], Precision::standard()));
    d.plus[i] = t.plus;
    d.minus[i] = t.minus;
    d.mass += d.dk[i] * (std::norm(t.plus) + std::norm(t.minus));
  }
  return d;
}

std::vector<PanelData> evaluate_panels(const SampledFunction& psi, const PiecewisePotential& v,
                                       const std::vector<SpectralPanel>& panels) {
  std::vector<PanelData> out(panels.size());
  parallel_for(panels.size(), [&](std::size_t i) { out[i] = evaluate_panel(psi, v, panels[i]); });
  return out;
}

// Panel edges in eps over (eps_from, eps_to].
std::vector<double> edges(double eps_from, double eps_to, double origin_eps, double base_dk,
                          const std::vector<cdouble>& resonances) {
  std::vector<double> e;
  const double eps_geo_end = base_dk * base_dk;
  for (double x = 2.0 * origin_eps; x < eps_geo_end; x *= 2.0) e.push_back(x);
  const double k_to = std::sqrt(eps_to);
  for (double k = base_dk; k < k_to; k += base_dk) e.push_back(k * k);
  e.push_back(eps_to);
  for (const cdouble z : resonances) {
    const cdouble z2 = z * z;
    const double E = z2.real();
    const double G = -z2.imag();
    if (!(E > 0.0) || !(G > 1e-12 * E)) continue;
    for (int side : {-1, 1}) {
      double step = 0.25 * G;
      double x = E;
      e.push_back(E);
      while (true) {
        x += side * step;
        if (x <= 2.0 * origin_eps || x >= eps_to) break;
        e.push_back(x);
        const double local = 2.0 * std::sqrt(x) * base_dk;
        if (std::abs(x - E) >= G) step *= 1.6;
        if (step > local) break;
      }
    }
  }
  std::erase_if(e, [&](double x) { return !(x > eps_from) || x > eps_to; });
  std::sort(e.begin(), e.end());
  std::vector<double> out;
  double prev = eps_from;
  for (double x : e) {
    if (x - prev > 1e-13 * std::max(1.0, x)) {
      out.push_back(x);
      prev = x;
    }
  }
  if (out.empty() || out.back() != eps_to) {
    if (!out.empty()) out.back() = eps_to;
    else out.push_back(eps_to);
  }
  return out;
}

std::vector<SpectralPanel> split(const SpectralPanel& p) {
  const double m = 0.5 * (p.eps_lo + p.eps_hi);
  return {{PanelKind::Regular, p.eps_lo, m}, {PanelKind::Regular, m, p.eps_hi}};
}

// Bisects panels until the Gauss mass and the two-half mass agree to `abs_tol`.
// Accepted panels are replaced by their halves.
void refine(const SampledFunction& psi, const PiecewisePotential& v, std::vector<SpectralPanel> candidates,
            double abs_tol, int max_panels, std::vector<PanelData>& done, std::vector<std::string>& warnings) {
  std::vector<PanelData> current = evaluate_panels(psi, v, candidates);
  for (int depth = 0; !current.empty(); ++depth) {
    std::vector<SpectralPanel> halves;
    halves.reserve(2 * current.size());
    for (const auto& c : current) {
      for (const auto& h : split(c.panel)) halves.push_back(h);
    }
    std::vector<PanelData> evaluated = evaluate_panels(psi, v, halves);
    std::vector<PanelData> next;
    for (std::size_t i = 0; i < current.size(); ++i) {
      PanelData& l = evaluated[2 * i];
      PanelData& r = evaluated[2 * i + 1];
      const double diff = std::abs(current[i].mass - l.mass - r.mass);
      const double width = current[i].panel.eps_hi - current[i].panel.eps_lo;
      const bool too_many = static_cast<int>(done.size() + 2 * next.size()) > max_panels;
      const bool too_narrow = width < 1e-12 * current[i].panel.eps_hi;
      if (diff <= abs_tol || diff <= 1e-14 * std::abs(current[i].mass) || too_many || too_narrow || depth > 40) {
        if ((too_many || too_narrow || depth > 40) && diff > abs_tol) {
          std::ostringstream os;
          os << "panel [" << current[i].panel.eps_lo << ", " << current[i].panel.eps_hi
             << "] not converged, mass difference " << diff;
          warnings.push_back(os.str());
        }
        done.push_back(std::move(l));
        done.push_back(std::move(r));
      } else {
        next.push_back(std::move(l));
        next.push_back(std::move(r));
      }
    }
    current = std::move(next);
  }
}

double default_k_max(const std::vector<cdouble>& resonances) {
  double k = 10.0;
  for (const cdouble z : resonances) {
    const cdouble z2 = z * z;
    const double E = z2.real();
    const double G = -z2.imag();
    if (!(E > 0.0)) continue;
    k = std::max(k, z.real() + std::max(40.0 * G / (2.0 * std::sqrt(E)), 10.0));
  }
  return k;
}

double support_half_width(const SampledFunction& psi) {
  return std::max({std::abs(psi.x0), std::abs(psi.x_end()), psi.x_end() - psi.x0});
}

// Values F_j(x) = psi^+_j u+(k_j, x) + psi^-_j u-(k_j, x) for all nodes.
void expansion_integrand(const SpectralCoefficients& c, const std::vector<NodeWaves>& waves, double x,
                         std::vector<cdouble>& out) {
  out.resize(c.k_grid.size());
  for (std::size_t j = 0; j < c.k_grid.size(); ++j) {
    const NodeWaves& w = waves[j];
    const cdouble norm = kSqrt2Pi * w.a;
    out[j] = (c.psi_hat_plus[j] * w.f_plus(x) + c.psi_hat_minus[j] * w.f_minus(x)) / norm;
  }
}

std::vector<NodeWaves> all_node_waves(const SpectralCoefficients& c, const PiecewisePotential& v) {
  std::vector<NodeWaves> w(c.k_grid.size());
  parallel_for(c.k_grid.size(), [&](std::size_t j) { w[j] = node_waves(v, c.k_grid[j], Precision::standard()); });
  return w;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace

// ---------------------------------------------------------------------------

double squared_norm(const SampledFunction& psi) {
  check_samples(psi);
  // Three-point Gauss is exact for |q|^2 of degree four.
  const double r = std::sqrt(0.6);
  const double nodes[3] = {-r, 0.0, r};
  const double weights[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  double total = 0.0;
  for (std::size_t p = 0; p + 2 < psi.values.size(); p += 2) {
    const cdouble y0 = psi.values[p];
    const cdouble y1 = psi.values[p + 1];
    const cdouble y2 = psi.values[p + 2];
    const cdouble q1 = 0.5 * (y2 - y0);
    const cdouble q2 = 0.5 * (y2 + y0) - y1;
    for (int i = 0; i < 3; ++i) {
      const double t = nodes[i];
      total += weights[i] * std::norm(y1 + t * (q1 + t * q2));
    }
  }
  return total * psi.h;
}

TransformValue transform_at(const SampledFunction& psi, const PiecewisePotential& v, double k, Precision p) {
  check_samples(psi);
  if (!(k > 0.0)) throw Error("spectral", ErrorCode::InvalidArgument, "transform needs k > 0");
  return transform_with(psi, node_waves(v, k, p));
}

TransformValue transform_at(const SampledFunction& psi, const PiecewisePotential& v, const WideReal& k,
                            Precision p) {
  check_samples(psi);
  if (!(k > 0)) throw Error("spectral", ErrorCode::InvalidArgument, "transform needs k > 0");
  return transform_with(psi, node_waves(v, k, p));
}

cdouble truncated_cos_transform(double ell, double delta, double lambda, cdouble z, cdouble c, const WideReal& k,
                                Precision p) {
  cdouble a2;
  dispatch(p, [&](auto tag) {
    using R = typename decltype(tag)::type;
    const auto co = double_well_coefficients<R>(R(ell), R(delta), R(lambda), complex_t<R>(convert_real<R>(k)));
    a2 = convert_complex<double>(co.a2);
  });
  const double kd = convert_real<double>(k);
  auto term = [&](cdouble q) { return ell * sinc(q * ell); };
  return c / (kSqrt2Pi * std::conj(a2)) * (term(kd - z) + term(kd + z));
}

cdouble truncated_cos_transform(double ell, double delta, double lambda, cdouble z, cdouble c, double k,
                                Precision p) {
  return truncated_cos_transform(ell, delta, lambda, z, c, WideReal(k), p);
}

cdouble eta_bar(const Resonance& r, cdouble overlap, const WideReal& k) {
  const WideComplex d = WideComplex(k) - WideComplex(real(r.z_wide), -imag(r.z_wide));
  return std::conj(r.residue_scale) * overlap / convert_complex<double>(d);
}

SpectralCoefficients forward_transform(const SampledFunction& psi, const PiecewisePotential& v,
                                       const SpectralOptions& options) {
  check_samples(psi);
  if (!(options.tol > 0.0) || !(options.origin_eps > 0.0)) {
    throw Error("spectral", ErrorCode::InvalidArgument, "tol and origin_eps must be positive");
  }
  SpectralCoefficients out;
  if (options.bound_state_check && v.has_negative_region() && bound_state_diagnostic(v)) {
    out.warnings.push_back("potential appears to bind a state; the expansion is incomplete");
  }
  out.input_norm2 = squared_norm(psi);
  const double base_dk = options.base_dk > 0.0 ? options.base_dk : std::min(0.25, 1.0 / support_half_width(psi));
  double k_max = options.k_max > 0.0 ? options.k_max : default_k_max(options.resonances);
  const double k_limit = options.k_max_limit > 0.0 ? options.k_max_limit : 64.0 * k_max;
  if (k_max * k_max <= 4.0 * options.origin_eps) {
    throw Error("spectral", ErrorCode::InvalidArgument, "k_max too small");
  }

  std::vector<PanelData> done;
  done.push_back(evaluate_panel(psi, v, {PanelKind::Origin, 0.0, options.origin_eps}));
  const double abs_tol = 0.1 * options.tol * std::max(out.input_norm2, 1e-300);

  auto add_range = [&](double eps_from, double eps_to) {
    const auto e = edges(eps_from, eps_to, options.origin_eps, base_dk, options.resonances);
    std::vector<SpectralPanel> panels;
    double prev = eps_from;
    for (double x : e) {
      panels.push_back({PanelKind::Regular, prev, x});
      prev = x;
    }
    refine(psi, v, panels, abs_tol, options.max_panels, done, out.warnings);
  };
  auto mass = [&] {
    double m = 0.0;
    for (const auto& d : done) m += d.mass;
    return m;
  };

  add_range(options.origin_eps, k_max * k_max);
  double total = mass();
  auto defect = [&] { return out.input_norm2 > 0.0 ? std::abs(total - out.input_norm2) / out.input_norm2 : 0.0; };
  while (defect() > options.tol && k_max < k_limit) {
    const double next = std::min(1.5 * k_max, k_limit);
    add_range(k_max * k_max, next * next);
    k_max = next;
    total = mass();
  }
  if (defect() > options.tol) {
    std::ostringstream os;
    os << "Parseval defect " << defect() << " above tolerance " << options.tol << " at k_max " << k_max;
    throw TruncationError(defect(), k_max, os.str());
  }

  std::sort(done.begin(), done.end(),
            [](const PanelData& a, const PanelData& b) { return a.panel.eps_lo < b.panel.eps_lo; });
  for (const auto& d : done) {
    out.panels.push_back(d.panel);
    for (int i = 0; i < kN; ++i) {
      out.k_grid.push_back(d.k[i]);
      out.weight.push_back(d.dk[i]);
      out.psi_hat_plus.push_back(d.plus[i]);
      out.psi_hat_minus.push_back(d.minus[i]);
    }
  }
  out.k_max = k_max;
  out.spectral_mass = total;
  out.parseval_defect = defect();
  for (const cdouble z : options.resonances) {
    const cdouble z2 = z * z;
    const double half = -z2.imag() / (2.0 * std::sqrt(z2.real()));
    ResonanceResolution res{z, 0};
    for (double k : out.k_grid) {
      if (std::abs(k - z.real()) <= half) ++res.samples_within_half_width;
    }
    out.resolution.push_back(res);
  }
  return out;
}

double effective_bandwidth(const SpectralCoefficients& c, double fraction) {
  double above = 0.0;
  const double limit = fraction * c.spectral_mass;
  for (std::size_t j = c.k_grid.size(); j-- > 0;) {
    above += c.weight[j] * (std::norm(c.psi_hat_plus[j]) + std::norm(c.psi_hat_minus[j]));
    if (above > limit) return c.k_grid[j];
  }
  return 0.0;
}

std::vector<cdouble> evolution_weights(const SpectralCoefficients& c, double t) {
  const auto& g = gauss();
  std::vector<cdouble> w(c.k_grid.size());
  std::size_t j = 0;
  std::array<cdouble, kN> moment{};
  for (const auto& p : c.panels) {
    if (p.kind == PanelKind::Origin) {
      for (int i = 0; i < kN; ++i, ++j) {
        const double k = c.k_grid[j];
        w[j] = c.weight[j] * std::exp(cdouble(0.0, -k * k * t));
      }
      continue;
    }
    const double m = 0.5 * (p.eps_lo + p.eps_hi);
    const double h = 0.5 * (p.eps_hi - p.eps_lo);
    // int_{-1}^{1} P_n(s) e^{-i h t s} ds = 2 (-i)^n j_n(h t).
    const double arg = h * t;
    const cdouble phase = h * std::exp(cdouble(0.0, -m * t));
    cdouble in = 1.0;
    for (int n = 0; n < kN; ++n) {
      double jn;
      if (arg == 0.0) {
        jn = n == 0 ? 1.0 : 0.0;
      } else {
        jn = boost::math::sph_bessel(static_cast<unsigned>(n), std::abs(arg));
        if (arg < 0.0 && n % 2 == 1) jn = -jn;
      }
      moment[n] = phase * 2.0 * in * jn;
      in *= cdouble(0.0, -1.0);
    }
    for (int i = 0; i < kN; ++i, ++j) {
      cdouble s = 0.0;
      for (int n = 0; n < kN; ++n) s += moment[n] * g.to_legendre[n][i];
      w[j] = s / (2.0 * c.k_grid[j]);
    }
  }
  return w;
}

std::vector<cdouble> inverse_transform(const SpectralCoefficients& c, const PiecewisePotential& v,
                                       const std::vector<double>& x_grid) {
  const auto waves = all_node_waves(c, v);
  std::vector<cdouble> out(x_grid.size());
  parallel_for(x_grid.size(), [&](std::size_t i) {
    std::vector<cdouble> f;
    expansion_integrand(c, waves, x_grid[i], f);
    cdouble s = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) s += c.weight[j] * f[j];
    out[i] = s;
  });
  return out;
}

QuadratureRule composite_rule(double lo, double hi, std::vector<double> cuts, double max_panel) {
  if (!(hi > lo) || !(max_panel > 0.0)) {
    throw Error("spectral", ErrorCode::InvalidArgument, "composite rule needs hi > lo and a positive panel");
  }
  const auto& g = gauss();
  std::erase_if(cuts, [&](double x) { return !(x > lo && x < hi); });
  cuts.push_back(lo);
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  QuadratureRule q;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double len = cuts[s + 1] - cuts[s];
    const int n = std::max(1, static_cast<int>(std::ceil(len / max_panel)));
    const double step = len / n;
    for (int p = 0; p < n; ++p) {
      const double m = cuts[s] + (p + 0.5) * step;
      for (int i = 0; i < kN; ++i) {
        q.x.push_back(m + 0.5 * step * g.x[i]);
        q.w.push_back(0.5 * step * g.w[i]);
      }
    }
  }
  return q;
}

EvolutionResult evolve(const SpectralCoefficients& c, const PiecewisePotential& v, const std::vector<double>& times,
                       double window, const std::vector<double>& x_grid) {
  for (double t : times) {
    if (!std::isfinite(t)) throw Error("spectral", ErrorCode::InvalidArgument, "times must be finite");
  }
  if (!(window > 0.0)) throw Error("spectral", ErrorCode::InvalidArgument, "window must be positive");
  EvolutionResult r;
  r.times = times;
  r.x_grid = x_grid;
  r.window = window;
  r.spectral_mass = c.spectral_mass;
  const std::size_t nt = times.size();
  const std::size_t nk = c.k_grid.size();

  std::vector<std::vector<cdouble>> w(nt);
  parallel_for(nt, [&](std::size_t i) { w[i] = evolution_weights(c, times[i]); });

  std::vector<double> spectral_density(nk);
  for (std::size_t j = 0; j < nk; ++j) {
    spectral_density[j] = std::norm(c.psi_hat_plus[j]) + std::norm(c.psi_hat_minus[j]);
  }
  r.survival_amplitude.resize(nt);
  for (std::size_t i = 0; i < nt; ++i) {
    cdouble s = 0.0;
    for (std::size_t j = 0; j < nk; ++j) s += w[i][j] * spectral_density[j];
    r.survival_amplitude[i] = s;
  }

  // Legendre tail of the survival integrand on each panel bounds the
  // polynomial-approximation error of every weight set.
  const auto& g = gauss();
  double tail = 0.0;
  double last_value = 0.0;
  {
    std::size_t j = 0;
    for (const auto& p : c.panels) {
      if (p.kind == PanelKind::Origin) {
        j += kN;
        continue;
      }
      const double h = 0.5 * (p.eps_hi - p.eps_lo);
      cdouble hi1 = 0.0;
      cdouble hi2 = 0.0;
      for (int i = 0; i < kN; ++i) {
        const double gi = spectral_density[j + i] / (2.0 * c.k_grid[j + i]);
        hi1 += g.to_legendre[kN - 1][i] * gi;
        hi2 += g.to_legendre[kN - 2][i] * gi;
      }
      tail += 2.0 * h * (std::abs(hi1) + std::abs(hi2));
      last_value = spectral_density[j + kN - 1] / (2.0 * c.k_grid[j + kN - 1]);
      j += kN;
    }
  }
  r.quadrature_error = tail;
  r.reliable.resize(nt);
  const double origin_eps = c.panels.empty() ? 0.0 : c.panels.front().eps_hi;
  for (std::size_t i = 0; i < nt; ++i) {
    const double t = std::abs(times[i]);
    double bound = tail;
    if (t > 0.0) bound += last_value / t;
    r.reliable[i] = origin_eps * t <= kOriginPhaseLimit && std::abs(r.survival_amplitude[i]) > 100.0 * bound;
  }

  std::vector<double> cuts(v.breakpoints().begin(), v.breakpoints().end());
  const QuadratureRule rule = composite_rule(-window, window, cuts, std::min(0.25, 4.0 / std::max(c.k_max, 1.0)));
  const std::size_t nx = x_grid.size();
  const std::size_t nq = rule.x.size();
  const auto waves = all_node_waves(c, v);
  r.profiles.assign(nt, std::vector<cdouble>(nx));
  std::vector<std::vector<double>> mass_terms(nq, std::vector<double>(nt));
  parallel_for(nx + nq, [&](std::size_t i) {
    const double x = i < nx ? x_grid[i] : rule.x[i - nx];
    std::vector<cdouble> f;
    expansion_integrand(c, waves, x, f);
    for (std::size_t ti = 0; ti < nt; ++ti) {
      cdouble s = 0.0;
      for (std::size_t j = 0; j < nk; ++j) s += w[ti][j] * f[j];
      if (i < nx) {
        r.profiles[ti][i] = s;
      } else {
        mass_terms[i - nx][ti] = rule.w[i - nx] * std::norm(s);
      }
    }
  });
  r.window_mass.assign(nt, 0.0);
  for (std::size_t q = 0; q < nq; ++q) {
    for (std::size_t ti = 0; ti < nt; ++ti) r.window_mass[ti] += mass_terms[q][ti];
  }
  return r;
}

std::vector<SurvivalPoint> survival_probability(const EvolutionResult& r) {
  std::vector<SurvivalPoint> out;
  out.reserve(r.times.size());
  const double a0 = r.spectral_mass;
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    out.push_back({r.times[i], a0 > 0.0 ? std::norm(r.survival_amplitude[i]) / (a0 * a0) : 0.0});
  }
  return out;
}

double survival_slope_at_zero(const SpectralCoefficients& c, double dt) {
  auto P = [&](double t) {
    const auto w = evolution_weights(c, t);
    cdouble s = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
      s += w[j] * (std::norm(c.psi_hat_plus[j]) + std::norm(c.psi_hat_minus[j]));
    }
    return std::norm(s) / (c.spectral_mass * c.spectral_mass);
  };
  return (P(dt) - P(-dt)) / (2.0 * dt);
}

std::optional<double> long_time_slope(const EvolutionResult& r) {
  double t_last = 0.0;
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    if (r.reliable[i] && r.times[i] > 0.0) t_last = std::max(t_last, r.times[i]);
  }
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    if (r.reliable[i] && r.times[i] >= 0.1 * t_last && r.times[i] > 0.0) {
      x.push_back(std::log(r.times[i]));
      y.push_back(std::log(std::abs(r.survival_amplitude[i])));
    }
  }
  if (x.size() < 3) return std::nullopt;
  return fit_slope(x, y);
}

std::optional<double> window_decay_rate(const EvolutionResult& r, double t_lo, double t_hi) {
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    if (r.times[i] >= t_lo && r.times[i] <= t_hi && r.window_mass[i] > 0.0) {
      x.push_back(r.times[i]);
      y.push_back(std::log(r.window_mass[i]));
    }
  }
  if (x.size() < 3) return std::nullopt;
  return -fit_slope(x, y);
}

PoleApproximation pole_approximation_evolution(const Resonance& r, std::pair<cdouble, cdouble> tilde_f,
                                               const std::vector<double>& times) {
  if (!(r.E > 0.0) || !(r.Gamma > 0.0)) {
    throw Error("spectral", ErrorCode::InvalidArgument, "pole approximation needs E > 0 and Gamma > 0");
  }
  PoleApproximation p;
  p.times = times;
  p.narrow = r.Gamma / r.E <= 0.1;
  p.prefactor = (std::norm(tilde_f.first) + std::norm(tilde_f.second)) / (2.0 * std::sqrt(r.E)) * kPi / r.Gamma;
  for (double t : times) p.amplitude.push_back(p.prefactor * std::exp(cdouble(-r.Gamma * t, -r.E * t)));
  return p;
}

std::pair<cdouble, cdouble> laurent_tilde_f(const Resonance& r, cdouble overlap) {
  const double s = 2.0 * std::sqrt(r.E);
  return {s * r.residue_scale * overlap, s * r.residue_scale_minus * overlap};
}

PoleApproximation calibrate_pole(const Resonance& r, cdouble exact, double t_ref, const std::vector<double>& times) {
  PoleApproximation p = pole_approximation_evolution(r, {1.0, 0.0}, times);
  p.prefactor = exact * std::exp(cdouble(r.Gamma * t_ref, r.E * t_ref));
  for (std::size_t i = 0; i < times.size(); ++i) {
    p.amplitude[i] = p.prefactor * std::exp(cdouble(-r.Gamma * times[i], -r.E * times[i]));
  }
  return p;
}

LaurentSplit laurent_split_diagnostic(const SpectralCoefficients& c, const PiecewisePotential& v, const Resonance& r,
                                      double half_width) {
  if (v.is_free()) {
    throw Error("spectral", ErrorCode::NotApplicable, "the free potential has no resonance to split off");
  }
  if (!(half_width > 0.0)) throw Error("spectral", ErrorCode::InvalidArgument, "interval half-width must be positive");
  const GamowFunction G = gamow_from_resonance(v, r);
  const double L = v.half_support();
  std::vector<double> cuts(v.breakpoints().begin(), v.breakpoints().end());
  const QuadratureRule rule = composite_rule(-L, L, cuts, std::min(0.25, 4.0 / std::max(c.k_max, 1.0)));
  const auto waves = all_node_waves(c, v);
  const std::size_t nk = c.k_grid.size();
  std::vector<cdouble> eta(nk);
  std::vector<bool> inside(nk);
  for (std::size_t j = 0; j < nk; ++j) {
    const double k = c.k_grid[j];
    eta[j] = (c.psi_hat_plus[j] * r.residue_scale + c.psi_hat_minus[j] * r.residue_scale_minus) / (k - r.z);
    inside[j] = std::abs(k - r.z.real()) <= half_width;
  }
  std::vector<double> principal(rule.x.size());
  std::vector<double> remainder(rule.x.size());
  std::vector<double> outside(rule.x.size());
  parallel_for(rule.x.size(), [&](std::size_t q) {
    std::vector<cdouble> f;
    expansion_integrand(c, waves, rule.x[q], f);
    const cdouble g = G(rule.x[q]);
    double pm = 0.0;
    double rm = 0.0;
    double om = 0.0;
    for (std::size_t j = 0; j < nk; ++j) {
      if (inside[j]) {
        const cdouble p = eta[j] * g;
        pm += c.weight[j] * std::abs(p);
        rm += c.weight[j] * std::abs(f[j] - p);
      } else {
        om += c.weight[j] * std::abs(f[j]);
      }
    }
    principal[q] = rule.w[q] * pm;
    remainder[q] = rule.w[q] * rm;
    outside[q] = rule.w[q] * om;
  });
  LaurentSplit s;
  for (std::size_t q = 0; q < rule.x.size(); ++q) {
    s.principal_mass += principal[q];
    s.remainder_mass += remainder[q];
    s.outside_mass += outside[q];
  }
  return s;
}

}  // namespace reslab
