#include "reslab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "reslab/errors.hpp"
#include "reslab/oracle.hpp"
#include "reslab/parallel.hpp"
#include "reslab/potential.hpp"
#include "reslab/resonance.hpp"
#include "reslab/scattering.hpp"
#include "reslab/spectral.hpp"
#include "reslab/units.hpp"

namespace reslab::cli {
namespace {

// Measured alpha-decay rate of U-234, s^-1.
constexpr double kU234GammaSI = 1.3361e-13;
constexpr double kU234Tolerance = 1e-3;

struct RunConfig {
  std::string potential = "doublewell";
  double ell = 1.0;
  double delta = 2.0;
  double lambda = 436.0;
  std::string breakpoints;
  std::string heights;

  double a0_m = UnitScheme::alpha_decay_default().a0();
  double E1_MeV = UnitScheme::alpha_decay_default().E1_MeV();
  double mass_kg = UnitScheme::alpha_decay_default().particle_mass();

  int digits = 15;
  std::optional<int> threads;
  std::string output;

  double kmin = 7.0;
  double kmax = 8.0;
  double max_im = 1.0;
  int root = 0;
  int nk = 201;
  double halfwidths = 10.0;

  std::string psi_file;
  double width = 0.0;  // 0: inner half-width of the potential
  int samples = 2001;
  double tol = 1e-6;

  std::string times;
  double tmin = 0.0;
  double tmax = 10.0;
  int nt = 11;
  bool log_times = false;

  std::optional<double> xmin;
  std::optional<double> xmax;
  int nx = 101;
  std::optional<double> window;

  double h = 0.01;
  double dt = 0.005;
  std::optional<double> box;
  double bandwidth_fraction = 1e-8;
  double threshold = 1e-3;
  bool richardson = true;
};

[[noreturn]] void config_error(const std::string& message) { throw Error("cli", ErrorCode::ConfigError, message); }

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string wide_num(const WideReal& x, int digits) {
  if (digits <= 17) return num(static_cast<double>(x));
  return x.str(digits);
}

void csv_row(std::ostream& os, std::initializer_list<std::string> fields) {
  bool first = true;
  for (const auto& f : fields) {
    if (!first) os << ',';
    os << f;
    first = false;
  }
  os << '\n';
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (item.empty() || used != item.size() || !std::isfinite(x)) config_error("bad number '" + item + "' in " + what);
    out.push_back(x);
  }
  if (out.empty()) config_error(what + " is empty");
  return out;
}

// --config FILE becomes --key=value tokens right after the subcommand, so
// later command-line flags override them.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config") {
      if (i + 1 >= args.size()) config_error("--config needs a file name");
      path = args[++i];
    } else if (a.rfind("--config=", 0) == 0) {
      path = a.substr(9);
    } else {
      out.push_back(a);
    }
  }
  if (!path) return out;
  if (out.empty() || out.front().rfind("-", 0) == 0) config_error("--config must follow a subcommand");
  std::ifstream in(*path);
  if (!in) config_error("cannot read config file " + *path);
  std::vector<std::string> injected;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string key = eq == std::string::npos ? "" : trim(line.substr(0, eq));
    if (key.empty()) config_error(*path + ":" + std::to_string(line_no) + ": expected key = value");
    injected.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
  }
  out.insert(out.begin() + 1, injected.begin(), injected.end());
  return out;
}

PiecewisePotential build_potential(const RunConfig& c) {
  if (c.potential == "doublewell") return make_double_well(c.ell, c.delta, c.lambda);
  if (c.potential == "rect") return make_rectangular_well(c.ell, c.lambda);
  if (c.potential == "free") return PiecewisePotential::free();
  return PiecewisePotential(parse_list(c.breakpoints, "breakpoints"), parse_list(c.heights, "heights"));
}

UnitScheme build_units(const RunConfig& c) { return UnitScheme(c.a0_m, c.E1_MeV, c.mass_kg); }

void warn(std::ostream& err, const std::string& module, const std::string& message) {
  err << "warning: " << module << ": " << message << '\n';
}

ResonanceReport search(const RunConfig& c, const PiecewisePotential& v, std::ostream& err) {
  if (!(c.kmax > c.kmin)) config_error("kmax must exceed kmin");
  ResonanceQuery q;
  q.k_min = c.kmin;
  q.k_max = c.kmax;
  q.max_im = c.max_im;
  q.precision = Precision{c.digits};
  ResonanceReport rep = find_resonances(v, q);
  for (const auto& d : rep.diagnostics) warn(err, "resonance", d);
  return rep;
}

Resonance select_root(const RunConfig& c, const PiecewisePotential& v, std::ostream& err) {
  const ResonanceReport rep = search(c, v, err);
  if (static_cast<std::size_t>(c.root) >= rep.roots.size()) {
    throw Error("cli", ErrorCode::NotApplicable,
                "no root with index " + std::to_string(c.root) + " in the search window (" +
                    std::to_string(rep.roots.size()) + " found)");
  }
  return rep.roots[c.root];
}

// Uniform samples "x,re[,im]" per line; non-numeric lines are skipped.
SampledFunction read_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot read samples from " + path);
  std::vector<double> xs;
  std::vector<std::complex<double>> ys;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || !(std::isdigit(static_cast<unsigned char>(line[0])) || line[0] == '-' || line[0] == '+' ||
                          line[0] == '.')) {
      continue;
    }
    const auto f = parse_list(line, path);
    if (f.size() < 2 || f.size() > 3) config_error(path + ": expected x,re[,im] per line");
    xs.push_back(f[0]);
    ys.emplace_back(f[1], f.size() == 3 ? f[2] : 0.0);
  }
  if (xs.size() < 3 || xs.size() % 2 == 0) config_error(path + ": need an odd number of samples, at least 3");
  SampledFunction s;
  s.x0 = xs.front();
  s.h = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
  if (!(s.h > 0.0)) config_error(path + ": x must increase");
  for (std::size_t j = 0; j < xs.size(); ++j) {
    if (std::abs(xs[j] - s.x_at(j)) > 1e-9 * s.h * static_cast<double>(xs.size())) {
      config_error(path + ": x grid is not uniform");
    }
  }
  s.values = std::move(ys);
  return s;
}

struct Input {
  SampledFunction psi;
  std::optional<Resonance> root;
  cdouble overlap;  // <G, psi>
};

Input load_input(const RunConfig& c, const PiecewisePotential& v, std::ostream& err, bool need_root) {
  Input in;
  if (c.psi_file.empty()) {
    if (v.is_free()) config_error("the free potential has no Gamow input; pass --psi-file");
    in.root = select_root(c, v, err);
    const GamowFunction g = gamow_from_resonance(v, *in.root);
    const double w = c.width > 0.0 ? c.width : v.inner_half_width().value_or(v.half_support());
    const TruncatedGamow tg = truncate(g, w, c.samples);
    in.psi = tg.samples;
    in.overlap = tg.squared_norm;
    return in;
  }
  in.psi = read_samples(c.psi_file);
  if (!v.is_free()) {
    const ResonanceReport rep = search(c, v, err);
    if (static_cast<std::size_t>(c.root) < rep.roots.size()) in.root = rep.roots[c.root];
  }
  if (in.root) {
    in.overlap = overlap(in.psi, gamow_from_resonance(v, *in.root).wave);
  } else if (need_root) {
    throw Error("cli", ErrorCode::NotApplicable, "no resonance in the search window");
  }
  return in;
}

SpectralCoefficients transform_input(const RunConfig& c, const PiecewisePotential& v, const Input& in,
                                     std::ostream& err) {
  SpectralOptions o;
  o.tol = c.tol;
  if (in.root) o.resonances = {in.root->z};
  SpectralCoefficients coeffs = forward_transform(in.psi, v, o);
  for (const auto& w : coeffs.warnings) warn(err, "spectral", w);
  return coeffs;
}

std::vector<double> time_list(const RunConfig& c) {
  std::vector<double> t;
  if (!c.times.empty()) {
    t = parse_list(c.times, "times");
  } else if (c.nt == 1) {
    t = {c.tmin};
  } else {
    if (c.nt < 1 || !(c.tmax >= c.tmin)) config_error("need nt >= 1 and tmax >= tmin");
    if (c.log_times && !(c.tmin > 0.0)) config_error("log-spaced times need tmin > 0");
    for (int i = 0; i < c.nt; ++i) {
      const double s = static_cast<double>(i) / (c.nt - 1);
      t.push_back(c.log_times ? c.tmin * std::pow(c.tmax / c.tmin, s) : c.tmin + (c.tmax - c.tmin) * s);
    }
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < 0.0 || (i > 0 && t[i] < t[i - 1])) config_error("times must be nonnegative and sorted");
  }
  return t;
}

double window_of(const RunConfig& c, const PiecewisePotential& v, const SampledFunction& psi) {
  if (c.window) {
    if (!(*c.window > 0.0)) config_error("window must be positive");
    return *c.window;
  }
  if (!v.is_free()) return v.half_support();
  return std::max(std::abs(psi.x0), std::abs(psi.x_end()));
}

std::vector<double> x_list(const RunConfig& c, double window) {
  const double lo = c.xmin.value_or(-window);
  const double hi = c.xmax.value_or(window);
  if (c.nx < 1 || !(hi >= lo)) config_error("need nx >= 1 and xmax >= xmin");
  if (c.nx == 1) return {lo};
  std::vector<double> x(c.nx);
  for (int i = 0; i < c.nx; ++i) x[i] = lo + (hi - lo) * static_cast<double>(i) / (c.nx - 1);
  return x;
}

void warn_unreliable(const EvolutionResult& r, std::ostream& err) {
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    if (!r.reliable[i]) warn(err, "spectral", "t = " + num(r.times[i]) + " is below the quadrature error bound");
  }
}

// ---------------------------------------------------------------------------

void cmd_scatter(const RunConfig& c, std::ostream& os, std::ostream&) {
  const PiecewisePotential v = build_potential(c);
  if (!(c.kmin > 0.0) || !(c.kmax >= c.kmin)) config_error("need 0 < kmin <= kmax");
  csv_row(os, {"k", "re_a", "im_a", "re_b_plus", "im_b_plus", "T", "R_plus"});
  dispatch(Precision{c.digits}, [&](auto tag) {
    using R = typename decltype(tag)::type;
    for (int i = 0; i < c.nk; ++i) {
      const double k = c.nk == 1 ? c.kmin : c.kmin + (c.kmax - c.kmin) * static_cast<double>(i) / (c.nk - 1);
      const auto s = solve_scattering<R>(v, complex_t<R>(R(k), R(0)));
      const auto tr = transmission_reflection(s);
      const std::complex<double> a = convert_complex<double>(s.a);
      const std::complex<double> b = convert_complex<double>(s.b_plus);
      csv_row(os, {num(k), num(a.real()), num(a.imag()), num(b.real()), num(b.imag()), num(tr.T), num(tr.R_plus)});
    }
  });
}

void cmd_resonances(const RunConfig& c, std::ostream& os, std::ostream& err) {
  const PiecewisePotential v = build_potential(c);
  const UnitScheme units = build_units(c);
  const ResonanceReport rep = search(c, v, err);
  if (!rep.gamma_monotone) warn(err, "resonance", "Gamma is not monotone in Re z");
  csv_row(os, {"re_z", "im_z", "E", "Gamma", "Gamma_SI", "channel"});
  for (const auto& r : rep.roots) {
    csv_row(os, {num(r.z.real()), num(r.z.imag()), num(r.E), num(r.Gamma), num(decay_rate_si(r, units)),
                 to_string(r.channel)});
  }
}

void cmd_gamow(const RunConfig& c, std::ostream& os, std::ostream& err) {
  const PiecewisePotential v = build_potential(c);
  const Resonance r = select_root(c, v, err);
  const GamowFunction g = gamow_from_resonance(v, r);
  csv_row(os, {"x", "re_G", "im_G", "abs_G"});
  for (double x : x_list(c, v.half_support())) {
    const cdouble y = g(x);
    csv_row(os, {num(x), num(y.real()), num(y.imag()), num(std::abs(y))});
  }
}

void cmd_transform(const RunConfig& c, std::ostream& os, std::ostream& err) {
  const PiecewisePotential v = build_potential(c);
  const Input in = load_input(c, v, err, true);
  const Resonance& r = *in.root;
  const Precision p{std::max(c.digits, r.digits)};
  const WideReal centre = real(r.z_wide);
  const WideReal span = abs(imag(r.z_wide)) * WideReal(c.halfwidths);
  if (!(centre - span > 0)) config_error("k window reaches k <= 0; lower --halfwidths");
  const int k_digits = r.digits > 15 ? r.digits + 5 : 17;
  csv_row(os, {"k", "abs_psihat_plus", "abs_eta"});
  for (int i = 0; i < c.nk; ++i) {
    const WideReal k = c.nk == 1 ? centre : centre + span * WideReal(2 * i - (c.nk - 1)) / WideReal(c.nk - 1);
    const TransformValue tv = transform_at(in.psi, v, k, p);
    csv_row(os, {wide_num(k, k_digits), num(std::abs(tv.plus)), num(std::abs(eta_bar(r, in.overlap, k)))});
  }
}

void cmd_evolve(const RunConfig& c, std::ostream& os, std::ostream& err) {
  const PiecewisePotential v = build_potential(c);
  const Input in = load_input(c, v, err, false);
  const std::vector<double> times = time_list(c);
  const double w = window_of(c, v, in.psi);
  const SpectralCoefficients coeffs = transform_input(c, v, in, err);
  const EvolutionResult ev = evolve(coeffs, v, times, w, x_list(c, w));
  warn_unreliable(ev, err);
  csv_row(os, {"t", "x", "re_psi", "im_psi", "abs2"});
  for (std::size_t i = 0; i < ev.times.size(); ++i) {
    for (std::size_t j = 0; j < ev.x_grid.size(); ++j) {
      const cdouble y = ev.profiles[i][j];
      csv_row(os, {num(ev.times[i]), num(ev.x_grid[j]), num(y.real()), num(y.imag()), num(std::norm(y))});
    }
  }
}

void cmd_survival(const RunConfig& c, std::ostream& os, std::ostream& err) {
  const PiecewisePotential v = build_potential(c);
  const Input in = load_input(c, v, err, false);
  const std::vector<double> times = time_list(c);
  const SpectralCoefficients coeffs = transform_input(c, v, in, err);
  const EvolutionResult ev = evolve(coeffs, v, times, window_of(c, v, in.psi), {});
  warn_unreliable(ev, err);
  const auto P = survival_probability(ev);
  std::optional<PoleApproximation> pole;
  if (in.root) pole = pole_approximation_evolution(*in.root, laurent_tilde_f(*in.root, in.overlap), times);
  csv_row(os, {"t", "P", "window_mass", "pole_P"});
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double pole_P = pole ? std::norm(pole->amplitude[i] / ev.spectral_mass) : std::nan("");
    csv_row(os, {num(P[i].t), num(P[i].P), num(ev.window_mass[i]), num(pole_P)});
  }
}

void cmd_oracle_compare(const RunConfig& c, std::ostream& os, std::ostream& err) {
  const PiecewisePotential v = build_potential(c);
  const Input in = load_input(c, v, err, false);
  const std::vector<double> times = time_list(c);
  const double w = window_of(c, v, in.psi);
  const SpectralCoefficients coeffs = transform_input(c, v, in, err);
  const double k_eff = effective_bandwidth(coeffs, c.bandwidth_fraction);
  double box = 0.0;
  if (c.box) {
    box = *c.box;
  } else {
    // Far enough that flux at 2 k_eff cannot return to the window by tmax.
    const double reach = std::max({w + 4.0 * k_eff * times.back(), std::abs(in.psi.x0), std::abs(in.psi.x_end())});
    box = std::ceil(reach / c.h + 1.0) * c.h;
  }
  auto psi0 = [&](double x) { return in.psi(x); };
  PropagationOptions po;
  po.dt = c.dt;
  po.window = w;
  po.k_max = k_eff;
  const GridWave w0 = GridWave::from(psi0, box, c.h);
  const auto grid = c.richardson ? propagate_richardson(psi0, box, c.h, v, times, po)
                                 : propagate_crank_nicolson(w0, v, times, po);
  const EvolutionResult ev = evolve(coeffs, v, times, w, window_nodes(w0, w));
  warn_unreliable(ev, err);
  const auto cmp = compare(ev, grid, w);
  csv_row(os, {"t", "l2_diff", "flag"});
  double worst = 0.0;
  for (const auto& m : cmp) {
    csv_row(os, {num(m.t), num(m.l2_diff), m.flag ? "1" : "0"});
    if (!m.flag) worst = std::max(worst, m.l2_diff);
  }
  if (worst > c.threshold) {
    throw Error("oracle", ErrorCode::VerificationFailed,
                "spectral and grid evolutions differ by " + num(worst) + " > " + num(c.threshold));
  }
}

void cmd_u234(const RunConfig& c, std::ostream& os, std::ostream& err) {
  const UnitScheme units = build_units(c);
  ResonanceQuery q;
  q.k_min = 7.0;
  q.k_max = 8.0;
  q.precision = Precision{c.digits};
  const ResonanceReport rep = find_resonances(make_double_well(1.0, 2.0, 436.0), q);
  for (const auto& d : rep.diagnostics) warn(err, "resonance", d);
  if (rep.roots.empty()) throw Error("resonance", ErrorCode::NotApplicable, "no root near Re z = 7.5");
  const Resonance& r = rep.roots.front();
  const double gamma_si = decay_rate_si(r, units);
  const double deviation = std::abs(gamma_si / kU234GammaSI - 1.0);
  csv_row(os, {"re_z", "im_z", "Gamma_SI", "relative_deviation"});
  csv_row(os, {num(r.z.real()), num(r.z.imag()), num(gamma_si), num(deviation)});
  if (deviation > kU234Tolerance) {
    throw Error("u234", ErrorCode::VerificationFailed,
                "Gamma_SI deviates by " + num(deviation) + " from " + num(kU234GammaSI));
  }
}

// ---------------------------------------------------------------------------

void add_common(CLI::App* s, RunConfig& c, std::string& config_path) {
  s->add_option("--config", config_path, "key=value file; keys are flag names, flags on the command line win");
  s->add_option("--threads", c.threads, "worker threads (default: RESLAB_THREADS or 1)")->check(CLI::PositiveNumber);
  s->add_option("--output,-o", c.output, "write CSV here instead of stdout");
  s->add_option("--digits", c.digits, "working precision in decimal digits")->check(CLI::Range(1, 100));
}

void add_units(CLI::App* s, RunConfig& c) {
  s->add_option("--a0_m", c.a0_m, "length unit in metres");
  s->add_option("--E1_MeV", c.E1_MeV, "energy unit in MeV");
  s->add_option("--mass_kg", c.mass_kg, "particle mass in kg");
}

void add_potential(CLI::App* s, RunConfig& c) {
  s->add_option("--potential", c.potential, "doublewell, rect, free or custom")
      ->check(CLI::IsMember({"doublewell", "rect", "free", "custom"}));
  s->add_option("--ell", c.ell, "inner half-width");
  s->add_option("--delta", c.delta, "barrier thickness");
  s->add_option("--lambda", c.lambda, "barrier or well height");
  s->add_option("--breakpoints", c.breakpoints, "custom: x0,x1,...,xn");
  s->add_option("--heights", c.heights, "custom: V on each interval, n values");
}

void add_search(CLI::App* s, RunConfig& c) {
  s->add_option("--kmin", c.kmin, "lower end of the Re k window");
  s->add_option("--kmax", c.kmax, "upper end of the Re k window");
  s->add_option("--max-im", c.max_im, "largest |Im z| searched")->check(CLI::PositiveNumber);
  s->add_option("--root", c.root, "index of the root, sorted by Re z")->check(CLI::NonNegativeNumber);
}

void add_input(CLI::App* s, RunConfig& c) {
  s->add_option("--psi-file", c.psi_file, "initial state as uniform x,re[,im] samples (default: truncated Gamow)");
  s->add_option("--width", c.width, "truncation half-width of the Gamow input");
  s->add_option("--samples", c.samples, "odd sample count of the Gamow input")->check(CLI::Range(3, 10000001));
}

void add_evolution(CLI::App* s, RunConfig& c) {
  s->add_option("--tol", c.tol, "relative Parseval defect to reach")->check(CLI::PositiveNumber);
  s->add_option("--times", c.times, "comma-separated times; overrides tmin/tmax/nt");
  s->add_option("--tmin", c.tmin, "first time");
  s->add_option("--tmax", c.tmax, "last time");
  s->add_option("--nt", c.nt, "number of times")->check(CLI::PositiveNumber);
  s->add_flag("--log-times", c.log_times, "geometric instead of uniform spacing");
  s->add_option("--window", c.window, "half-width of the observation window (default: potential support)");
}

void add_x_grid(CLI::App* s, RunConfig& c) {
  s->add_option("--xmin", c.xmin, "first x (default: -window)");
  s->add_option("--xmax", c.xmax, "last x (default: window)");
  s->add_option("--nx", c.nx, "number of x points")->check(CLI::PositiveNumber);
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::ConfigError: return kExitConfig;
    case ErrorCode::VerificationFailed: return kExitVerification;
    default: return kExitNumeric;
  }
}

int report(std::ostream& err, const std::string& code, std::string message, int status) {
  std::replace(message.begin(), message.end(), '\n', ' ');
  err << "error: " << code << ": " << message << '\n';
  return status;
}

int configure_threads(const RunConfig& c) {
  int n = 1;
  if (c.threads) {
    n = *c.threads;
  } else if (const char* env = std::getenv("RESLAB_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1 || v > 4096) config_error("RESLAB_THREADS must be a positive integer");
    n = static_cast<int>(v);
  }
  set_default_threads(n);
  return n;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  std::string config_path;
  using Command = void (*)(const RunConfig&, std::ostream&, std::ostream&);
  std::vector<std::pair<CLI::App*, Command>> commands;

  CLI::App app{"Resonances and decay of quasi-stationary states in 1D piecewise-constant potentials", "reslab"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  std::vector<std::string> argv;
  try {
    argv = expand_config(args);
  } catch (const Error& e) {
    return report(err, e.qualified_code(), e.what(), kExitConfig);
  }
  const std::string first = argv.empty() ? "" : argv.front();
  if (first == "scatter") {
    c.kmin = 0.1;
    c.kmax = 10.0;
  }
  if (first == "u234") c.digits = 50;

  auto add = [&](const char* name, const char* help, Command cmd) {
    CLI::App* s = app.add_subcommand(name, help);
    add_common(s, c, config_path);
    commands.emplace_back(s, cmd);
    return s;
  };

  CLI::App* s = add("scatter", "a(k), b+(k), T and R+ on a uniform real k grid", cmd_scatter);
  add_potential(s, c);
  s->add_option("--kmin", c.kmin, "first k");
  s->add_option("--kmax", c.kmax, "last k");
  s->add_option("--nk", c.nk, "number of k points")->check(CLI::PositiveNumber);

  s = add("resonances", "zeros z of a(k) in the lower half plane, with E, Gamma and the SI decay rate",
          cmd_resonances);
  add_potential(s, c);
  add_units(s, c);
  add_search(s, c);

  s = add("gamow", "the Gamow function of one root, scaled to unit peak on the inner region", cmd_gamow);
  add_potential(s, c);
  add_search(s, c);
  add_x_grid(s, c);

  s = add("transform",
          "|psi^+(k)| of the input against the pole term |<G,psi> c / (k - conj z)| across the resonance",
          cmd_transform);
  add_potential(s, c);
  add_search(s, c);
  add_input(s, c);
  s->add_option("--nk", c.nk, "number of k points")->check(CLI::PositiveNumber);
  s->add_option("--halfwidths", c.halfwidths, "k window |k - Re z| in units of |Im z|")
      ->check(CLI::PositiveNumber);

  s = add("evolve", "psi(t, x) from the generalised eigenfunction expansion", cmd_evolve);
  add_potential(s, c);
  add_search(s, c);
  add_input(s, c);
  add_evolution(s, c);
  add_x_grid(s, c);

  s = add("survival", "survival probability, window mass and the pole approximation over time", cmd_survival);
  add_potential(s, c);
  add_search(s, c);
  add_input(s, c);
  add_evolution(s, c);

  s = add("oracle-compare", "relative L2 gap between spectral and Crank-Nicolson evolution on the window",
          cmd_oracle_compare);
  add_potential(s, c);
  add_search(s, c);
  add_input(s, c);
  add_evolution(s, c);
  s->add_option("--dx", c.h, "grid spacing")->check(CLI::PositiveNumber);
  s->add_option("--dt", c.dt, "time step")->check(CLI::PositiveNumber);
  s->add_option("--box", c.box, "half-width B of the grid box (default: from the spectral bandwidth)");
  s->add_option("--bandwidth-fraction", c.bandwidth_fraction, "spectral mass allowed above the box speed")
      ->check(CLI::PositiveNumber);
  s->add_option("--threshold", c.threshold, "largest acceptable gap at unflagged times")
      ->check(CLI::PositiveNumber);
  s->add_flag("--richardson,!--no-richardson", c.richardson, "combine runs at h and h/2 (default on)");

  s = add("u234", "alpha decay of U-234: root near k = 7.49 of the (1, 2, 436) double well and its SI rate",
          cmd_u234);
  add_units(s, c);

  std::vector<const char*> ptrs = {"reslab"};
  for (const auto& a : argv) ptrs.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(ptrs.size()), ptrs.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    return report(err, "cli.ConfigError", e.what(), kExitConfig);
  }

  std::ostringstream csv;
  int status = kExitOk;
  try {
    configure_threads(c);
    std::ofstream file;
    if (!c.output.empty()) {
      file.open(c.output, std::ios::binary | std::ios::trunc);
      if (!file) config_error("cannot write " + c.output);
    }
    Command cmd = nullptr;
    for (const auto& [sub, fn] : commands) {
      if (sub->parsed()) cmd = fn;
    }
    try {
      cmd(c, csv, err);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::VerificationFailed) throw;
      status = report(err, e.qualified_code(), e.what(), kExitVerification);
    }
    if (file.is_open()) {
      file << csv.str();
    } else {
      out << csv.str();
    }
  } catch (const Error& e) {
    return report(err, e.qualified_code(), e.what(), exit_code(e.code()));
  } catch (const std::exception& e) {
    return report(err, "cli.Internal", e.what(), kExitNumeric);
  }
  return status;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace reslab::cli
