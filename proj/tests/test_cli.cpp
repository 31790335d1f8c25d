#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "reslab/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int status;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int status = reslab::cli::run(args, out, err);
  return {status, out.str(), err.str()};
}

std::vector<std::vector<std::string>> rows(const std::string& csv) {
  std::vector<std::vector<std::string>> out;
  std::stringstream ss(csv);
  std::string line;
  while (std::getline(ss, line)) {
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    out.push_back(fields);
  }
  return out;
}

fs::path scratch(const std::string& name) { return fs::temp_directory_path() / ("reslab_cli_" + name); }

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

const std::vector<std::string> kModerate = {"--ell", "1",   "--delta", "0.8", "--lambda", "20",
                                            "--kmin", "1",  "--kmax",  "1.5", "--max-im", "0.1"};

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

}  // namespace

TEST_CASE("free potential transmits everything") {
  const auto r = run({"scatter", "--potential", "free", "--kmin", "0.5", "--kmax", "5", "--nk", "10"});
  REQUIRE(r.status == 0);
  const auto t = rows(r.out);
  REQUIRE(t.size() == 11);
  CHECK(t[0] == std::vector<std::string>{"k", "re_a", "im_a", "re_b_plus", "im_b_plus", "T", "R_plus"});
  for (std::size_t i = 1; i < t.size(); ++i) {
    CHECK(std::stod(t[i][5]) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::stod(t[i][6]) == doctest::Approx(0.0));
  }
}

TEST_CASE("u234 reproduces the measured rate") {
  const auto r = run({"u234"});
  REQUIRE(r.status == 0);
  const auto t = rows(r.out);
  REQUIRE(t.size() == 2);
  CHECK(t[0] == std::vector<std::string>{"re_z", "im_z", "Gamma_SI", "relative_deviation"});
  CHECK(std::stod(t[1][0]) == doctest::Approx(7.4872419260189873).epsilon(1e-15));
  CHECK(std::stod(t[1][3]) < 1e-3);
}

TEST_CASE("usage errors exit with the config code") {
  auto r = run({"scatter", "--bogus", "1"});
  CHECK(r.status == reslab::cli::kExitConfig);
  CHECK(r.err.rfind("error: cli.ConfigError: ", 0) == 0);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  CHECK(r.out.empty());

  CHECK(run({}).status == reslab::cli::kExitConfig);
  CHECK(run({"nonsense"}).status == reslab::cli::kExitConfig);
  CHECK(run({"scatter", "--potential", "triangle"}).status == reslab::cli::kExitConfig);
  CHECK(run({"scatter", "--kmin", "-1"}).status == reslab::cli::kExitConfig);
  r = run({"scatter", "--potential", "custom", "--breakpoints", "0,1", "--heights", "1,2"});
  CHECK(r.status == reslab::cli::kExitConfig);
  CHECK(r.err.rfind("error: potential.InvalidArgument: ", 0) == 0);
  CHECK(run({"resonances", "--a0_m", "-1"}).status == reslab::cli::kExitConfig);
  CHECK(run({"scatter", "--output", "/nonexistent-dir/x.csv"}).status == reslab::cli::kExitConfig);
}

TEST_CASE("help exits cleanly") {
  const auto r = run({"survival", "--help"});
  CHECK(r.status == 0);
  CHECK(r.out.find("Usage") != std::string::npos);
  CHECK(r.out.find("--tol") != std::string::npos);
}

TEST_CASE("config file with flag overrides") {
  const fs::path cfg = scratch("scatter.cfg");
  write_file(cfg,
             "# rectangular barrier\n"
             "potential = rect\n"
             "ell = 0.5\n"
             "lambda = 3\n"
             "kmin = 1\n"
             "kmax = 2\n"
             "nk = 3\n");
  const auto from_file = run({"scatter", "--config", cfg.string()});
  REQUIRE(from_file.status == 0);
  CHECK(rows(from_file.out).size() == 4);
  const auto overridden = run({"scatter", "--config", cfg.string(), "--nk", "5"});
  REQUIRE(overridden.status == 0);
  const auto t = rows(overridden.out);
  REQUIRE(t.size() == 6);
  CHECK(t[1][0] == "1");
  CHECK(t[5][0] == "2");
  const auto flags = run({"scatter", "--potential", "rect", "--ell", "0.5", "--lambda", "3", "--kmin", "1", "--kmax",
                          "2", "--nk", "5"});
  CHECK(flags.out == overridden.out);

  write_file(cfg, "potential rect\n");
  CHECK(run({"scatter", "--config", cfg.string()}).status == reslab::cli::kExitConfig);
  write_file(cfg, "colour = blue\n");
  CHECK(run({"scatter", "--config", cfg.string()}).status == reslab::cli::kExitConfig);
  CHECK(run({"scatter", "--config", (scratch("missing.cfg")).string()}).status == reslab::cli::kExitConfig);
  fs::remove(cfg);
}

TEST_CASE("output file matches stdout") {
  const fs::path out = scratch("res.csv");
  const auto args = with({"resonances"}, kModerate);
  const auto a = run(args);
  REQUIRE(a.status == 0);
  const auto b = run(with(args, {"--output", out.string()}));
  REQUIRE(b.status == 0);
  CHECK(b.out.empty());
  std::ifstream in(out, std::ios::binary);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text == a.out);
  const auto t = rows(a.out);
  REQUIRE(t.size() >= 2);
  CHECK(t[0] == std::vector<std::string>{"re_z", "im_z", "E", "Gamma", "Gamma_SI", "channel"});
  CHECK(t[1][5] == "even");
  fs::remove(out);
}

TEST_CASE("identical runs are byte-identical across thread counts") {
  const auto args = with({"survival", "--tol", "1e-3", "--times", "0,2,50,400"}, kModerate);
  const auto one = run(with(args, {"--threads", "1"}));
  const auto three = run(with(args, {"--threads", "3"}));
  REQUIRE(one.status == 0);
  CHECK(one.out == three.out);
  const auto t = rows(one.out);
  REQUIRE(t.size() == 5);
  CHECK(t[0] == std::vector<std::string>{"t", "P", "window_mass", "pole_P"});
  CHECK(std::stod(t[1][1]) == doctest::Approx(1.0).epsilon(1e-9));
  // Deep in the exponential regime the pole term carries the survival.
  CHECK(std::stod(t[4][3]) == doctest::Approx(std::stod(t[4][1])).epsilon(0.02));

  ::setenv("RESLAB_THREADS", "2", 1);
  CHECK(run(args).out == one.out);
  ::setenv("RESLAB_THREADS", "two", 1);
  CHECK(run(args).status == reslab::cli::kExitConfig);
  ::unsetenv("RESLAB_THREADS");
}

TEST_CASE("transform tracks the pole term across the U-234 resonance") {
  const auto r = run({"transform", "--nk", "21", "--samples", "4001"});
  REQUIRE(r.status == 0);
  const auto t = rows(r.out);
  REQUIRE(t.size() == 22);
  CHECK(t[0] == std::vector<std::string>{"k", "abs_psihat_plus", "abs_eta"});
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double a = std::stod(t[i][1]);
    const double b = std::stod(t[i][2]);
    CHECK(std::abs(a - b) < 0.05 * b);
  }
  // k offsets are far below the double spacing of Re z, so k is printed wide.
  CHECK(t[1][0] != t[2][0]);
  CHECK(t[1][0].size() > 40);
}

TEST_CASE("numeric and verification failures") {
  auto r = run(with({"gamow", "--root", "7"}, kModerate));
  CHECK(r.status == reslab::cli::kExitNumeric);
  CHECK(r.err.rfind("error: cli.NotApplicable: ", 0) == 0);

  // A free packet against the grid with an impossible threshold: CSV is still written.
  const fs::path psi = scratch("bump.csv");
  {
    std::ofstream f(psi);
    f << "x,re,im\n";
    for (int j = 0; j <= 160; ++j) {
      const double x = -0.8 + 0.01 * j;
      const double u = 1.0 - x * x / 0.64;
      f << x << ',' << (u > 0 ? std::pow(u, 6) : 0.0) << ",0\n";
    }
  }
  const std::vector<std::string> base = {"oracle-compare", "--potential", "free", "--psi-file", psi.string(),
                                         "--tol", "1e-10", "--times", "0,0.05", "--window", "1",
                                         "--dx", "0.01", "--dt", "0.001", "--box", "20"};
  r = run(with(base, {"--threshold", "1e-15"}));
  CHECK(r.status == reslab::cli::kExitVerification);
  CHECK(r.err.find("error: oracle.VerificationFailed: ") != std::string::npos);
  CHECK(rows(r.out).size() == 3);
  r = run(base);
  CHECK(r.status == 0);
  const auto t = rows(r.out);
  REQUIRE(t.size() == 3);
  CHECK(t[0] == std::vector<std::string>{"t", "l2_diff", "flag"});
  CHECK(std::stod(t[2][1]) < 1e-3);
  CHECK(t[2][2] == "0");

  write_file(psi, "x,re\n0,1\n0.1,1\n0.3,1\n");
  CHECK(run(base).status == reslab::cli::kExitConfig);
  fs::remove(psi);
}
