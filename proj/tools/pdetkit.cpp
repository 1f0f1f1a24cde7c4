#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "pdetkit/bench.hpp"
#include "pdetkit/io.hpp"

using namespace pdetkit;

namespace {

bool parse_bool(const std::string& s) {
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw Error(ErrorCode::BadConfig, "expected a boolean, got '" + s + "'");
}

std::vector<ld::Algorithm> parse_algorithms(const std::string& list) {
  std::vector<ld::Algorithm> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto a = ld::parse_algorithm(item);
    if (!a) throw Error(ErrorCode::BadConfig, "unknown algorithm '" + item + "'");
    out.push_back(*a);
  }
  return out;
}

ld::Rational parse_step(const std::string& s) {
  const auto slash = s.find('/');
  if (slash == std::string::npos) return ld::Rational::approximate(std::stod(s));
  return ld::Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
}

// Writes to --out when given, stdout otherwise.
template <class Fn>
void emit(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  fn(f);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Log-determinant and pseudo-determinant benchmarks and checks"};
  app.require_subcommand(1);

  std::size_t n = 256, trials = 5, count = 20, threads = 1, p = 4;
  std::uint64_t seed = 1;
  std::string rho_grid, rho_step, alg = "ld1,ld2,ld3", spd = "false", orth = "false",
                                  gamma = "half", delta = "true", out, load_a, load_x,
                                  suite = "all";
  bool raw = false, sabotage = false;
  double t = 0.3;
  int order = 10;

  auto* bench = app.add_subcommand("bench", "counter and timing sweep over rho");
  auto* verify = app.add_subcommand("verify", "run identity verification suites");
  auto* model = app.add_subcommand("model", "emit the analytic cost curves");
  auto* demo = app.add_subcommand("gp-demo", "mixed-model likelihood and Neumann series demo");

  for (auto* sub : {bench, verify, model, demo}) {
    sub->add_option("--seed", seed, "base seed");
    sub->add_option("--out", out, "output path (stdout when omitted)");
  }
  bench->add_option("--n", n, "matrix size")->check(CLI::PositiveNumber);
  auto* grid_opt = bench->add_option("--rho-grid", rho_grid, "comma-separated rho values");
  bench->add_option("--rho-step", rho_step, "rho grid step")->excludes(grid_opt);
  bench->add_option("--alg", alg, "comma-separated subset of ld1,ld2,ld3");
  bench->add_option("--spd", spd, "A is symmetric positive definite");
  bench->add_option("--orth", orth, "X has orthonormal columns");
  bench->add_option("--gamma", gamma, "Gram matrix cost: half or full")
      ->check(CLI::IsMember({"half", "full"}));
  bench->add_option("--delta", delta, "charge the X^perp basis construction");
  bench->add_option("--trials", trials, "repetitions per rho");
  bench->add_option("--load-a", load_a, "read A from a .dmx file");
  bench->add_option("--load-x", load_x, "read X from a .dmx file");
  bench->add_option("--threads", threads, "worker threads for trials");
  bench->add_flag("--raw", raw, "one row per trial instead of the median");

  verify->add_option("--suite", suite, "kernels, geninv, pdet, logdet, gp or all")
      ->check(CLI::IsMember({"kernels", "geninv", "pdet", "logdet", "gp", "all"}));
  verify->add_option("--count", count, "seeded instances per suite");
  verify->add_flag("--sabotage", sabotage)->group("");

  model->add_option("--rho-step", rho_step, "rho step, e.g. 1/32 or 0.25");

  demo->add_option("--n", n, "matrix size");
  demo->add_option("--p", p, "mean-function columns");
  demo->add_option("--t", t, "t lambda_max of the kernel term");
  demo->add_option("--order", order, "largest Neumann order in the table");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*bench) {
      bench::BenchConfig c;
      c.n = n;
      if (!rho_grid.empty()) c.rho_grid = bench::parse_rho_list(rho_grid);
      if (!rho_step.empty()) c.rho_grid = bench::rho_grid_from_step(std::stod(rho_step));
      c.algorithms = parse_algorithms(alg);
      c.flags.spd = parse_bool(spd);
      c.flags.orth = parse_bool(orth);
      c.flags.gamma_half = gamma == "half";
      c.flags.delta_precomputed = !parse_bool(delta);
      c.trials = trials;
      c.seed = seed;
      c.raw = raw;
      c.threads = threads;
      if (!load_a.empty()) c.load_a = io::load_dmx(load_a);
      if (!load_x.empty()) c.load_x = io::load_dmx(load_x);
      const auto rows = bench::run_bench(c);
      emit(out, [&](std::ostream& o) { bench::write_csv(o, rows); });
      return 0;
    }
    if (*verify) {
      bench::VerifyOptions o;
      o.suite = suite;
      o.seed = seed;
      o.count = count;
      o.sabotage = sabotage;
      const auto results = bench::run_verify(o);
      emit(out, [&](std::ostream& s) { bench::write_verify_report(s, results); });
      for (const auto& r : results)
        if (!r.passed) return 1;
      return 0;
    }
    if (*model) {
      const auto rows = bench::run_model(rho_step.empty() ? ld::Rational(1, 32)
                                                          : parse_step(rho_step));
      emit(out, [&](std::ostream& o) { bench::write_model_csv(o, rows); });
      return 0;
    }
    bench::GpDemoOptions o;
    if (demo->count("--n") == 0) n = o.n;
    o.n = n;
    o.p = p;
    o.t = t;
    o.order = order;
    o.seed = seed;
    bool ok = false;
    emit(out, [&](std::ostream& s) { ok = bench::gp_demo(o, s); });
    return ok ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
