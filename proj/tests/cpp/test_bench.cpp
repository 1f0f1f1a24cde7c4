#include <sstream>

#include "doctest.h"
#include "pdetkit/bench.hpp"
#include "pdetkit/random.hpp"

using namespace pdetkit;
using namespace pdetkit::bench;

namespace {

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string csv(const std::vector<CsvRow>& rows) {
  std::ostringstream s;
  write_csv(s, rows);
  return s.str();
}

std::string drop_column(const std::string& line, std::size_t col) {
  std::istringstream in(line);
  std::string cell, out;
  for (std::size_t i = 0; std::getline(in, cell, ','); ++i) {
    if (i != col) out += cell;
    out += ',';
  }
  return out;
}

}  // namespace

TEST_CASE("rho grids") {
  const auto g = default_rho_grid();
  CHECK(g.size() == 32);
  CHECK(g.front() == doctest::Approx(1.0 / 33));
  CHECK(g.back() < 1.0);
  CHECK(rho_grid_from_step(0.25) == std::vector<double>{0.25, 0.5, 0.75});
  CHECK(parse_rho_list("0.1,0.5, 0.9") == std::vector<double>{0.1, 0.5, 0.9});
  CHECK_THROWS_AS(parse_rho_list("0.1,abc"), Error);
  CHECK_THROWS_AS(rho_grid_from_step(1.5), Error);
}

TEST_CASE("config validation") {
  BenchConfig c;
  c.n = 16;
  CHECK_NOTHROW(validate(c));
  c.rho_grid = {};
  CHECK_THROWS_AS(validate(c), Error);
  c.rho_grid = {1.0};
  CHECK_THROWS_AS(validate(c), Error);
  c.rho_grid = {0.5};
  c.trials = 0;
  CHECK_THROWS_AS(validate(c), Error);
  c.trials = 1;
  c.load_a = DenseMatrix(3, 3);
  CHECK_THROWS_AS(validate(c), Error);
}

TEST_CASE("single-row bench") {
  BenchConfig c;
  c.n = 32;
  c.rho_grid = {0.5};
  c.trials = 1;
  c.algorithms = {ld::Algorithm::LD1};
  const auto out = lines(csv(run_bench(c)));
  REQUIRE(out.size() == 2);
  CHECK(out[0] == kCsvHeader);
  CHECK(out[1].rfind("LD1,32,16,0.5,0,0,0.5,1,median,", 0) == 0);
}

TEST_CASE("macs_per_n3 is the exact quotient") {
  CsvRow r;
  r.n = 4;
  r.macs_total = 96;
  CHECK(r.macs_per_n3() == 1.5);
}

TEST_CASE("raw rows, ordering and determinism") {
  BenchConfig c;
  c.n = 24;
  c.rho_grid = {0.3, 0.6};
  c.trials = 3;
  c.raw = true;
  const auto a = run_bench(c);
  REQUIRE(a.size() == 3 * 2 * 3);
  CHECK(a[0].algorithm == ld::Algorithm::LD1);
  CHECK(a[0].trial == "0");
  CHECK(a[2].trial == "2");
  CHECK(a[3].rho == 0.6);
  CHECK(a.back().algorithm == ld::Algorithm::LD3);

  c.threads = 4;
  const auto b = run_bench(c);
  const auto la = lines(csv(a)), lb = lines(csv(b));
  REQUIRE(la.size() == lb.size());
  for (std::size_t i = 0; i < la.size(); ++i) CHECK(drop_column(la[i], 11) == drop_column(lb[i], 11));
}

TEST_CASE("counters at n = 256 follow the model for LD2 with orthonormal X") {
  BenchConfig c;
  c.n = 256;
  c.rho_grid = default_rho_grid();
  c.trials = 1;
  c.algorithms = {ld::Algorithm::LD2};
  c.flags.orth = true;
  for (const auto& row : run_bench(c)) {
    const double model =
        ld::complexity_model(ld::Algorithm::LD2, static_cast<double>(row.p) / 256, c.flags);
    CHECK(std::abs(row.macs_per_n3() / model - 1) < 0.10);
  }
}

TEST_CASE("loaded matrices are used for every trial") {
  BenchConfig c;
  c.n = 12;
  c.rho_grid = {0.5};
  c.trials = 2;
  c.raw = true;
  c.load_a = random_spd(12, 1, 2, 3);
  Rng rng(4);
  c.load_x = random_gaussian(12, 11, rng);
  c.flags.spd = true;
  const auto rows = run_bench(c);
  CHECK(rows[0].logabs == rows[1].logabs);
}

TEST_CASE("model table") {
  const auto rows = run_model(ld::Rational(1, 4));
  CHECK(rows.size() == 3 * 16 * 5);
  std::ostringstream s;
  write_model_csv(s, rows);
  const auto out = lines(s.str());
  CHECK(out[1] == "LD1,1,1,0.5,1,0,0.3333333333333333,1,3");
  bool found = false;
  for (const auto& l : out) found |= l == "LD2,0,0,1,1,1,4.5,9,2";
  CHECK(found);
  CHECK_THROWS_AS(run_model(ld::Rational(0)), Error);
}

TEST_CASE("verify report and exit contract") {
  auto results = run_verify(VerifyOptions{"pdet", 1, 10, false});
  std::ostringstream s;
  write_verify_report(s, results);
  for (const auto& r : results) CHECK_MESSAGE(r.passed, r.name);
  CHECK(s.str().find("FAIL") == std::string::npos);

  results = run_verify(VerifyOptions{"pdet", 1, 10, true});
  std::ostringstream t;
  write_verify_report(t, results);
  CHECK(t.str().find("FAIL") != std::string::npos);

  CHECK_THROWS_AS(run_verify(VerifyOptions{"nope", 1, 10, false}), Error);
}

TEST_CASE("gp demo") {
  std::ostringstream s;
  CHECK(gp_demo(GpDemoOptions{24, 3, 0.3, 6, 1}, s));
  CHECK(s.str().find("backends agree within 1e-8: PASS") != std::string::npos);

  std::ostringstream z;
  CHECK(gp_demo(GpDemoOptions{16, 2, 0.0, 2, 1}, z));
  CHECK(z.str().find("\n0,0,-\n") != std::string::npos);

  std::ostringstream w;
  CHECK(gp_demo(GpDemoOptions{16, 2, 0.9, 12, 1}, w));
  CHECK(w.str().find("warning") != std::string::npos);
  CHECK(w.str().find(",0.8999") != std::string::npos);

  std::ostringstream d;
  CHECK_THROWS_AS(gp_demo(GpDemoOptions{16, 2, 1.0, 2, 1}, d), Error);
  CHECK(d.str().empty());
}
