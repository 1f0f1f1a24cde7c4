#include "pdetkit/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "pdetkit/geninv.hpp"
#include "pdetkit/gp.hpp"
#include "pdetkit/kernels.hpp"
#include "pdetkit/oracle.hpp"
#include "pdetkit/random.hpp"

namespace pdetkit::bench {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

// ---------------------------------------------------------------------------
// rho grids and configuration

std::vector<double> default_rho_grid() {
  std::vector<double> g;
  for (int k = 1; k <= 32; ++k) g.push_back(k / 33.0);
  return g;
}

std::vector<double> rho_grid_from_step(double step) {
  if (!(step > 0.0 && step < 1.0)) throw Error(ErrorCode::BadConfig, "--rho-step must lie in (0, 1)");
  std::vector<double> g;
  for (int k = 1; k * step < 1.0 - 1e-12; ++k) g.push_back(k * step);
  return g;
}

std::vector<double> parse_rho_list(const std::string& text) {
  std::vector<double> g;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    const char* first = item.data();
    while (first < item.data() + item.size() && *first == ' ') ++first;
    const auto r = std::from_chars(first, item.data() + item.size(), v);
    if (r.ec != std::errc() || r.ptr != item.data() + item.size()) {
      throw Error(ErrorCode::BadConfig, "cannot parse rho value '" + item + "'");
    }
    g.push_back(v);
  }
  return g;
}

void validate(const BenchConfig& c) {
  if (c.n < 2) throw Error(ErrorCode::BadConfig, "n must be at least 2");
  if (c.rho_grid.empty()) throw Error(ErrorCode::BadConfig, "empty rho grid");
  for (double r : c.rho_grid) {
    if (!(r > 0.0 && r < 1.0)) throw Error(ErrorCode::BadConfig, "rho values must lie in (0, 1)");
  }
  if (c.trials == 0) throw Error(ErrorCode::BadConfig, "trials must be at least 1");
  if (c.algorithms.empty()) throw Error(ErrorCode::BadConfig, "no algorithm selected");
  if (c.threads == 0) throw Error(ErrorCode::BadConfig, "threads must be at least 1");
  if (c.load_a && (c.load_a->rows() != c.n || c.load_a->cols() != c.n)) {
    throw Error(ErrorCode::BadConfig, "loaded A must be n x n");
  }
  if (c.load_x) {
    if (c.load_x->rows() != c.n) throw Error(ErrorCode::BadConfig, "loaded X must have n rows");
    for (double r : c.rho_grid) {
      if (ld::columns_for(r, c.n) > c.load_x->cols()) {
        throw Error(ErrorCode::BadConfig, "loaded X has fewer columns than rho n");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// bench

double CsvRow::macs_per_n3() const noexcept {
  const double nd = static_cast<double>(n);
  return static_cast<double>(macs_total) / (nd * nd * nd);
}

std::string CsvRow::to_csv() const {
  std::ostringstream s;
  s << ld::to_string(algorithm) << ',' << n << ',' << p << ',' << fmt(rho) << ',' << (spd ? 1 : 0)
    << ',' << (orth ? 1 : 0) << ',' << (gamma_half ? "0.5" : "1") << ','
    << (delta_precomputed ? 0 : 1) << ',' << trial << ',' << macs_total << ','
    << fmt(macs_per_n3()) << ',' << wall_ns << ',' << sign << ',' << fmt(logabs);
  return s.str();
}

std::vector<CsvRow> run_bench(const BenchConfig& config) {
  validate(config);
  const std::size_t na = config.algorithms.size(), nr = config.rho_grid.size(),
                    nt = config.trials;
  std::vector<ld::LdResult> results(nt * na * nr);
  std::vector<std::size_t> ps(nr);
  for (std::size_t r = 0; r < nr; ++r) ps[r] = ld::columns_for(config.rho_grid[r], config.n);

  auto run_trial = [&](std::size_t t) {
    const std::uint64_t tseed = Rng::stream(config.seed, t).next_u64();
    ld::BenchInstance inst;
    if (config.load_a && config.load_x) {
      inst.A = *config.load_a;
    } else {
      inst = ld::make_bench_instance(config.n, config.flags.spd, tseed);
      if (config.load_a) inst.A = *config.load_a;
    }
    if (config.load_x) {
      inst.x_raw = *config.load_x;
      try {
        inst.x_orth = gram_schmidt(inst.x_raw);
      } catch (const Error&) {
        throw Error(ErrorCode::BadConfig, "loaded X is rank deficient");
      }
    }
    for (std::size_t r = 0; r < nr; ++r) {
      const DenseMatrix x = ld::design_columns(inst, ps[r], config.flags.orth);
      ld::Ld3Options opt;
      opt.seed = tseed ^ 0x1d3;
      if (config.flags.delta_precomputed && config.flags.orth) {
        opt.uperp = complement_basis(inst.x_orth.leading_columns(ps[r]), opt.seed);
      }
      for (std::size_t a = 0; a < na; ++a) {
        results[(t * na + a) * nr + r] =
            ld::run(config.algorithms[a], inst.A, x, config.flags, opt);
      }
    }
  };

  if (config.threads <= 1 || nt == 1) {
    for (std::size_t t = 0; t < nt; ++t) run_trial(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < std::min(config.threads, nt); ++w) {
      workers.emplace_back([&] {
        for (std::size_t t = next++; t < nt; t = next++) {
          try {
            run_trial(t);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& w : workers) w.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<CsvRow> rows;
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t r = 0; r < nr; ++r) {
      auto make_row = [&](const ld::LdResult& res) {
        CsvRow row;
        row.algorithm = config.algorithms[a];
        row.n = config.n;
        row.p = ps[r];
        row.rho = config.rho_grid[r];
        row.spd = config.flags.spd;
        row.orth = config.flags.orth;
        row.gamma_half = config.flags.gamma_half;
        row.delta_precomputed = config.flags.delta_precomputed;
        row.macs_total = res.counter.weighted_total();
        row.wall_ns = res.wall_ns;
        row.sign = res.value.sign;
        row.logabs = res.value.logabs;
        return row;
      };
      if (config.raw) {
        for (std::size_t t = 0; t < nt; ++t) {
          CsvRow row = make_row(results[(t * na + a) * nr + r]);
          row.trial = std::to_string(t);
          rows.push_back(std::move(row));
        }
      } else {
        // Counts, sign and logabs come from trial 0 so the row is
        // reproducible; only the wall time is aggregated.
        CsvRow row = make_row(results[a * nr + r]);
        std::vector<std::uint64_t> walls;
        for (std::size_t t = 0; t < nt; ++t) walls.push_back(results[(t * na + a) * nr + r].wall_ns);
        std::sort(walls.begin(), walls.end());
        row.wall_ns = nt % 2 == 1 ? walls[nt / 2] : (walls[nt / 2 - 1] + walls[nt / 2]) / 2;
        row.trial = "median";
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

void write_csv(std::ostream& out, const std::vector<CsvRow>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& row : rows) out << row.to_csv() << '\n';
  if (!out) throw Error(ErrorCode::IoError, "failed to write CSV");
}

// ---------------------------------------------------------------------------
// model

std::vector<ModelRow> run_model(const ld::Rational& rho_step) {
  if (rho_step.num() <= 0 || rho_step.num() > rho_step.den()) {
    throw Error(ErrorCode::BadConfig, "rho step must lie in (0, 1]");
  }
  std::vector<ld::Rational> rhos;
  for (std::int64_t k = 0;; ++k) {
    const ld::Rational r = ld::Rational(k) * rho_step;
    if (r.num() > r.den()) break;
    rhos.push_back(r);
  }
  if (!(rhos.back() == ld::Rational(1))) rhos.push_back(ld::Rational(1));

  std::vector<ModelRow> rows;
  for (ld::Algorithm alg : ld::kAllAlgorithms)
    for (bool spd : {true, false})
      for (bool orth : {true, false})
        for (bool half : {true, false})
          for (bool pre : {false, true}) {
            ld::LdFlags f;
            f.spd = spd;
            f.orth = orth;
            f.gamma_half = half;
            f.delta_precomputed = pre;
            for (const auto& r : rhos) {
              rows.push_back(ModelRow{alg, f, r, ld::complexity_model_exact(alg, r, f)});
            }
          }
  return rows;
}

void write_model_csv(std::ostream& out, const std::vector<ModelRow>& rows) {
  out << "algorithm,spd,orth,gamma,delta,rho,model,model_num,model_den\n";
  for (const auto& r : rows) {
    out << ld::to_string(r.algorithm) << ',' << (r.flags.spd ? 1 : 0) << ','
        << (r.flags.orth ? 1 : 0) << ',' << (r.flags.gamma_half ? "0.5" : "1") << ','
        << (r.flags.delta_precomputed ? 0 : 1) << ',' << fmt(r.rho.to_double()) << ','
        << fmt(r.value.to_double()) << ',' << r.value.num() << ',' << r.value.den() << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "failed to write model CSV");
}

// ---------------------------------------------------------------------------
// verification suites

namespace {

class Tally {
 public:
  explicit Tally(std::string suite) : suite_(std::move(suite)) {}

  void record(const std::string& name, double residual, double tolerance) {
    PropertyResult& r = find(name, tolerance);
    ++r.cases;
    if (std::isnan(residual)) residual = kInf;
    r.max_residual = std::max(r.max_residual, residual);
    if (!(residual <= tolerance)) r.passed = false;
  }

  void check(const std::string& name, bool ok) { record(name, ok ? 0.0 : 1.0, 0.0); }

  std::vector<PropertyResult> take() { return std::move(items_); }

 private:
  PropertyResult& find(const std::string& name, double tolerance) {
    for (auto& r : items_)
      if (r.name == name) return r;
    items_.push_back(PropertyResult{suite_, name, 0, 0.0, tolerance, true});
    return items_.back();
  }

  std::string suite_;
  std::vector<PropertyResult> items_;
};

// |a - b| in log space with a sign check; +inf on any sign disagreement.
double logdet_gap(const SignedLogDet& a, const SignedLogDet& b) {
  if (a.sign != b.sign || a.is_zero()) return kInf;
  return std::abs(a.logabs - b.logabs);
}

double rel(const DenseMatrix& a, const DenseMatrix& b) { return relative_difference(a, b); }

double identity_gap(const DenseMatrix& a) {
  return max_abs(a - DenseMatrix::identity(a.rows()));
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  if (hi <= lo) return lo;
  return lo + static_cast<std::size_t>(rng.next_u64() % (hi - lo + 1));
}

DenseMatrix gaussian(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  return random_gaussian(r, c, rng);
}

DenseMatrix random_lower(std::size_t n, std::uint64_t seed) {
  DenseMatrix t = gaussian(n, n, seed);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) t(i, j) = 0.0;
    t(i, i) = (t(i, i) >= 0 ? 1.0 : -1.0) * (2.0 + std::abs(t(i, i)));
  }
  return t;
}

double lu_reconstruction(const DenseMatrix& a, const LUFactors& f) {
  return rel(matmul(f.L, f.U), permute_rows(a, f.perm));
}

template <class Fn>
void guarded(Tally& tally, const std::string& name, Fn&& fn) {
  try {
    fn();
    tally.record(name + ":no_errors", 0.0, 0.0);
  } catch (const std::exception&) {
    tally.record(name + ":no_errors", kInf, 0.0);
  }
}

}  // namespace

std::vector<PropertyResult> verify_kernels(std::uint64_t seed, std::size_t count,
                                           std::size_t counter_n, bool sabotage) {
  Tally t("kernels");
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t s = Rng::stream(seed, i).next_u64();
    const std::size_t n = 8 * (1 + i % 4);
    const double tol = 100.0 * static_cast<double>(n) * kEps;
    guarded(t, "instance", [&] {
      const DenseMatrix spd = random_spd(n, 0.1, 10.0, s);
      DenseMatrix l = cholesky(spd).L;
      if (sabotage && i == 0) l(0, 0) += 1e-3;
      t.record("cholesky_reconstruction", rel(matmul(l, l.transpose()), spd), tol);

      const DenseMatrix classes[] = {spd, random_general(n, s + 1), random_indefinite(n, s + 2),
                                     random_ep(n, n, s + 3),
                                     random_ep(n, n, s + 4, EpKind::Symmetric)};
      for (const auto& a : classes) {
        t.record("lu_reconstruction", lu_reconstruction(a, lu_partial_pivot(a)), tol);
      }
      t.record("lu_logdet_vs_eigenvalues",
               logdet_gap(logdet_lu(classes[1]), oracle::pdet_oracle(classes[1])), 1e-9);
      t.record("cholesky_logdet_vs_jacobi",
               logdet_gap(logdet_triangular(cholesky(spd)).scaled(2), oracle::pdet_oracle(spd)),
               1e-9);

      const DenseMatrix x = gaussian(n, n / 2, s + 5);
      const DenseMatrix q = gram_schmidt(x);
      t.record("gram_schmidt_orthonormality", identity_gap(matmul(q.transpose(), q)), kOrthTol);
      const DenseMatrix proj = matmul(matmul(x, inverse(matmul(x.transpose(), x))), x.transpose());
      t.record("gram_schmidt_projector", max_abs(matmul(q, q.transpose()) - proj), 1e-10);
      const DenseMatrix full = hstack(q, complement_basis(q, s + 6));
      t.record("complement_unitarity", identity_gap(matmul(full.transpose(), full)), kOrthTol);

      const DenseMatrix tl = random_lower(n, s + 7);
      const DenseMatrix b = gaussian(n, 4, s + 8);
      const DenseMatrix z = solve_triangular(tl, b, Triangle::Lower);
      t.record("trsm_residual", rel(matmul(tl, z), b), 1e-11);
      const DenseMatrix tu = tl.transpose();
      t.record("trsm_residual", rel(matmul(tu, solve_triangular(tu, b, Triangle::Upper)), b),
               1e-11);

      OpCounter c1, c2;
      const DenseMatrix r1 = random_spd(n, 0.1, 10.0, s);
      const DenseMatrix r2 = random_spd(n, 0.1, 10.0, s);
      cholesky(r1, &c1);
      cholesky(r2, &c2);
      t.check("determinism", r1 == r2 && c1.total() == c2.total());
    });
  }

  // Leading-term MAC constants.
  const std::size_t n = counter_n, p = counter_n / 4;
  const double nd = static_cast<double>(n), pd = static_cast<double>(p);
  auto law = [&](const std::string& name, std::uint64_t macs, double expected) {
    t.record(name, std::abs(static_cast<double>(macs) / expected - 1.0), 0.10);
  };
  const DenseMatrix a = random_spd(n, 0.1, 10.0, seed);
  const DenseMatrix x = gaussian(n, p, seed + 1);
  OpCounter c;
  cholesky(a, &c);
  law("cholesky_macs_n3_over_6", c.get(OpKind::Cholesky), nd * nd * nd / 6.0);
  lu_partial_pivot(a, &c);
  law("lu_macs_n3_over_3", c.get(OpKind::Lu), nd * nd * nd / 3.0);
  solve_triangular(random_lower(n, seed + 2), x, Triangle::Lower, &c);
  law("trsm_macs_n2p_over_2", c.get(OpKind::Trsm), nd * nd * pd / 2.0);
  OpCounter half, full;
  gramian(x, &half, GramMode::Half);
  gramian(x, &full, GramMode::Full);
  law("gramian_half_macs_np2_over_2", half.get(OpKind::Gramian), nd * pd * pd / 2.0);
  t.record("gramian_half_is_half_of_full",
           std::abs(2.0 * static_cast<double>(half.get(OpKind::Gramian)) -
                    static_cast<double>(full.get(OpKind::Gramian))),
           0.0);
  OpCounter g;
  gemm(a, x, &g);
  t.record("gemm_macs_exact", std::abs(static_cast<double>(g.get(OpKind::Gemm)) - nd * nd * pd),
           0.0);
  OpCounter gs;
  const DenseMatrix q = gram_schmidt(x, &gs);
  law("gram_schmidt_macs_2np2", gs.get(OpKind::GramSchmidt), 2.0 * nd * pd * pd);
  OpCounter cb;
  complement_basis(q, seed + 3, &cb);
  law("complement_macs_2n_n2_minus_p2", cb.get(OpKind::GramSchmidt),
      2.0 * nd * (nd * nd - pd * pd));
  return t.take();
}

namespace {

struct GenInstance {
  DenseMatrix A, X, Y;
  bool same_xy = true;
};

// 0: nonsingular SPD, 1: nonsingular nonsymmetric with Y != X,
// 2: singular symmetric EP, 3: singular nonsymmetric EP.
GenInstance make_geninv_instance(int cls, std::size_t n, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, 99);
  GenInstance g;
  std::size_t r = n;
  switch (cls) {
    case 0: g.A = random_spd(n, 0.5, 5.0, seed); break;
    case 1: g.A = random_general(n, seed); break;
    case 2:
      r = pick(rng, n / 2, n - 1);
      g.A = random_ep(n, r, seed, EpKind::Symmetric);
      break;
    default:
      r = pick(rng, n / 2, n - 1);
      g.A = random_ep(n, r, seed, EpKind::Nonsymmetric);
      break;
  }
  const std::size_t p = pick(rng, 1, std::max<std::size_t>(1, std::min(r - 1, n / 2)));
  g.X = gaussian(n, p, seed + 11);
  if (cls == 1) {
    g.Y = gaussian(n, p, seed + 12);
    g.same_xy = false;
  } else {
    g.Y = g.X;
  }
  return g;
}

}  // namespace

std::vector<PropertyResult> verify_geninv(std::uint64_t seed, std::size_t count,
                                          std::size_t max_n, bool sabotage) {
  Tally t("geninv");
  for (std::size_t i = 0; i < count; ++i) {
    const int cls = static_cast<int>(i % 4);
    Rng rng = Rng::stream(seed, 1000 + i);
    const std::size_t n = pick(rng, 6, std::max<std::size_t>(6, max_n));
    const std::uint64_t s = rng.next_u64();
    guarded(t, "instance", [&] {
      const GenInstance g = make_geninv_instance(cls, n, s);
      const auto sw = geninv::build(g.A, g.X, g.Y);
      DenseMatrix m = geninv::m_matrix(sw);
      if (sabotage && i == 0) m(0, 0) += 1e-3 * frobenius_norm(m);
      const double mn = frobenius_norm(m);

      t.record("outer_inverse_MAM_eq_M", frobenius_norm(matmul(matmul(m, g.A), m) - m) / mn, 1e-9);
      const auto q = geninv::q_projectors(sw);
      t.record("Q1_idempotent", rel(matmul(q.Q1, q.Q1), q.Q1), 1e-9);
      t.record("Q2_idempotent", rel(matmul(q.Q2, q.Q2), q.Q2), 1e-9);
      t.record("M_eq_Adag_Q1", rel(matmul(sw.Adag, q.Q1), m), 1e-9);
      t.record("M_eq_Q2_Adag", rel(matmul(q.Q2, sw.Adag), m), 1e-9);

      const auto cond = geninv::check_conditions(sw);
      t.check("conditions_c_and_f_hold", cond.cond_c && cond.cond_f);
      const auto kc = geninv::kernel_cokernel(sw);
      t.check("structural_dimensions", kc.structural && kc.dims_consistent);
      t.record("kernel_M_Xhat_zero", frobenius_norm(matmul(m, kc.Xhat)) / mn, 1e-9);
      t.record("cokernel_Yhat_M_zero", frobenius_norm(matmul(kc.Yhat.transpose(), m)) / mn, 1e-9);
      const auto svd = geninv::kernel_cokernel(sw, geninv::KernelMethod::Svd);
      t.record("structural_kernel_matches_svd",
               max_abs(geninv::range_projector(kc.Xhat) - geninv::range_projector(svd.Xhat)) +
                   max_abs(geninv::range_projector(kc.Yhat) - geninv::range_projector(svd.Yhat)),
               1e-8);

      const DenseMatrix p = geninv::p_oblique(kc.Xhat, kc.Yhat);
      t.record("P_idempotent", rel(matmul(p, p), p), 1e-9);
      t.record("P_Xhat_zero", max_abs(matmul(p, kc.Xhat)), 1e-9);
      t.record("Yhat_P_zero", max_abs(matmul(kc.Yhat.transpose(), p)), 1e-9);

      t.record("Mpinv_vs_oracle", rel(geninv::m_pinv(g.A, kc.Xhat, kc.Yhat),
                                      oracle::pinv_oracle(m)),
               1e-8);
      t.record("M_eq_P_Ninv", rel(geninv::m_from_projection(g.A, p), m), 1e-8);
      const DenseMatrix nm = geninv::n_matrix(g.A, p);
      t.record("N_factored_eq_dense",
               rel(geninv::n_matrix_factored(g.A, kc.Xhat, kc.Yhat), nm), 1e-12);
      const DenseMatrix u = oracle::null_space(kc.Xhat.transpose());
      t.record("compression_inverse",
               identity_gap(matmul(geninv::compress(m, u), geninv::compress(nm, u))), 1e-8);
      if (g.same_xy) {
        t.record("bott_duffin_eq_M", rel(geninv::bott_duffin(g.A, u), m), 1e-8);
      }

      // M = A^+ exactly when F = 0: Y0 is X's data pushed off A^+ X.
      const DenseMatrix adx = matmul(sw.Adag, g.X);
      const DenseMatrix y0 = matmul(geninv::complement_projector(adx), g.Y);
      const auto sw0 = geninv::build(g.A, g.X, y0);
      t.record("F_zero_implies_M_eq_Adag", rel(geninv::m_matrix(sw0), sw0.Adag), 1e-9);
      t.check("F_nonzero_implies_M_ne_Adag", rel(m, sw.Adag) > 1e-6);
      const auto c0 = geninv::check_conditions(sw0);
      t.check("F_zero_breaks_conditions", !c0.cond_c && !c0.cond_f);
    });
  }
  return t.take();
}

std::vector<PropertyResult> verify_pdet(std::uint64_t seed, std::size_t count, std::size_t max_n,
                                        bool sabotage) {
  Tally t("pdet");
  for (std::size_t i = 0; i < count; ++i) {
    const int cls = static_cast<int>(i % 5);
    Rng rng = Rng::stream(seed, 2000 + i);
    const std::size_t n = pick(rng, 6, std::max<std::size_t>(6, max_n));
    const std::uint64_t s = rng.next_u64();
    guarded(t, "instance", [&] {
      std::size_t r = n;
      DenseMatrix a;
      switch (cls) {
        case 0: a = random_spd(n, 0.5, 4.0, s); break;
        case 1: r = n / 2; a = random_ep(n, r, s, EpKind::Symmetric); break;
        case 2: r = n - 1; a = random_ep(n, r, s, EpKind::Symmetric); break;
        case 3: r = n / 2; a = random_ep(n, r, s, EpKind::Nonsymmetric); break;
        default: r = n - 1; a = random_ep(n, r, s, EpKind::Nonsymmetric); break;
      }
      const std::size_t p = pick(rng, 1, r - 1);
      const DenseMatrix x = gaussian(n, p, s + 21);
      const auto sw = geninv::build(a, x, x);
      DenseMatrix m = geninv::m_matrix(sw);
      if (sabotage && i == 0) m(0, 0) += 1e-2 * frobenius_norm(m);
      const auto kc = geninv::kernel_cokernel(sw);

      t.check("EP", geninv::is_ep(a));
      t.check("index_one", geninv::has_index_one(m));
      const SignedLogDet ref = oracle::pdet_oracle(m);
      const SignedLogDet basis = geninv::pdet_m(a, kc.Xhat, kc.Yhat, geninv::PdetVariant::Basis);
      const SignedLogDet fact = geninv::pdet_m(a, kc.Xhat, kc.Yhat, geninv::PdetVariant::Factored);
      const auto split = geninv::split_kernel_pair(a, kc.Xhat, kc.Yhat);
      const SignedLogDet fact_split =
          geninv::pdet_m(a, split.Xhat, split.Yhat, geninv::PdetVariant::Factored);
      const DenseMatrix pm = geninv::p_oblique(kc.Xhat, kc.Yhat);
      const SignedLogDet inv_n = SignedLogDet{1, 0.0} - logdet_lu(geninv::n_matrix(a, pm));

      t.record("basis_form_vs_oracle", logdet_gap(basis, ref), 1e-7);
      t.record("factored_form_vs_oracle", logdet_gap(fact, ref), 1e-7);
      t.record("factored_split_pair_vs_oracle", logdet_gap(fact_split, ref), 1e-7);
      t.record("basis_vs_factored", logdet_gap(basis, fact), 1e-7);
      t.record("inverse_det_N_vs_oracle", logdet_gap(inv_n, ref), 1e-7);

      const auto rep = geninv::det_identity_check(a, kc.Xhat, kc.Yhat);
      t.check("det_identity_preconditions", rep.ep && rep.direct_x_ay && rep.direct_x_y &&
                                                rep.null_a_in_xy && rep.kernel_overlap_ok);
      t.record("det_identity_residual", rep.residual, 1e-7);

      if (cls == 0) {
        // log pdet(M) = -[logdet A + logdet(X^T A^{-1} X) - logdet(X^T X)]
        const SignedLogDet expect = logdet_lu(matmul(x.transpose(), x)) -
                                    (logdet_lu(a) + logdet_lu(matmul(x.transpose(), matmul(sw.Adag, x))));
        t.record("spd_closed_form_vs_oracle", logdet_gap(expect, ref), 1e-7);
      }
    });
  }
  return t.take();
}

std::vector<PropertyResult> verify_logdet(std::uint64_t seed, std::size_t count,
                                          const std::vector<std::size_t>& sizes, bool sabotage) {
  Tally t("logdet");
  std::size_t serial = 0;
  for (std::size_t n : sizes) {
    for (int combo = 0; combo < 16; ++combo) {
      ld::LdFlags f;
      f.spd = combo & 1;
      f.orth = combo & 2;
      f.gamma_half = combo & 4;
      f.delta_precomputed = combo & 8;
      for (std::size_t i = 0; i < count; ++i, ++serial) {
        Rng rng = Rng::stream(seed, 3000 + serial);
        const std::uint64_t s = rng.next_u64();
        const std::size_t p = pick(rng, 1, n - 1);
        guarded(t, "instance", [&] {
          const DenseMatrix a = f.spd ? random_spd(n, 0.1, 10.0, s) : random_general(n, s);
          DenseMatrix x = gaussian(n, p, s + 31);
          if (f.orth) x = gram_schmidt(x);
          const auto r1 = ld::ld1(a, x, f);
          auto r2 = ld::ld2(a, x, f);
          const auto r3 = ld::ld3(a, x, f);
          if (sabotage && serial == 0) r2.value.logabs += 1e-3;
          const double scale = std::max(1.0, std::abs(r1.value.logabs));
          t.record("LD1_eq_LD2", logdet_gap(r1.value, r2.value) / scale, 1e-6);
          t.record("LD1_eq_LD3", logdet_gap(r1.value, r3.value) / scale, 1e-6);
        });
      }
    }

    // Invariance checks on a handful of instances per size.
    for (std::size_t i = 0; i < std::min<std::size_t>(count, 5); ++i, ++serial) {
      Rng rng = Rng::stream(seed, 3000 + serial);
      const std::uint64_t s = rng.next_u64();
      const std::size_t p = pick(rng, 1, n - 1);
      guarded(t, "invariance", [&] {
        ld::LdFlags f;
        f.spd = i % 2 == 0;
        const DenseMatrix a = f.spd ? random_spd(n, 0.1, 10.0, s) : random_general(n, s);
        const DenseMatrix x = gaussian(n, p, s + 41);
        const auto base = ld::ld1(a, x, f);
        const double scale = std::max(1.0, std::abs(base.value.logabs));

        ld::Ld3Options o1, o2;
        o1.seed = s + 1;
        o2.seed = s + 2;
        t.record("LD3_seed_invariance",
                 logdet_gap(ld::ld3(a, x, f, o1).value, ld::ld3(a, x, f, o2).value) / scale, 1e-8);

        const DenseMatrix q = random_orthogonal(n, s + 3);
        DenseMatrix qa = matmul(matmul(q, a), q.transpose());
        if (f.spd) qa = 0.5 * (qa + qa.transpose());
        t.record("LD1_similarity_invariance",
                 logdet_gap(ld::ld1(qa, matmul(q, x), f).value, base.value) / scale, 1e-7);

        if (f.spd && n <= 64) {
          // logdet(A) + logdet(X^T A^-1 X) + log pdet(M) - logdet(X^T X) = 0
          const auto sw = geninv::build(a, x, x);
          const SignedLogDet pm = oracle::pdet_oracle(geninv::m_matrix(sw));
          const SignedLogDet lhs = base.value + pm;
          t.record("pdet_M_link", logdet_gap(lhs, logdet_lu(matmul(x.transpose(), x))), 1e-6);
        }

        ld::LdFlags lie;
        lie.spd = true;
        bool rejected = false;
        try {
          ld::ld1(random_indefinite(n, s + 4), x, lie);
        } catch (const Error& e) {
          rejected = e.code() == ErrorCode::NotSPD;
        }
        t.check("spd_flag_is_a_contract", rejected);
      });
    }
  }
  return t.take();
}

DenseMatrix neumann_kernel(const DenseMatrix& x, std::uint64_t seed) {
  const std::size_t n = x.rows();
  const DenseMatrix v = complement_basis(gram_schmidt(x), seed).leading_columns(1);
  const DenseMatrix w = complement_basis(v, seed + 1);
  Rng rng = Rng::stream(seed, 7);
  std::vector<double> lambda(n - 1);
  const double lo = std::log(0.02), hi = std::log(0.3);
  for (double& l : lambda) l = std::exp(lo + (hi - lo) * rng.uniform());
  DenseMatrix k = matmul(v, v.transpose()) +
                  matmul(matmul(w, DenseMatrix::diagonal(lambda)), w.transpose());
  return 0.5 * (k + k.transpose());
}

NeumannDecay measure_neumann_decay(std::size_t n, std::size_t p, double target,
                                   std::uint64_t seed) {
  const DenseMatrix x = gaussian(n, p, seed);
  const DenseMatrix k = neumann_kernel(x, seed + 1);
  const double vs2 = 1.5;
  DenseMatrix sigma = (vs2 * target) * k;
  for (std::size_t i = 0; i < n; ++i) sigma(i, i) += vs2;
  const DenseMatrix m = gp::precision_matrix(sigma, x);
  const double mn = frobenius_norm(m);

  NeumannDecay d;
  std::vector<double> err;
  for (int order = 2; order <= 10; ++order) {
    const auto r = gp::neumann_precision(k, x, target, vs2, order);
    err.push_back(frobenius_norm(r.M - m));
    d.max_constant =
        std::max(d.max_constant, err.back() / (std::pow(r.ratio, order + 1) * mn));
  }
  for (std::size_t j = 1; j < err.size(); ++j) {
    d.max_step_deviation =
        std::max(d.max_step_deviation, std::abs(err[j] / err[j - 1] - target) / target);
  }
  d.fitted_ratio = std::pow(err.back() / err.front(), 1.0 / 8.0);
  d.exact_residual = frobenius_norm(gp::neumann_precision(k, x, target, vs2, 30).M - m) / mn;
  return d;
}

std::vector<PropertyResult> verify_gp(std::uint64_t seed, std::size_t count, bool sabotage) {
  Tally t("gp");
  const double log2pi = std::log(2.0 * std::numbers::pi);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = Rng::stream(seed, 4000 + i);
    const std::size_t n = pick(rng, 8, 24);
    const std::size_t p = pick(rng, 1, 4);
    const std::uint64_t s = rng.next_u64();
    guarded(t, "instance", [&] {
      gp::GPModel model;
      model.Sigma = random_spd(n, 0.2, 5.0, s);
      model.X = gaussian(n, p, s + 1);
      const DenseMatrix yraw = gaussian(n, 1, s + 2);
      const DenseMatrix q = gram_schmidt(model.X);
      const DenseMatrix u = complement_basis(q, s + 3);
      const DenseMatrix yp = matmul(matmul(u, u.transpose()), yraw);
      model.y.assign(yp.values().begin(), yp.values().end());

      DenseMatrix m = gp::precision_matrix(model.Sigma, model.X);
      if (sabotage && i == 0) m(0, 0) += 1e-3 * frobenius_norm(m);
      const DenseMatrix sperp = geninv::compress(model.Sigma, u);
      const SignedLogDet ld_sperp = logdet_lu(sperp);
      t.record("pdet_M_eq_inverse_det_Sigma_perp",
               logdet_gap(oracle::pdet_oracle(m), SignedLogDet{1, 0.0} - ld_sperp), 1e-7);

      const DenseMatrix yperp = matmul(u.transpose(), yp);
      const DenseMatrix sol = solve_triangular(
          cholesky(sperp).L, yperp, Triangle::Lower);
      double q_perp = 0.0;
      for (double v : sol.values()) q_perp += v * v;
      const double q_m = matmul(matmul(yp.transpose(), m), yp)(0, 0);
      t.record("quadratic_form_identity", std::abs(q_m - q_perp) / std::max(1.0, q_perp), 1e-8);
      t.record("quadratic_by_triangular_solves",
               std::abs(gp::quadratic_m(model.Sigma, model.X, model.y) - q_perp) /
                   std::max(1.0, q_perp),
               1e-8);

      const auto l1 = gp::loglike_singular(model, ld::Algorithm::LD1);
      const auto l2 = gp::loglike_singular(model, ld::Algorithm::LD2);
      const auto l3 = gp::loglike_singular(model, ld::Algorithm::LD3);
      const double scale = std::max(1.0, std::abs(l1.value));
      t.record("backends_agree", std::max(std::abs(l1.value - l2.value),
                                          std::abs(l1.value - l3.value)) / scale,
               1e-8);
      const double normal_form = -0.5 * static_cast<double>(n - p) * log2pi -
                                 0.5 * ld_sperp.logabs - 0.5 * q_perp -
                                 0.5 * logdet_lu(matmul(model.X.transpose(), model.X)).logabs;
      t.record("normal_form_on_X_perp", std::abs(l1.value - normal_form) / scale, 1e-7);

      gp::GPModel shifted = model;
      const DenseMatrix c = gaussian(p, 1, s + 4);
      const DenseMatrix ys = yp + matmul(model.X, c);
      shifted.y.assign(ys.values().begin(), ys.values().end());
      t.record("shift_invariance",
               std::abs(gp::loglike_singular(shifted).value - l1.value) / scale, 1e-9);

      t.record("bott_duffin_precision", rel(gp::precision_bott_duffin(model), m), 1e-8);

      gp::PriorSpec prior;
      prior.B = random_spd(p, 0.5, 2.0, s + 5);
      const DenseMatrix b = gaussian(p, 1, s + 6);
      prior.b.assign(b.values().begin(), b.values().end());
      gp::GPModel noisy = model;
      noisy.y.assign(yraw.values().begin(), yraw.values().end());
      const auto pl = gp::loglike_prior(noisy, prior);
      t.record("prior_routes_agree",
               std::abs(pl.direct - pl.woodbury) / (1.0 + std::abs(pl.woodbury)), 1e-8);

      gp::GPModel flat;
      flat.Sigma = model.Sigma;
      flat.X = DenseMatrix(n, 0);
      flat.y = noisy.y;
      const auto p0 = gp::loglike_prior(flat, gp::PriorSpec{{}, DenseMatrix(0, 0)});
      const DenseMatrix si_y = matmul(inverse(model.Sigma), yraw);
      const double mvn = -0.5 * static_cast<double>(n) * log2pi -
                         0.5 * logdet_lu(model.Sigma).logabs -
                         0.5 * matmul(yraw.transpose(), si_y)(0, 0);
      t.record("prior_p0_is_mvn", std::abs(p0.value - mvn) / std::max(1.0, std::abs(mvn)), 1e-9);

      // B^{-1} = eps I, eps -> 0: the quadratic approaches y^T M y.
      double prev = kInf;
      bool monotone = true;
      for (double eps = 1e-2; eps >= 1e-10; eps *= 1e-2) {
        gp::PriorSpec wide;
        wide.B = (1.0 / eps) * DenseMatrix::identity(p);
        wide.b.assign(p, 0.0);
        const double gap = std::abs(gp::prior_quadratic(model, wide) - q_m);
        if (gap > prev + 1e-12 * std::max(1.0, q_m)) monotone = false;
        prev = gap;
      }
      t.check("prior_quadratic_converges_monotonically", monotone);
      t.record("prior_quadratic_limit", prev / std::max(1.0, q_m), 1e-8);
    });
  }

  for (double target : {0.1, 0.3, 0.5}) {
    for (std::size_t i = 0; i < std::min<std::size_t>(count, 4); ++i) {
      guarded(t, "neumann", [&] {
        const auto d = measure_neumann_decay(16, 2, target, Rng::stream(seed, 5000 + i).next_u64());
        t.record("neumann_ratio_within_15pct", d.max_step_deviation, 0.15);
        t.record("neumann_error_constant_below_10", d.max_constant, 10.0);
        t.record("neumann_order30_vs_exact", d.exact_residual, 1e-8);
      });
    }
  }
  guarded(t, "neumann_edges", [&] {
    const DenseMatrix x = gaussian(12, 2, seed);
    const DenseMatrix k = neumann_kernel(x, seed + 1);
    t.record("neumann_t0_exact",
             max_abs(gp::neumann_precision(k, x, 0.0, 2.0, 0).M - gp::neumann_exact(k, x, 0.0, 2.0)),
             0.0);
    bool guarded_ok = false;
    try {
      gp::neumann_precision(k, x, 1.2, 1.0, 5);
    } catch (const Error& e) {
      guarded_ok = e.code() == ErrorCode::Divergent;
    }
    t.check("neumann_divergence_guard", guarded_ok);
  });
  return t.take();
}

std::vector<PropertyResult> run_verify(const VerifyOptions& o) {
  const std::string& s = o.suite;
  if (s != "all" && s != "kernels" && s != "geninv" && s != "pdet" && s != "logdet" && s != "gp") {
    throw Error(ErrorCode::BadConfig, "unknown suite '" + s + "'");
  }
  if (o.count == 0) throw Error(ErrorCode::BadConfig, "count must be at least 1");
  std::vector<PropertyResult> out;
  auto add = [&](std::vector<PropertyResult> r) {
    out.insert(out.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
  };
  const bool all = s == "all";
  if (all || s == "kernels") add(verify_kernels(o.seed, o.count, 256, o.sabotage));
  if (all || s == "geninv") add(verify_geninv(o.seed, o.count, 16, o.sabotage));
  if (all || s == "pdet") add(verify_pdet(o.seed, o.count, 24, o.sabotage));
  if (all || s == "logdet") {
    add(verify_logdet(o.seed, std::max<std::size_t>(1, o.count / 4), {16, 32}, o.sabotage));
  }
  if (all || s == "gp") add(verify_gp(o.seed, o.count, o.sabotage));
  return out;
}

void write_verify_report(std::ostream& out, const std::vector<PropertyResult>& results) {
  std::size_t failed = 0;
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.suite << '/' << r.name << "  cases=" << r.cases
        << "  max_residual=" << fmt(r.max_residual) << "  tol=" << fmt(r.tolerance) << '\n';
    if (!r.passed) ++failed;
  }
  out << results.size() - failed << '/' << results.size() << " properties passed\n";
}

// ---------------------------------------------------------------------------
// GP demo

bool gp_demo(const GpDemoOptions& o, std::ostream& out) {
  if (o.n < 2 || o.p >= o.n) throw Error(ErrorCode::BadConfig, "gp-demo needs 1 <= p < n");
  const DenseMatrix x = gaussian(o.n, o.p, Rng::stream(o.seed, 0).next_u64());
  const DenseMatrix k = neumann_kernel(x, Rng::stream(o.seed, 1).next_u64());
  const DenseMatrix yv = gaussian(o.n, 1, Rng::stream(o.seed, 2).next_u64());
  const double vs2 = 1.0;
  const gp::GPModel model =
      gp::mixed_model(k, x, std::vector<double>(yv.values().begin(), yv.values().end()),
                      o.t * vs2, vs2);
  // Fails fast with Divergent before anything is printed.
  gp::neumann_precision(k, x, o.t, vs2, 0);
  bool ok = true;

  out << "mixed model: n=" << o.n << " p=" << o.p << " t=" << fmt(o.t)
      << " (lambda_max(K) = 1, varsigma^2 = 1)\n";
  double values[3];
  for (int b = 0; b < 3; ++b) {
    const auto r = gp::loglike_singular(model, ld::kAllAlgorithms[b]);
    values[b] = r.value;
    if (b == 0) out << "dropped ||P_X y|| = " << fmt(r.dropped_norm) << '\n';
    out << "loglike[" << ld::to_string(ld::kAllAlgorithms[b]) << "] = " << fmt(r.value) << '\n';
  }
  const double spread = std::max(std::abs(values[0] - values[1]), std::abs(values[0] - values[2]));
  const bool agree = spread <= 1e-8 * std::max(1.0, std::abs(values[0]));
  ok = ok && agree;
  out << "backends agree within 1e-8: " << (agree ? "PASS" : "FAIL") << '\n';

  const DenseMatrix m = gp::precision_matrix(model.Sigma, x);
  if (o.n <= oracle::kOracleMaxN) {
    const DenseMatrix u = complement_basis(gram_schmidt(x), Rng::stream(o.seed, 3).next_u64());
    const SignedLogDet link =
        oracle::pdet_oracle(m) + logdet_lu(geninv::compress(model.Sigma, u));
    const bool link_ok = link.sign == 1 && std::abs(link.logabs) <= 1e-7;
    ok = ok && link_ok;
    out << "pdet link |log pdet(M) + log|Sigma_perp|| = " << fmt(std::abs(link.logabs)) << ' '
        << (link_ok ? "PASS" : "FAIL") << '\n';
  }

  if (o.t >= 0.9 && o.t < 1.0) {
    out << "warning: t lambda_max = " << fmt(o.t) << " is close to 1; convergence is slow\n";
  }
  out << "order,rel_error,ratio\n";
  const DenseMatrix limit = gp::neumann_exact(k, x, o.t, vs2);
  const double mn = frobenius_norm(limit);
  double prev = 0.0;
  for (int order = 0; order <= o.order; ++order) {
    const auto r = gp::neumann_precision(k, x, o.t, vs2, order);
    const double e = frobenius_norm(r.M - limit) / mn;
    out << order << ',' << fmt(e) << ',' << (order > 0 && prev > 0.0 ? fmt(e / prev) : "-")
        << '\n';
    prev = e;
  }
  return ok;
}

}  // namespace pdetkit::bench
