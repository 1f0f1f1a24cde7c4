#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pdetkit/geninv.hpp"
#include "pdetkit/gp.hpp"
#include "pdetkit/io.hpp"
#include "pdetkit/logdet.hpp"
#include "pdetkit/oracle.hpp"

namespace py = pybind11;
using namespace pdetkit;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

DenseMatrix to_matrix(const Array& a) {
  if (a.ndim() == 1) {
    return DenseMatrix(static_cast<std::size_t>(a.shape(0)), 1,
                       std::vector<double>(a.data(), a.data() + a.size()));
  }
  if (a.ndim() != 2) throw py::value_error("expected a 1-d or 2-d array");
  return DenseMatrix(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                     std::vector<double>(a.data(), a.data() + a.size()));
}

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-d array");
  return {a.data(), a.data() + a.size()};
}

Array to_numpy(const DenseMatrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

py::tuple signed_pair(const SignedLogDet& d) { return py::make_tuple(d.sign, d.logabs); }

ld::Algorithm algorithm(const std::string& name) {
  const auto a = ld::parse_algorithm(name);
  if (!a) throw py::value_error("algorithm must be one of ld1, ld2, ld3");
  return *a;
}

ld::LdFlags make_flags(bool spd, bool orth, bool gamma_half, bool delta_precomputed) {
  ld::LdFlags f;
  f.spd = spd;
  f.orth = orth;
  f.gamma_half = gamma_half;
  f.delta_precomputed = delta_precomputed;
  return f;
}

py::dict counts(const OpCounter& c) {
  py::dict d;
  for (std::size_t k = 0; k < kOpKindCount; ++k) {
    const auto kind = static_cast<OpKind>(k);
    d[to_string(kind)] = c.get(kind);
  }
  d["weighted_total"] = c.weighted_total();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "pdetkit native core";

  static py::exception<Error> error(m, "PdetkitError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  m.def(
      "logdet",
      [](const Array& a, const Array& x, const std::string& alg, bool spd, bool orth,
         bool gamma_half, bool delta_precomputed) {
        const auto r = ld::run(algorithm(alg), to_matrix(a), to_matrix(x),
                               make_flags(spd, orth, gamma_half, delta_precomputed));
        py::dict out;
        out["sign"] = r.value.sign;
        out["logabs"] = r.value.logabs;
        out["macs"] = counts(r.counter);
        out["wall_ns"] = r.wall_ns;
        return out;
      },
      py::arg("A"), py::arg("X"), py::arg("algorithm") = "ld1", py::arg("spd") = false,
      py::arg("orth") = false, py::arg("gamma_half") = true,
      py::arg("delta_precomputed") = false,
      "logdet(A) + logdet(X^T A^-1 X) by the chosen route; returns sign, logabs and MAC counts.");

  m.def(
      "complexity_model",
      [](const std::string& alg, double rho, bool spd, bool orth, bool gamma_half,
         bool delta_precomputed) {
        return ld::complexity_model(algorithm(alg), rho,
                                    make_flags(spd, orth, gamma_half, delta_precomputed));
      },
      py::arg("algorithm"), py::arg("rho"), py::arg("spd") = false, py::arg("orth") = false,
      py::arg("gamma_half") = true, py::arg("delta_precomputed") = false);

  m.def(
      "m_matrix",
      [](const Array& a, const Array& x, const Array& y) {
        return to_numpy(geninv::m_matrix(geninv::build(to_matrix(a), to_matrix(x), to_matrix(y))));
      },
      py::arg("A"), py::arg("X"), py::arg("Y"),
      "A^+ - A^+ X (Y^T A^+ X)^+ Y^T A^+.");

  m.def(
      "kernel_cokernel",
      [](const Array& a, const Array& x, const Array& y) {
        const auto kc =
            geninv::kernel_cokernel(geninv::build(to_matrix(a), to_matrix(x), to_matrix(y)));
        return py::make_tuple(to_numpy(kc.Xhat), to_numpy(kc.Yhat));
      },
      py::arg("A"), py::arg("X"), py::arg("Y"));

  m.def(
      "pdet_m",
      [](const Array& a, const Array& x, const Array& y, const std::string& variant) {
        const DenseMatrix am = to_matrix(a);
        const auto kc = geninv::kernel_cokernel(geninv::build(am, to_matrix(x), to_matrix(y)));
        const auto v = variant == "basis" ? geninv::PdetVariant::Basis
                                          : geninv::PdetVariant::Factored;
        return signed_pair(geninv::pdet_m(am, kc.Xhat, kc.Yhat, v));
      },
      py::arg("A"), py::arg("X"), py::arg("Y"), py::arg("variant") = "factored",
      "(sign, log|pdet|) of M for EP A.");

  m.def(
      "pdet",
      [](const Array& a, double rtol) { return signed_pair(oracle::pdet_oracle(to_matrix(a), rtol)); },
      py::arg("A"), py::arg("rtol") = oracle::kDefaultRtol);

  m.def(
      "pinv",
      [](const Array& a, double rtol) { return to_numpy(oracle::pinv_oracle(to_matrix(a), rtol)); },
      py::arg("A"), py::arg("rtol") = oracle::kDefaultRtol);

  m.def(
      "loglike_singular",
      [](const Array& sigma, const Array& x, const Array& y, const std::string& backend) {
        gp::GPModel model{to_vector(y), to_matrix(x), to_matrix(sigma)};
        return gp::loglike_singular(model, algorithm(backend)).value;
      },
      py::arg("Sigma"), py::arg("X"), py::arg("y"), py::arg("backend") = "ld1");

  m.def(
      "loglike_prior",
      [](const Array& sigma, const Array& x, const Array& y, const Array& b, const Array& bcov) {
        gp::GPModel model{to_vector(y), to_matrix(x), to_matrix(sigma)};
        return gp::loglike_prior(model, gp::PriorSpec{to_vector(b), to_matrix(bcov)}).value;
      },
      py::arg("Sigma"), py::arg("X"), py::arg("y"), py::arg("b"), py::arg("B"));

  m.def(
      "precision",
      [](const Array& sigma, const Array& x) {
        return to_numpy(gp::precision_matrix(to_matrix(sigma), to_matrix(x)));
      },
      py::arg("Sigma"), py::arg("X"));

  m.def(
      "neumann_precision",
      [](const Array& k, const Array& x, double t, double varsigma2, int order) {
        return to_numpy(gp::neumann_precision(to_matrix(k), to_matrix(x), t, varsigma2, order).M);
      },
      py::arg("K"), py::arg("X"), py::arg("t"), py::arg("varsigma2"), py::arg("order"));

  m.def(
      "load_dmx", [](const std::string& path) { return to_numpy(io::load_dmx(path)); },
      py::arg("path"));
  m.def(
      "save_dmx", [](const std::string& path, const Array& a) { io::save_dmx(path, to_matrix(a)); },
      py::arg("path"), py::arg("A"));
}
