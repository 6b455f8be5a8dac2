#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "polarscale/bounds.hpp"
#include "polarscale/common.hpp"
#include "polarscale/de.hpp"
#include "polarscale/ensemble.hpp"
#include "polarscale/kernel.hpp"
#include "polarscale/lyapunov.hpp"
#include "polarscale/rng.hpp"

namespace py = pybind11;
namespace ps = polarscale;

namespace {

py::object to_fraction(const ps::ensemble::Rational& r) {
  py::object fraction = py::module_::import("fractions").attr("Fraction");
  return fraction(r.get_num().get_str() + "/" + r.get_den().get_str());
}

py::dict lambda_dict(const ps::lyapunov::LambdaReport& rep) {
  py::dict d;
  d["operator"] = rep.op;
  d["beta"] = rep.beta;
  d["lambda"] = rep.lambda;
  d["argmax_x"] = rep.argmax_x;
  d["grid_points"] = rep.grid_points;
  d["refine_tol"] = rep.refine_tol;
  d["grid_lambda"] = rep.grid_lambda;
  d["refined_lambda"] = rep.refined_lambda;
  d["symmetric_search"] = rep.symmetric_search;
  return d;
}

ps::lyapunov::PolarOperator make_operator(const std::string& kind, std::uint32_t q,
                                          std::uint32_t m, const std::string& kernel_path) {
  if (kind == "rs") return ps::lyapunov::PolarOperator::rs(q);
  if (kind == "ensemble")
    return ps::lyapunov::PolarOperator::ensemble_avg(ps::ensemble::RhoTable(m, q));
  if (kind == "file")
    return ps::lyapunov::PolarOperator::fixed(ps::kernel::load_file(kernel_path),
                                              "kernel:" + kernel_path);
  throw ps::PreconditionError("operator kind must be rs, ensemble, or file");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "density evolution, contraction constants, and exact full-rank-ensemble "
            "combinatorics for q-ary polar codes on erasure channels";
  m.attr("__version__") = ps::kVersion;

  py::register_exception<ps::PreconditionError>(m, "PreconditionError", PyExc_ValueError);

  // density evolution
  m.def("psi", &ps::de::psi, py::arg("q"), py::arg("i"), py::arg("x"),
        "erasure rate of the i-th effective channel after one polarization step");
  m.def("psi_mean_check", &ps::de::psi_mean_check, py::arg("q"), py::arg("x"));
  m.def(
      "profile",
      [](std::uint32_t q, std::uint32_t n, double eps) {
        return ps::de::profile(q, n, eps).rates;
      },
      py::arg("q"), py::arg("n"), py::arg("eps"),
      "all q^n effective-channel erasure rates in lexicographic index order");
  m.def(
      "select_channels",
      [](std::uint32_t q, std::uint32_t n, double eps, std::uint64_t k) {
        auto sel = ps::de::select_channels_stream(q, n, eps, k);
        return py::make_tuple(sel.indices, sel.union_bound);
      },
      py::arg("q"), py::arg("n"), py::arg("eps"), py::arg("k"),
      "indices of the k smallest rates and their union bound");
  m.def(
      "sample_chain",
      [](std::uint32_t q, std::uint32_t n, double x0, std::uint64_t trials,
         std::uint64_t seed) {
        ps::Rng master(seed);
        std::vector<double> out;
        out.reserve(trials);
        for (std::uint64_t t = 0; t < trials; ++t) {
          ps::Rng stream = master.stream(t);
          out.push_back(ps::de::sample_chain(q, n, x0, stream));
        }
        return out;
      },
      py::arg("q"), py::arg("n"), py::arg("x0"), py::arg("trials"), py::arg("seed") = 1,
      "seeded Monte Carlo draws of the polarization chain");
  m.def("interval_fraction", &ps::de::interval_fraction, py::arg("q"), py::arg("n"),
        py::arg("eps"), py::arg("lo"), py::arg("hi"));

  // contraction machinery
  m.def(
      "lambda_sup",
      [](const std::string& op, std::uint32_t q, std::uint32_t m, double beta,
         std::uint32_t iterate, std::size_t grid_points, double refine_tol,
         const std::string& kernel_path) {
        auto T = make_operator(op, q, m, kernel_path);
        auto v = ps::lyapunov::LyapunovFn::power(beta);
        if (iterate > 0) v = ps::lyapunov::LyapunovFn::iterated(v, T, iterate);
        return lambda_dict(ps::lyapunov::lambda_sup(T, v, grid_points, refine_tol));
      },
      py::arg("op") = "rs", py::arg("q") = 2, py::arg("m") = 2, py::arg("beta") = 0.5,
      py::arg("iterate") = 0, py::arg("grid_points") = ps::lyapunov::kDefaultGridPoints,
      py::arg("refine_tol") = ps::lyapunov::kDefaultRefineTol, py::arg("kernel_path") = "",
      "sup_x (TV)(x)/V(x) for V = (x(1-x))^beta, optionally iterated");
  m.def("apply_operator",
        [](const std::string& op, std::uint32_t q, std::uint32_t m, double beta, double x,
           const std::string& kernel_path) {
          return ps::lyapunov::apply_operator(make_operator(op, q, m, kernel_path),
                                              ps::lyapunov::LyapunovFn::power(beta), x);
        },
        py::arg("op"), py::arg("q"), py::arg("m"), py::arg("beta"), py::arg("x"),
        py::arg("kernel_path") = "");
  m.def("lemma2_bound", &ps::lyapunov::lemma2_bound, py::arg("q"), py::arg("beta"));
  m.def("theorem1_exponent", &ps::lyapunov::theorem1_exponent, py::arg("q"), py::arg("gamma"),
        py::arg("beta"));
  m.def("theorem1_bound", &ps::lyapunov::theorem1_bound, py::arg("q"), py::arg("n"),
        py::arg("gamma"), py::arg("beta"));
  m.def("theorem1_bound_onesided", &ps::lyapunov::theorem1_bound_onesided, py::arg("q"),
        py::arg("n"), py::arg("gamma"), py::arg("beta"), py::arg("x"));
  m.def("q0_threshold", &ps::lyapunov::q0_threshold, py::arg("gamma"), py::arg("delta"));
  m.def("gaussian_q", &ps::lyapunov::gaussian_Q, py::arg("z"));
  m.def("m_beta", &ps::lyapunov::m_beta, py::arg("beta"));
  m.def("lambda_tilde", &ps::lyapunov::lambda_tilde, py::arg("q"), py::arg("beta"));
  m.def(
      "check_inequalities",
      [](std::uint32_t q, double beta, std::size_t grid_points) {
        py::list out;
        for (const auto& r : ps::lyapunov::check_proof_inequalities(q, beta, grid_points)) {
          py::dict d;
          d["name"] = r.name;
          d["min_slack"] = r.min_slack;
          d["witness_x"] = r.witness_x;
          d["witness_y"] = r.witness_y;
          d["pass"] = r.pass;
          out.append(d);
        }
        return out;
      },
      py::arg("q"), py::arg("beta"), py::arg("grid_points") = 2000);

  // exact ensemble combinatorics
  m.def(
      "gaussian_binomial",
      [](std::int64_t k, std::int64_t j, std::uint32_t q) {
        return py::module_::import("builtins").attr("int")(
            ps::ensemble::gaussian_binomial(k, j, q).get_str());
      },
      py::arg("k"), py::arg("j"), py::arg("q"));
  m.def(
      "phi_count",
      [](std::int64_t j, std::int64_t i, std::uint32_t q) {
        return py::module_::import("builtins").attr("int")(
            ps::ensemble::phi_count(j, i, q).get_str());
      },
      py::arg("j"), py::arg("i"), py::arg("q"));
  m.def(
      "rank_dist",
      [](std::uint32_t k, std::uint32_t d, std::uint32_t q, std::uint32_t j) {
        return to_fraction(ps::ensemble::rank_dist(k, d, q, j));
      },
      py::arg("k"), py::arg("d"), py::arg("q"), py::arg("j"),
      "P(rank = j) of a uniform k x d matrix, as a Fraction");
  m.def(
      "theta",
      [](std::uint32_t m_, std::uint32_t k, std::uint32_t d, std::uint32_t r, std::uint32_t j,
         std::uint32_t q) { return to_fraction(ps::ensemble::theta(m_, k, d, r, j, q)); },
      py::arg("m"), py::arg("k"), py::arg("d"), py::arg("r"), py::arg("j"), py::arg("q"),
      "joint rank probability, as a Fraction");
  m.def(
      "rho",
      [](std::uint32_t m_, std::uint32_t i, std::uint32_t d, std::uint32_t q) {
        return to_fraction(ps::ensemble::rho(m_, i, d, q));
      },
      py::arg("m"), py::arg("i"), py::arg("d"), py::arg("q"),
      "exact ensemble erasure probability, as a Fraction");
  m.def(
      "rho_mc",
      [](std::uint32_t m_, std::uint32_t i, std::uint32_t d, std::uint32_t q,
         std::uint64_t trials, std::uint64_t seed) {
        ps::Rng rng(seed);
        auto est = ps::ensemble::rho_mc(m_, i, d, q, trials, rng);
        return py::make_tuple(est.value, est.std_error);
      },
      py::arg("m"), py::arg("i"), py::arg("d"), py::arg("q"), py::arg("trials"),
      py::arg("seed") = 1);
  m.def(
      "phi_bar",
      [](std::uint32_t m_, std::uint32_t q, std::uint32_t i, double x) {
        return ps::ensemble::phi_bar(ps::ensemble::RhoTable(m_, q), i, x);
      },
      py::arg("m"), py::arg("q"), py::arg("i"), py::arg("x"));
  m.def(
      "conjecture1",
      [](std::uint32_t m_, std::uint32_t q, double beta, std::uint32_t depth,
         std::size_t grid_points) {
        auto rep =
            ps::ensemble::check_conjecture1(ps::ensemble::RhoTable(m_, q), beta, depth,
                                            grid_points);
        py::dict d;
        d["concave"] = rep.concave;
        d["worst_second_difference"] = rep.worst_second_difference;
        d["first_violation_level"] = rep.first_violation_level;
        return d;
      },
      py::arg("m"), py::arg("q"), py::arg("beta"), py::arg("depth") = 1,
      py::arg("grid_points") = 2000);
  m.def(
      "conjecture2",
      [](const std::vector<std::uint32_t>& ms, std::uint32_t q, double beta,
         std::size_t grid_points, double refine_tol) {
        auto fit = ps::ensemble::check_conjecture2(ms, q, beta, "", grid_points, refine_tol);
        py::dict d;
        d["ms"] = fit.ms;
        d["lambdas"] = fit.lambdas;
        d["slope"] = fit.slope;
        d["intercept"] = fit.intercept;
        d["residuals"] = fit.residuals;
        return d;
      },
      py::arg("ms"), py::arg("q"), py::arg("beta"), py::arg("grid_points") = 2000,
      py::arg("refine_tol") = ps::lyapunov::kDefaultRefineTol);

  // fixed kernels
  py::class_<ps::kernel::Kernel>(m, "Kernel")
      .def_static("arikan_tensor", &ps::kernel::arikan_tensor, py::arg("levels"))
      .def_static("vandermonde", &ps::kernel::vandermonde, py::arg("q"))
      .def_static("load", &ps::kernel::load_file, py::arg("path"))
      .def("store", &ps::kernel::store_file, py::arg("path"))
      .def_property_readonly("m", &ps::kernel::Kernel::m)
      .def_property_readonly("q", &ps::kernel::Kernel::q)
      .def("profile_coefficients",
           [](const ps::kernel::Kernel& k) { return ps::kernel::profile_poly(k).rows(); })
      .def("phi",
           [](const ps::kernel::Kernel& k, std::uint32_t i, double x) {
             return ps::kernel::profile_poly(k).eval(i, x);
           })
      .def("matches_rs_profile",
           [](const ps::kernel::Kernel& k) {
             return ps::kernel::rs_profile_matches(ps::kernel::profile_poly(k));
           })
      .def("lambda_sup",
           [](const ps::kernel::Kernel& k, double beta, std::size_t grid_points,
              double refine_tol) {
             return lambda_dict(ps::lyapunov::lambda_kernel(k, beta, grid_points, refine_tol));
           },
           py::arg("beta"), py::arg("grid_points") = ps::lyapunov::kDefaultGridPoints,
           py::arg("refine_tol") = ps::lyapunov::kDefaultRefineTol);
}
