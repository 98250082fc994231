#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "opinionpool/experiments.hpp"
#include "opinionpool/expfam.hpp"
#include "opinionpool/metrics.hpp"
#include "opinionpool/pooling.hpp"
#include "opinionpool/version.hpp"

namespace py = pybind11;
namespace op = opinionpool;

namespace {

py::dict estimate_to_dict(const op::Estimate& e) {
  py::dict d;
  d["value"] = e.value;
  d["std_err"] = e.std_err;
  return d;
}

py::dict report_to_dict(const op::MetricReport& r) {
  py::dict d;
  d["nll"] = r.nll.value;
  d["nll_se"] = r.nll.std_err;
  d["bc"] = r.bc.value;
  d["bc_se"] = r.bc.std_err;
  d["sharpness"] = r.sharpness.value;
  d["sharpness_se"] = r.sharpness.std_err;
  d["n_samples"] = r.n_samples;
  d["seed"] = r.seed;
  return d;
}

}  // namespace

PYBIND11_MODULE(opinionpool, m) {
  m.doc() = "Opinion pooling of Gaussian expert densities";
  m.attr("__version__") = op::kVersion;

  py::class_<op::DiagonalGaussian>(m, "DiagonalGaussian")
      .def(py::init<Eigen::VectorXd, Eigen::VectorXd>(), py::arg("mean"), py::arg("variance"))
      .def_property_readonly("mean", &op::DiagonalGaussian::mean)
      .def_property_readonly("variance", &op::DiagonalGaussian::variance)
      .def_property_readonly("dim", &op::DiagonalGaussian::dim)
      .def("log_density", &op::DiagonalGaussian::log_density, py::arg("z"))
      .def("log_density_batch", &op::DiagonalGaussian::log_density_batch, py::arg("z"))
      .def("sample",
           [](const op::DiagonalGaussian& g, std::size_t n, std::uint64_t seed) {
             return op::sample(g, n, seed);
           },
           py::arg("n"), py::arg("seed"));

  py::class_<op::CrossTerms>(m, "CrossTerms")
      .def_readonly("mu", &op::CrossTerms::mu)
      .def_readonly("variance", &op::CrossTerms::variance)
      .def_readonly("log_affinity", &op::CrossTerms::log_affinity)
      .def_readonly("affinity", &op::CrossTerms::affinity);

  py::class_<op::ExpertSet>(m, "ExpertSet")
      .def(py::init<std::vector<op::DiagonalGaussian>>(), py::arg("experts"))
      .def(py::init<std::vector<op::DiagonalGaussian>, Eigen::VectorXd>(), py::arg("experts"),
           py::arg("weights"))
      .def_property_readonly("weights", &op::ExpertSet::weights)
      .def_property_readonly("dim", &op::ExpertSet::dim)
      .def("__len__", &op::ExpertSet::size)
      .def("expert", &op::ExpertSet::expert, py::arg("j"));

  py::class_<op::GaussianMixture>(m, "GaussianMixture")
      .def_readonly("components", &op::GaussianMixture::components)
      .def_readonly("weights", &op::GaussianMixture::weights)
      .def("log_density", &op::GaussianMixture::log_density, py::arg("z"));

  py::class_<op::NormEstimate>(m, "NormEstimate")
      .def_readonly("log_norm", &op::NormEstimate::log_norm)
      .def_readonly("std_err", &op::NormEstimate::std_err)
      .def_readonly("ess", &op::NormEstimate::ess)
      .def_readonly("low_ess", &op::NormEstimate::low_ess);

  m.def("cross_terms", &op::cross_terms, py::arg("a"), py::arg("b"));
  m.def("poe_aggregate", &op::poe_aggregate, py::arg("experts"));
  m.def("hellinger_aggregate", &op::hellinger_aggregate, py::arg("experts"));
  m.def("mohel_aggregate", &op::mohel_aggregate, py::arg("experts"));
  m.def("wasserstein_barycenter", &op::wasserstein_barycenter, py::arg("experts"));
  m.def("moe_log_density", &op::moe_log_density, py::arg("experts"), py::arg("z"));
  m.def("moe_sample", &op::moe_sample, py::arg("experts"), py::arg("n"), py::arg("seed"));
  m.def("holder_log_density_unnorm", &op::holder_log_density_unnorm, py::arg("experts"),
        py::arg("alpha"), py::arg("z"));
  m.def("holder_normalize", &op::holder_normalize, py::arg("experts"), py::arg("alpha"),
        py::arg("n"), py::arg("seed"));

  m.def("mc_nll",
        [](const op::DiagonalGaussian& target, const op::DiagonalGaussian& truth, std::size_t n,
           std::uint64_t seed) { return estimate_to_dict(op::mc_nll(target, truth, n, seed)); },
        py::arg("target"), py::arg("truth"), py::arg("n"), py::arg("seed"));
  m.def("mc_bhattacharyya",
        [](const op::DiagonalGaussian& target, const op::DiagonalGaussian& truth, std::size_t n,
           std::uint64_t seed) {
          const op::BcEstimate bc = op::mc_bhattacharyya(target, truth, n, seed);
          py::dict d;
          d["value"] = bc.value;
          d["raw"] = bc.raw;
          d["std_err"] = bc.std_err;
          return d;
        },
        py::arg("target"), py::arg("truth"), py::arg("n"), py::arg("seed"));
  m.def("sharpness", py::overload_cast<const op::DiagonalGaussian&>(&op::sharpness),
        py::arg("target"));
  m.def("estimate_alpha_divergence",
        [](const op::DiagonalGaussian& q, const op::DiagonalGaussian& phi, double alpha,
           std::size_t n, std::uint64_t seed) {
          return estimate_to_dict(op::estimate_alpha_divergence(q, phi, alpha, n, seed));
        },
        py::arg("q"), py::arg("phi"), py::arg("alpha"), py::arg("n"), py::arg("seed"));

  m.def("expfam_affinity",
        [](double rate_a, double rate_b) {
          return op::expfam_affinity(op::exponential_member(rate_a),
                                     op::exponential_member(rate_b));
        },
        py::arg("rate_a"), py::arg("rate_b"),
        "Hellinger affinity of two exponential distributions");

  m.def("run_preset",
        [](const std::string& preset, std::uint64_t seed, std::size_t n_samples, unsigned jobs) {
          std::vector<op::ScenarioConfig> grid;
          if (preset == "figure1") {
            grid = op::figure1_grid(seed, n_samples);
          } else if (preset == "figure2") {
            grid = op::figure2_grid(seed, n_samples);
          } else if (preset == "figure7") {
            grid = op::figure7_grid(seed, n_samples);
          } else {
            throw std::invalid_argument("unknown preset; valid: figure1, figure2, figure7");
          }
          const op::SweepResult result = op::run_sweep(grid, jobs);
          py::list rows;
          for (const auto& row : result.rows) {
            py::dict d = report_to_dict(row.report);
            d["n_good"] = row.n_good;
            d["n_bad"] = row.n_bad;
            d["method"] = std::string(op::method_id(row.method));
            rows.append(std::move(d));
          }
          return rows;
        },
        py::arg("preset"), py::arg("seed") = 0, py::arg("n_samples") = 100000,
        py::arg("jobs") = 0);
}
