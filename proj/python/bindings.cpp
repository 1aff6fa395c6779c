#include <sstream>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "anderson/cli.hpp"
#include "anderson/config.hpp"
#include "anderson/ensemble.hpp"
#include "anderson/model.hpp"
#include "anderson/spectral.hpp"
#include "anderson/transfer.hpp"
#include "anderson/tridiag.hpp"

namespace py = pybind11;
using namespace anderson;

namespace {

TridiagonalOperator make_operator(const std::vector<double>& potential, double coupling) {
  return assemble_operator(potential, coupling);
}

ExperimentConfig load_config(const std::string& subcommand, const std::string& text) {
  std::vector<ConfigIssue> issues;
  const auto entries = parse_config_text(text, issues);
  if (!issues.empty()) throw ConfigError(issues);
  return build_config(entries, {}, subcommand).config;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spectral statistics of the one-dimensional Anderson model";
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

  py::class_<SiteDistribution>(m, "SiteDistribution")
      .def_static("parse", &parse_distribution, py::arg("text"))
      .def_static("uniform", &SiteDistribution::uniform, py::arg("a"), py::arg("b"), py::arg("coupling") = 1.0)
      .def_static("cantor", &SiteDistribution::cantor, py::arg("depth") = 40, py::arg("coupling") = 1.0)
      .def_static("bernoulli", &SiteDistribution::bernoulli, py::arg("p"), py::arg("coupling") = 1.0)
      .def_property_readonly("coupling", &SiteDistribution::coupling)
      .def_property_readonly("holder_exponent", &SiteDistribution::holder_exponent)
      .def_property_readonly("support", &SiteDistribution::support)
      .def("__str__", &SiteDistribution::to_string)
      .def("__repr__", [](const SiteDistribution& d) { return "SiteDistribution('" + d.to_string() + "')"; })
      .def("__eq__", [](const SiteDistribution& a, const SiteDistribution& b) { return a == b; });

  m.def(
      "sample_potential",
      [](const SiteDistribution& dist, std::size_t n, std::uint64_t seed, std::uint64_t index) {
        return sample_potential(dist, n, seed, index).values;
      },
      py::arg("dist"), py::arg("n"), py::arg("seed"), py::arg("realization") = 0,
      "Uncoupled potential values of one realization");

  m.def(
      "full_spectrum",
      [](const std::vector<double>& potential, double coupling) {
        return full_spectrum(make_operator(potential, coupling));
      },
      py::arg("potential"), py::arg("coupling") = 1.0, "Ascending eigenvalues of the Dirichlet operator");

  m.def(
      "sturm_count",
      [](const std::vector<double>& potential, double coupling, double shift) {
        return sturm_count(make_operator(potential, coupling), shift);
      },
      py::arg("potential"), py::arg("coupling"), py::arg("shift"), "Number of eigenvalues strictly below shift");

  m.def(
      "count_in_interval",
      [](const std::vector<double>& potential, double coupling, double lower, double upper) {
        return count_in_interval(make_operator(potential, coupling), lower, upper);
      },
      py::arg("potential"), py::arg("coupling"), py::arg("lower"), py::arg("upper"));

  m.def(
      "eigenpairs",
      [](const std::vector<double>& potential, double coupling, const std::vector<double>& energies) {
        py::list out;
        for (const auto& p : eigenpairs(make_operator(potential, coupling), energies)) {
          py::dict d;
          d["energy"] = p.energy;
          d["vector"] = p.vector;
          d["residual"] = p.residual;
          d["center"] = p.center;
          out.append(d);
        }
        return out;
      },
      py::arg("potential"), py::arg("coupling"), py::arg("energies"),
      "Eigenvectors by inverse iteration at sorted energies");

  m.def(
      "char_poly_value",
      [](const std::vector<double>& potential, double coupling, double energy) {
        const auto v = char_poly_value(potential, coupling, energy);
        return py::make_tuple(v.sign, v.log_magnitude);
      },
      py::arg("potential"), py::arg("coupling"), py::arg("energy"), "(sign, log|det(E - H)|)");

  m.def(
      "log_norm",
      [](const std::vector<double>& potential, double coupling, double energy, std::size_t interval) {
        return log_norm(potential, coupling, energy, interval);
      },
      py::arg("potential"), py::arg("coupling"), py::arg("energy"), py::arg("renormalize_interval") = 1);

  m.def(
      "lyapunov_exponent",
      [](const SiteDistribution& dist, double energy, std::size_t steps, std::size_t replicas, std::uint64_t seed) {
        const auto g = lyapunov_exponent(dist, energy, steps, replicas, seed);
        return py::make_tuple(g.gamma, g.standard_error);
      },
      py::arg("dist"), py::arg("energy"), py::arg("steps"), py::arg("replicas"), py::arg("seed"),
      "(gamma, standard error)");

  m.def(
      "estimate_ids",
      [](const SiteDistribution& dist, std::size_t n, const std::vector<double>& grid, std::size_t realizations,
         std::uint64_t seed) {
        const auto ids = estimate_ids(dist, n, grid, realizations, seed);
        return py::make_tuple(ids.values, ids.standard_errors);
      },
      py::arg("dist"), py::arg("n"), py::arg("grid"), py::arg("realizations"), py::arg("seed"),
      "(values, standard errors) of the normalized eigenvalue count on a sorted grid");

  m.def(
      "run_experiment",
      [](const std::string& subcommand, const std::string& config_text, unsigned workers) {
        const auto cfg = load_config(subcommand, config_text);
        ExecutionContext ctx;
        ctx.workers = workers;
        ExperimentResult result;
        {
          py::gil_scoped_release release;
          result = run_experiment(subcommand, cfg, ctx);
        }
        py::dict tables;
        for (const auto& [name, table] : result.tables) tables[py::str(name)] = io::to_csv(table);
        return py::make_tuple(summary_to_json(result.summary), tables);
      },
      py::arg("subcommand"), py::arg("config") = "", py::arg("workers") = 1,
      "(summary JSON text, {table name: CSV text}) for a key=value configuration");

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "(exit code, stdout, stderr) of a command line run");
}
