#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tvtopo/errors.hpp"
#include "tvtopo/ggm.hpp"
#include "tvtopo/harness.hpp"
#include "tvtopo/matcalc.hpp"
#include "tvtopo/synthgen.hpp"

namespace py = pybind11;
using namespace tvtopo;

namespace {

SymMat sym(const Matrix& m) { return SymMat(m); }

VechVec as_vech(const Vector& v) { return VechVec(vech_dimension(v.size()), v); }

ScenarioConfig scenario_config(int n, int T, int segment_length, double perturb_pct, std::uint64_t seed,
                               double density, double margin, double scale) {
  ScenarioConfig cfg;
  cfg.n = n;
  cfg.T = T;
  cfg.segment_length = segment_length;
  cfg.perturb_pct = perturb_pct;
  cfg.seed = seed;
  cfg.density = density;
  cfg.margin = margin;
  cfg.scale = scale;
  cfg.validate();
  return cfg;
}

py::dict scenario_dict(const Scenario& sc) {
  py::list truths;
  for (const auto& s : sc.truths) truths.append(py::cast(s.mat()));
  Matrix signals(sc.length(), sc.n());
  for (int t = 0; t < sc.length(); ++t) signals.row(t) = sc.signals[static_cast<std::size_t>(t)].transpose();
  py::dict d;
  d["truths"] = truths;
  d["change_times"] = sc.change_times;
  d["perturbed_nodes"] = sc.perturbed_nodes;
  d["signals"] = signals;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Streaming time-varying Gaussian graphical model tracking";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", base);
  py::register_exception<NotPositiveDefiniteError>(m, "NotPositiveDefiniteError", base);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<DivergenceError>(m, "DivergenceError", base);

  m.def("vech", [](const Matrix& s) { return vech(sym(s)).values(); }, py::arg("s"),
        "Stacks the lower triangle of a symmetric matrix column by column.");
  m.def("unvech", [](const Vector& v) { return unvech(as_vech(v)).mat(); }, py::arg("v"));
  m.def("dup_transpose_apply", [](const Matrix& a) { return dup_transpose_apply(a).values(); }, py::arg("m"),
        "D^T vec(M) without forming D.");
  m.def("hessian_apply", [](const Matrix& s_inv, const Vector& dir) {
        return hessian_apply(sym(s_inv), as_vech(dir)).values();
      }, py::arg("s_inv"), py::arg("dir"));
  m.def("project_spd", [](const Matrix& s, double eps) { return project_spd(sym(s), eps).mat(); }, py::arg("s"),
        py::arg("eps") = kDefaultSpdFloor);
  m.def("min_eigenvalue", [](const Matrix& s) { return min_eigenvalue(sym(s)); }, py::arg("s"));
  m.def("logdet_spd", [](const Matrix& s) { return logdet_spd(sym(s)); }, py::arg("s"));
  m.def("spd_inverse", [](const Matrix& s) { return spd_inverse(sym(s)).mat(); }, py::arg("s"));

  m.def("ggm_cost", [](const Matrix& s, const Matrix& sigma) { return ggm_cost(sym(s), sym(sigma)); },
        py::arg("s"), py::arg("sigma_hat"));
  m.def("ggm_gradient", [](const Matrix& s, const Matrix& sigma) {
        return ggm_gradient(sym(s), sym(sigma)).values();
      }, py::arg("s"), py::arg("sigma_hat"));
  m.def("mle_closed_form", [](const Matrix& sigma) { return mle_closed_form(sym(sigma)).mat(); },
        py::arg("sigma_hat"));
  m.def("nmse", [](const Matrix& a, const Matrix& b) { return nmse(sym(a), sym(b)); }, py::arg("s_hat"),
        py::arg("s_ref"));

  m.def("build_scenario", [](int n, int T, int segment_length, double perturb_pct, std::uint64_t seed,
                             double density, double margin, double scale) {
        return scenario_dict(build_scenario(
            scenario_config(n, T, segment_length, perturb_pct, seed, density, margin, scale)));
      },
        py::arg("n") = 8, py::arg("T") = 600, py::arg("segment_length") = 200, py::arg("perturb_pct") = 0.2,
        py::arg("seed") = 1, py::arg("density") = 0.5, py::arg("margin") = 3.0, py::arg("scale") = 0.1);

  m.def("run_experiment", [](int n, int T, int segment_length, double perturb_pct, std::uint64_t seed, int P,
                             int C, double alpha, double beta, double gamma, bool bmle, bool imle, bool truth) {
        const Scenario sc = build_scenario(scenario_config(n, T, segment_length, perturb_pct, seed, 0.5, 3.0, 0.1));
        ExperimentConfig cfg;
        cfg.solver.P = P;
        cfg.solver.C = C;
        cfg.solver.alpha = alpha;
        cfg.solver.beta = beta;
        cfg.gamma = gamma;
        cfg.references = {bmle, imle, truth};
        ExperimentResult res;
        {
          py::gil_scoped_release release;
          res = run_experiment(sc, cfg);
        }
        py::dict out;
        for (Metric metric : kAllMetrics) {
          const auto series = metric_series(res.records, metric);
          out[py::str(std::string(metric_name(metric)))] =
              Eigen::Map<const Vector>(series.data(), static_cast<Eigen::Index>(series.size())).eval();
        }
        out["final_pc"] = res.final_pc.mat();
        out["final_co"] = res.final_co.mat();
        return out;
      },
        py::arg("n") = 8, py::arg("T") = 600, py::arg("segment_length") = 200, py::arg("perturb_pct") = 0.2,
        py::arg("seed") = 1, py::arg("P") = 1, py::arg("C") = 1, py::arg("alpha") = 1e-3, py::arg("beta") = 1e-3,
        py::arg("gamma") = 0.97, py::arg("bmle") = true, py::arg("imle") = true, py::arg("truth") = true,
        "Runs the P-C and C-O trackers on a generated scenario and returns every NMSE series.");
}
