#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "riskint/dataset.hpp"
#include "riskint/effects.hpp"
#include "riskint/errors.hpp"
#include "riskint/glm.hpp"
#include "riskint/inference.hpp"
#include "riskint/montecarlo.hpp"
#include "riskint/pipeline.hpp"
#include "riskint/version.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

py::object to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_py(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

riskint::Effect parse_effect(const std::string& s) {
  if (s == "te1" || s == "TE1") return riskint::Effect::TE1;
  if (s == "te2" || s == "TE2") return riskint::Effect::TE2;
  if (s == "int" || s == "INT") return riskint::Effect::INT;
  throw py::value_error("effect must be 'te1', 'te2' or 'int'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Exposure effects and additive interaction from a logistic model";
  m.attr("__version__") = riskint::kVersion;

  static py::exception<riskint::Error> error_type(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const riskint::Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type.ptr())(e.what());
      exc.attr("kind") = e.kind();
      exc.attr("details") = to_py(e.details());
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  // dataset
  py::class_<riskint::Cohort>(m, "Cohort")
      .def_property_readonly("n", &riskint::Cohort::size)
      .def_property_readonly("covariate_names", &riskint::Cohort::covariate_names)
      .def("outcomes", [](const riskint::Cohort& c) { return riskint::outcome_vector(c); })
      .def("to_csv", [](const riskint::Cohort& c) { return riskint::cohort_to_csv(c); })
      .def("__len__", &riskint::Cohort::size);

  m.def(
      "load_cohort",
      [](const std::filesystem::path& path, const std::string& outcome, const std::string& exposure1,
         const std::string& exposure2, const std::vector<std::string>& covariates) {
        return riskint::load_cohort(path, {outcome, exposure1, exposure2, covariates});
      },
      "path"_a, "outcome"_a = "y", "exposure1"_a = "z1", "exposure2"_a = "z2",
      "covariates"_a = std::vector<std::string>{});
  m.def(
      "parse_cohort_csv",
      [](const std::string& text, const std::vector<std::string>& covariates) {
        riskint::CohortSchema schema;
        schema.covariates = covariates;
        return riskint::parse_cohort_csv(text, schema);
      },
      "text"_a, "covariates"_a = std::vector<std::string>{});
  m.def(
      "describe",
      [](const riskint::Cohort& c, const std::map<std::string, double>& cuts) {
        return to_py(riskint::describe(c, cuts).to_json());
      },
      "cohort"_a, "cuts"_a = std::map<std::string, double>{});

  // glm
  py::class_<riskint::ModelSpec>(m, "ModelSpec")
      .def_static("parse", &riskint::ModelSpec::parse, "text"_a, "covariate_names"_a)
      .def_property_readonly("term_names", &riskint::ModelSpec::term_names)
      .def("__len__", &riskint::ModelSpec::size)
      .def("__str__", &riskint::ModelSpec::to_string);

  py::class_<riskint::FitResult>(m, "FitResult")
      .def_readonly("term_names", &riskint::FitResult::term_names)
      .def_readonly("pi_hat", &riskint::FitResult::pi_hat)
      .def_readonly("sigma_hat", &riskint::FitResult::sigma_hat)
      .def_readonly("loglik", &riskint::FitResult::loglik)
      .def_readonly("iterations", &riskint::FitResult::iterations)
      .def_readonly("converged", &riskint::FitResult::converged)
      .def("to_json", [](const riskint::FitResult& f) { return to_py(f.to_json()); })
      .def_static("from_json", [](const py::object& o) { return riskint::FitResult::from_json(from_py(o)); })
      .def_property_readonly("identity", &riskint::FitResult::identity);

  m.def("load_fit", &riskint::load_fit, "path"_a);
  m.def("build_design", &riskint::build_design, "cohort"_a, "spec"_a);
  m.def(
      "fit_logistic",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y) { return riskint::fit_logistic(X, y); },
      "design"_a, "y"_a);
  m.def(
      "fit_cohort",
      [](const riskint::Cohort& c, const riskint::ModelSpec& s) { return riskint::fit_cohort(c, s); },
      "cohort"_a, "spec"_a);
  m.def(
      "lr_test",
      [](const riskint::FitResult& full, const riskint::FitResult& reduced, int df) {
        auto r = riskint::lr_test(full, reduced, df);
        return py::dict("statistic"_a = r.statistic, "df"_a = r.df, "p_value"_a = r.p_value);
      },
      "full"_a, "reduced"_a, "df"_a);
  m.def("chi2_upper_tail", &riskint::chi2_upper_tail, "x"_a, "df"_a);

  // effects
  py::class_<riskint::StandardizationSet>(m, "StandardizationSet")
      .def(py::init<const riskint::Cohort&>(), "cohort"_a)
      .def(py::init<std::vector<std::vector<double>>>(), "rows"_a)
      .def("__len__", &riskint::StandardizationSet::size);

  m.def("risk", &riskint::risk, "coef"_a, "spec"_a, "z1"_a, "z2"_a, "x"_a);
  m.def("marginal_risk", &riskint::marginal_risk, "coef"_a, "spec"_a, "z1"_a, "z2"_a, "std_set"_a);
  m.def(
      "effect_triple",
      [](const Eigen::VectorXd& coef, const riskint::ModelSpec& spec, const riskint::StandardizationSet& s) {
        auto t = riskint::effect_triple(coef, spec, s);
        return py::make_tuple(t.te1, t.te2, t.interaction);
      },
      "coef"_a, "spec"_a, "std_set"_a);

  // montecarlo
  m.def("cholesky", &riskint::cholesky, "sigma"_a);
  m.def(
      "sample_parameters",
      [](const riskint::FitResult& fit, std::size_t n, std::uint64_t seed, bool allow_jitter, unsigned threads) {
        return riskint::sample_parameters(fit, n, seed, {allow_jitter, threads});
      },
      "fit"_a, "n_draws"_a, "seed"_a, "allow_jitter"_a = false, "threads"_a = 1);

  py::class_<riskint::EffectDistribution>(m, "EffectDistribution")
      .def_readonly("n_draws", &riskint::EffectDistribution::n_draws)
      .def_readonly("seed", &riskint::EffectDistribution::seed)
      .def_readonly("jitter", &riskint::EffectDistribution::jitter)
      .def_property_readonly("point",
                             [](const riskint::EffectDistribution& d) {
                               return py::make_tuple(d.point.te1, d.point.te2, d.point.interaction);
                             })
      .def("values", [](const riskint::EffectDistribution& d, const std::string& which) {
        return d.values(parse_effect(which));
      })
      .def("metadata", [](const riskint::EffectDistribution& d) { return to_py(d.metadata()); })
      .def("to_csv", &riskint::EffectDistribution::to_csv)
      .def("__len__", [](const riskint::EffectDistribution& d) { return d.triples.size(); });

  m.def(
      "effect_distribution",
      [](const riskint::FitResult& fit, const riskint::ModelSpec& spec, const riskint::StandardizationSet& s,
         std::size_t n, std::uint64_t seed, bool allow_jitter, unsigned threads) {
        return riskint::effect_distribution(fit, spec, s, n, seed, {allow_jitter, threads});
      },
      "fit"_a, "spec"_a, "std_set"_a, "n_draws"_a, "seed"_a, "allow_jitter"_a = false, "threads"_a = 1);

  // inference
  m.def("quantile", &riskint::quantile, "samples"_a, "p"_a);
  m.def("percentile_ci", &riskint::percentile_ci, "samples"_a, "alpha"_a);

  py::class_<riskint::ConfidenceEllipse>(m, "ConfidenceEllipse")
      .def_property_readonly("center", &riskint::ConfidenceEllipse::center)
      .def_property_readonly("shape", &riskint::ConfidenceEllipse::shape)
      .def_property_readonly("level", &riskint::ConfidenceEllipse::level)
      .def_property_readonly("quantile", &riskint::ConfidenceEllipse::quantile)
      .def("contains", &riskint::ConfidenceEllipse::contains, "point"_a)
      .def("polyline", &riskint::ConfidenceEllipse::polyline, "points"_a = 64)
      .def("to_json", [](const riskint::ConfidenceEllipse& e) { return to_py(e.to_json()); });

  m.def(
      "confidence_ellipse",
      [](const Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>& pairs, double alpha) {
        std::vector<Eigen::Vector2d> v;
        v.reserve(static_cast<std::size_t>(pairs.rows()));
        for (Eigen::Index i = 0; i < pairs.rows(); ++i) v.emplace_back(pairs(i, 0), pairs(i, 1));
        return riskint::confidence_ellipse(v, alpha);
      },
      "pairs"_a, "alpha"_a = 0.05);
  m.def(
      "marginal_report",
      [](const riskint::EffectDistribution& d, const std::string& which) {
        return to_py(riskint::marginal_report(d, parse_effect(which)).to_json());
      },
      "dist"_a, "which"_a = "int");
  m.def(
      "tercile_report",
      [](const riskint::EffectDistribution& d, const std::string& cond) {
        return to_py(riskint::tercile_report(d, parse_effect(cond)).to_json());
      },
      "dist"_a, "conditioning"_a = "te1");
  m.def(
      "delta_method_check",
      [](const riskint::FitResult& fit, const riskint::ModelSpec& spec, const riskint::StandardizationSet& s) {
        auto v = riskint::delta_method_check(fit, spec, s);
        return py::dict("te1"_a = v.te1, "te2"_a = v.te2, "int"_a = v.interaction);
      },
      "fit"_a, "spec"_a, "std_set"_a);

  // pipeline
  m.def(
      "report",
      [](const std::filesystem::path& input, const std::filesystem::path& out, std::uint64_t seed,
         std::optional<std::filesystem::path> fit_json, const std::string& model, std::size_t draws,
         double alpha, bool allow_jitter, unsigned threads) {
        riskint::RunConfig cfg;
        cfg.input = input;
        cfg.out = out;
        cfg.seed = seed;
        cfg.fit_json = std::move(fit_json);
        cfg.model = model;
        cfg.n_draws = draws;
        cfg.alpha = alpha;
        cfg.allow_jitter = allow_jitter;
        cfg.threads = threads;
        std::vector<std::string> written;
        for (const auto& p : riskint::run_report(cfg).written) written.push_back(p.string());
        return written;
      },
      "input"_a, "out"_a, "seed"_a, "fit_json"_a = py::none(), "model"_a = "z1,z2,z1*z2",
      "draws"_a = 1000, "alpha"_a = 0.05, "allow_jitter"_a = false, "threads"_a = 1);
}
