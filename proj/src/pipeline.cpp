#include "riskint/pipeline.hpp"

#include <fstream>
#include <sstream>

#include "riskint/effects.hpp"
#include "riskint/errors.hpp"
#include "riskint/format.hpp"
#include "riskint/inference.hpp"
#include "riskint/montecarlo.hpp"
#include "riskint/version.hpp"

namespace riskint {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text, ReportOutcome* outcome = nullptr) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("WriteFailed", "cannot write '" + path.string() + "'");
  out << text;
  if (outcome) outcome->written.push_back(path);
}

void write_json(const fs::path& path, const nlohmann::json& j, ReportOutcome* outcome = nullptr) {
  write_text(path, j.dump(2) + "\n", outcome);
}

Cohort require_cohort(const RunConfig& config) {
  if (!config.input) throw usage_error("--input is required for this command");
  return load_cohort(*config.input, config.schema);
}

nlohmann::json provenance(const RunConfig& config, const ModelSpec& spec,
                          const EffectDistribution& dist) {
  return {{"software", kSoftware},
          {"seed", dist.seed},
          {"n_draws", dist.n_draws},
          {"jitter", dist.jitter},
          {"alpha", config.alpha},
          {"model", spec.to_string()},
          {"fit_identity", dist.source}};
}

std::string csv_provenance(const nlohmann::json& prov) {
  std::ostringstream os;
  os << "# " << prov["software"].get<std::string>() << "; seed=" << prov["seed"].get<std::uint64_t>()
     << "; n_draws=" << prov["n_draws"].get<std::size_t>()
     << "; jitter=" << format_double(prov["jitter"].get<double>())
     << "; model=" << prov["model"].get<std::string>()
     << "; fit=" << prov["fit_identity"].get<std::string>() << "\n";
  return os.str();
}

std::string histogram_rows(const std::string& label, const Histogram& h) {
  std::string out;
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    out += label + "," + format_double(h.edges[b]) + "," + format_double(h.edges[b + 1]) + "," +
           std::to_string(h.counts[b]) + "\n";
  }
  return out;
}

}  // namespace

void validate(const RunConfig& config) {
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw usage_error("--alpha must lie in (0, 1)");
  if (config.n_draws < 1) throw usage_error("--draws must be at least 1");
}

std::pair<FitResult, ModelSpec> resolve_fit(const RunConfig& config, const Cohort& cohort) {
  if (config.fit_json) {
    FitResult fit = load_fit(*config.fit_json);
    std::string terms;
    for (const auto& t : fit.term_names) {
      if (t == "intercept") continue;
      if (!terms.empty()) terms += ",";
      terms += t;
    }
    ModelSpec spec = ModelSpec::parse(terms, cohort.covariate_names());
    if (spec.term_names() != fit.term_names) {
      throw data_error("InvalidFitJson",
                       "fit JSON terms must start with the intercept and use model term names");
    }
    return {std::move(fit), std::move(spec)};
  }
  ModelSpec spec = ModelSpec::parse(config.model, cohort.covariate_names());
  FitResult fit = fit_cohort(cohort, spec);
  return {std::move(fit), std::move(spec)};
}

FitResult run_fit(const RunConfig& config) {
  validate(config);
  const Cohort cohort = require_cohort(config);
  const ModelSpec spec = ModelSpec::parse(config.model, cohort.covariate_names());
  FitResult fit = fit_cohort(cohort, spec);
  fs::create_directories(config.out);
  nlohmann::json j = fit.to_json();
  j["provenance"] = {{"software", kSoftware}, {"model", spec.to_string()}};
  write_json(config.out / "fit.json", j, nullptr);
  return fit;
}

DescriptiveTable run_describe(const RunConfig& config) {
  return describe(require_cohort(config), config.cuts);
}

ReportOutcome run_report(const RunConfig& config) {
  validate(config);
  if (!config.seed) throw usage_error("--seed is required for report");
  const Cohort cohort = require_cohort(config);
  const auto [fit, spec] = resolve_fit(config, cohort);
  const StandardizationSet std_set(cohort);

  SamplingOptions opts;
  opts.allow_jitter = config.allow_jitter;
  opts.threads = config.threads;
  const EffectDistribution dist =
      effect_distribution(fit, spec, std_set, config.n_draws, *config.seed, opts);

  fs::create_directories(config.out);
  ReportOutcome outcome;
  const nlohmann::json prov = provenance(config, spec, dist);
  const std::string csv_head = csv_provenance(prov);

  {
    nlohmann::json j = fit.to_json();
    j["provenance"] = prov;
    write_json(config.out / "fit.json", j, &outcome);
  }

  {
    nlohmann::json j{{"provenance", prov},
                     {"te1", dist.point.te1},
                     {"te2", dist.point.te2},
                     {"int", dist.point.interaction}};
    const DeltaVariances dv = delta_method_check(fit, spec, std_set);
    j["delta_variance"] = {{"te1", dv.te1}, {"te2", dv.te2}, {"int", dv.interaction}};
    write_json(config.out / "effects.json", j, &outcome);
  }
  write_text(config.out / "draws.csv", csv_head + dist.to_csv(), &outcome);
  {
    nlohmann::json j = dist.metadata();
    j["provenance"] = prov;
    write_json(config.out / "draws.json", j, &outcome);
  }

  std::vector<Error> errors;
  auto stage = [&](auto&& body) {
    try {
      body();
    } catch (const Error& e) {
      if (e.category() != ErrorCategory::Inference) throw;
      errors.push_back(e);
    }
  };

  // Marginal intervals and histograms.
  stage([&] {
    std::string hist = csv_head + "effect,bin_lo,bin_hi,count\n";
    for (Effect which : {Effect::TE1, Effect::TE2, Effect::INT}) {
      IntervalEstimate est = marginal_report(dist, which);
      nlohmann::json j = est.to_json();
      j["effect"] = effect_name(which);
      j["point_convention"] = "plug-in at pi_hat";
      j["ci_alpha"] = {{"alpha", config.alpha}};
      auto ci = percentile_ci(dist.values(which), config.alpha);
      j["ci_alpha"]["interval"] = {ci.first, ci.second};
      j["provenance"] = prov;
      write_json(config.out / (std::string("marginal_") + effect_name(which) + ".json"), j, &outcome);

      auto v = dist.values(which);
      auto [mn, mx] = std::minmax_element(v.begin(), v.end());
      hist += histogram_rows(effect_name(which), histogram(v, *mn, *mx, config.histogram_bins));
    }
    write_text(config.out / "hist_marginal.csv", hist, &outcome);
  });

  // Tercile-conditional INT.
  for (Effect cond : {Effect::TE1, Effect::TE2}) {
    stage([&] {
      TercileReport rep = tercile_report(dist, cond);
      nlohmann::json j = rep.to_json();
      j["provenance"] = prov;
      const std::string name = effect_name(cond);
      write_json(config.out / ("terciles_" + name + ".json"), j, &outcome);

      auto all = dist.values(Effect::INT);
      auto [mn, mx] = std::minmax_element(all.begin(), all.end());
      std::string hist = csv_head + "stratum,bin_lo,bin_hi,count\n";
      for (std::size_t s = 0; s < 3; ++s) {
        hist += histogram_rows(std::to_string(s + 1),
                               histogram(rep.draws[s], *mn, *mx, config.histogram_bins));
      }
      write_text(config.out / ("hist_terciles_" + name + ".csv"), hist, &outcome);
    });
  }

  // Joint regions.
  for (Effect first : {Effect::TE1, Effect::TE2}) {
    stage([&] {
      std::vector<Eigen::Vector2d> pairs;
      pairs.reserve(dist.triples.size());
      for (const auto& t : dist.triples) pairs.emplace_back(effect_value(t, first), t.interaction);
      ConfidenceEllipse ell = confidence_ellipse(pairs, config.alpha);
      const std::string name = std::string("ellipse_") + effect_name(first) + "_int";
      nlohmann::json j = ell.to_json();
      j["coordinates"] = {effect_name(first), "int"};
      j["point"] = {effect_value(dist.point, first), dist.point.interaction};
      j["provenance"] = prov;
      write_json(config.out / (name + ".json"), j, &outcome);
      std::string csv = csv_head + std::string(effect_name(first)) + ",int\n";
      for (const auto& p : ell.polyline(64)) csv += format_double(p[0]) + "," + format_double(p[1]) + "\n";
      write_text(config.out / (name + ".csv"), csv, &outcome);
    });
  }

  if (!errors.empty()) {
    nlohmann::json others = nlohmann::json::array();
    for (std::size_t i = 1; i < errors.size(); ++i) others.push_back(errors[i].to_json());
    nlohmann::json details = errors.front().details();
    if (!others.empty()) details["other_errors"] = others;
    throw Error(ErrorCategory::Inference, errors.front().kind(), errors.front().what(), details);
  }
  return outcome;
}

}  // namespace riskint
