#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "riskint/dataset.hpp"
#include "riskint/glm.hpp"

namespace riskint {

/// Everything one CLI invocation needs.
struct RunConfig {
  std::optional<std::filesystem::path> input;     // cohort CSV
  std::optional<std::filesystem::path> fit_json;  // fixture FitResult
  std::string model = "z1,z2,z1*z2";
  CohortSchema schema;
  std::size_t n_draws = 1000;
  std::optional<std::uint64_t> seed;
  double alpha = 0.05;
  bool allow_jitter = false;
  unsigned threads = 1;
  std::filesystem::path out = ".";
  std::map<std::string, double> cuts;  // describe: fixed split points
  int histogram_bins = 40;
};

void validate(const RunConfig& config);

/// Fits the model to the cohort and writes <out>/fit.json.
FitResult run_fit(const RunConfig& config);

struct ReportOutcome {
  std::vector<std::filesystem::path> written;
};

/// Runs the full Monte Carlo pipeline and writes the report bundle. Data and
/// fit errors abort before anything is written. Inference errors are
/// collected per stage; the other stages still write their files and the
/// first error (in stage order) is rethrown at the end.
ReportOutcome run_report(const RunConfig& config);

DescriptiveTable run_describe(const RunConfig& config);

/// Fit from --fit-json (its term list defines the model) or a fresh fit of
/// the cohort under --model; returns the model spec resolved against the
/// cohort's covariates.
std::pair<FitResult, ModelSpec> resolve_fit(const RunConfig& config, const Cohort& cohort);

}  // namespace riskint
