// riskint command-line driver: fit, report, describe.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "riskint/errors.hpp"
#include "riskint/format.hpp"
#include "riskint/pipeline.hpp"
#include "riskint/version.hpp"

namespace {

int exit_code(riskint::ErrorCategory c) {
  switch (c) {
    case riskint::ErrorCategory::Usage: return 1;
    case riskint::ErrorCategory::Data: return 2;
    case riskint::ErrorCategory::Fit: return 3;
    case riskint::ErrorCategory::Inference: return 4;
  }
  return 1;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exposure effects and additive interaction from a logistic model"};
  app.set_version_flag("--version", riskint::kSoftware);
  app.require_subcommand(1);

  riskint::RunConfig cfg;
  std::string input, fit_json, covariates, out = ".";
  std::vector<std::string> cuts;
  std::string format = "text";
  std::uint64_t seed = 0;

  auto add_data_flags = [&](CLI::App* sub) {
    sub->add_option("--input", input, "Cohort CSV (header row required)");
    sub->add_option("--outcome", cfg.schema.outcome, "Outcome column")->capture_default_str();
    sub->add_option("--exposure1", cfg.schema.exposure1, "First exposure column")->capture_default_str();
    sub->add_option("--exposure2", cfg.schema.exposure2, "Second exposure column")->capture_default_str();
    sub->add_option("--covariates", covariates,
                    "Comma list of covariate columns (default: all other columns)");
  };

  auto* fit = app.add_subcommand("fit", "Fit the logistic model and write fit.json");
  add_data_flags(fit);
  fit->add_option("--model", cfg.model, "Comma list of terms, e.g. z1,z2,z1*z2,x1,z1*x1")
      ->capture_default_str();
  fit->add_option("--out", out, "Output directory")->capture_default_str();

  auto* report = app.add_subcommand("report", "Monte Carlo effect distribution and reports");
  add_data_flags(report);
  report->add_option("--fit-json", fit_json, "Use this FitResult instead of fitting");
  report->add_option("--model", cfg.model, "Model terms when fitting")->capture_default_str();
  report->add_option("--draws", cfg.n_draws, "Number of parameter draws")->capture_default_str();
  report->add_option("--seed", seed, "RNG seed (required)")->required();
  report->add_option("--alpha", cfg.alpha, "1 - confidence level for regions")->capture_default_str();
  report->add_flag("--allow-jitter", cfg.allow_jitter,
                   "Permit a small diagonal jitter when the covariance is not positive definite");
  report->add_option("--threads", cfg.threads, "Worker threads (0 = all cores)")->capture_default_str();
  report->add_option("--bins", cfg.histogram_bins, "Histogram bins")->capture_default_str();
  report->add_option("--out", out, "Output directory")->capture_default_str();

  auto* desc = app.add_subcommand("describe", "Events/totals by exposure cell");
  add_data_flags(desc);
  desc->add_option("--cut", cuts, "Fixed split for a continuous covariate, e.g. age=67");
  desc->add_option("--format", format, "text or json")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << riskint::usage_error(e.what()).to_json().dump() << "\n";
    return 1;
  }

  try {
    if (!input.empty()) cfg.input = input;
    if (!fit_json.empty()) cfg.fit_json = fit_json;
    cfg.schema.covariates = split_list(covariates);
    cfg.out = out;
    if (report->parsed()) cfg.seed = seed;
    for (const auto& c : cuts) {
      auto eq = c.find('=');
      auto v = eq == std::string::npos ? std::nullopt : riskint::parse_double(c.substr(eq + 1));
      if (!v) throw riskint::usage_error("--cut expects name=value, got '" + c + "'");
      cfg.cuts[c.substr(0, eq)] = *v;
    }

    if (fit->parsed()) {
      auto result = riskint::run_fit(cfg);
      std::cout << "converged in " << result.iterations << " iterations, loglik "
                << result.loglik << "\n";
      for (std::size_t k = 0; k < result.term_names.size(); ++k) {
        const auto idx = static_cast<Eigen::Index>(k);
        std::cout << "  " << result.term_names[k] << " " << result.pi_hat[idx] << " (se "
                  << std::sqrt(result.sigma_hat(idx, idx)) << ")\n";
      }
      std::cout << "wrote " << (cfg.out / "fit.json").string() << "\n";
    } else if (report->parsed()) {
      auto outcome = riskint::run_report(cfg);
      std::cout << "wrote " << outcome.written.size() << " files to " << cfg.out.string() << "\n";
    } else if (desc->parsed()) {
      auto table = riskint::run_describe(cfg);
      if (format == "json") {
        std::cout << table.to_json().dump(2) << "\n";
      } else {
        std::cout << table.to_text();
      }
    }
  } catch (const riskint::Error& e) {
    std::cerr << e.to_json().dump() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", "InternalError"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}
