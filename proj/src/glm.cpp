#include "riskint/glm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "riskint/effects.hpp"
#include "riskint/errors.hpp"

namespace riskint {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

Error invalid_model(const std::string& msg) {
  return data_error("InvalidModel", msg);
}

// log(1 + exp(eta)) without overflow.
double softplus(double eta) {
  return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

}  // namespace

ModelSpec::ModelSpec(std::vector<Term> terms, std::vector<std::string> covariate_names)
    : terms_(std::move(terms)), covariate_names_(std::move(covariate_names)) {
  for (auto required : {TermKind::Intercept, TermKind::Exposure1, TermKind::Exposure2}) {
    bool found = std::any_of(terms_.begin(), terms_.end(),
                             [&](const Term& t) { return t.kind == required; });
    if (!found) {
      throw invalid_model("model must contain the intercept, z1 and z2");
    }
  }
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const auto& t = terms_[i];
    if ((t.kind == TermKind::Covariate || t.kind == TermKind::ExposureCovariateProduct) &&
        t.covariate >= covariate_names_.size()) {
      throw data_error("BadCovariateIndex",
                       "term " + std::to_string(i) + " refers to covariate " +
                           std::to_string(t.covariate) + " but only " +
                           std::to_string(covariate_names_.size()) + " exist",
                       {{"term", i}, {"covariate", t.covariate}});
    }
    if (t.kind == TermKind::ExposureCovariateProduct && t.exposure != 1 && t.exposure != 2) {
      throw invalid_model("exposure-covariate product must use exposure 1 or 2");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (terms_[j] == t) throw invalid_model("duplicate term '" + term_name(i) + "'");
    }
  }
}

ModelSpec ModelSpec::parse(const std::string& text,
                           const std::vector<std::string>& covariate_names) {
  auto covariate = [&](const std::string& name) -> std::size_t {
    auto it = std::find(covariate_names.begin(), covariate_names.end(), name);
    if (it == covariate_names.end()) {
      throw data_error("BadCovariateIndex", "model term refers to unknown covariate '" + name + "'",
                       {{"covariate", name}});
    }
    return static_cast<std::size_t>(it - covariate_names.begin());
  };

  std::vector<Term> terms{{TermKind::Intercept}};
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    if (tok == "1" || tok == "intercept") continue;
    auto star = tok.find('*');
    if (star == std::string::npos) {
      if (tok == "z1") {
        terms.push_back({TermKind::Exposure1});
      } else if (tok == "z2") {
        terms.push_back({TermKind::Exposure2});
      } else {
        terms.push_back({TermKind::Covariate, 0, covariate(tok)});
      }
      continue;
    }
    std::string a = trim(tok.substr(0, star));
    std::string b = trim(tok.substr(star + 1));
    if (b.find('*') != std::string::npos) {
      throw invalid_model("only two-way products are supported: '" + tok + "'");
    }
    if ((a == "z1" && b == "z2") || (a == "z2" && b == "z1")) {
      terms.push_back({TermKind::ExposureProduct});
    } else if (a == "z1" || a == "z2") {
      terms.push_back({TermKind::ExposureCovariateProduct, a == "z1" ? 1 : 2, covariate(b)});
    } else if (b == "z1" || b == "z2") {
      terms.push_back({TermKind::ExposureCovariateProduct, b == "z1" ? 1 : 2, covariate(a)});
    } else {
      throw invalid_model("covariate-covariate products are not supported: '" + tok + "'");
    }
  }
  return ModelSpec(std::move(terms), covariate_names);
}

std::string ModelSpec::term_name(std::size_t k) const {
  const auto& t = terms_.at(k);
  switch (t.kind) {
    case TermKind::Intercept: return "intercept";
    case TermKind::Exposure1: return "z1";
    case TermKind::Exposure2: return "z2";
    case TermKind::ExposureProduct: return "z1*z2";
    case TermKind::Covariate: return covariate_names_[t.covariate];
    case TermKind::ExposureCovariateProduct:
      return (t.exposure == 1 ? "z1*" : "z2*") + covariate_names_[t.covariate];
  }
  return "?";
}

std::vector<std::string> ModelSpec::term_names() const {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < terms_.size(); ++k) names.push_back(term_name(k));
  return names;
}

std::string ModelSpec::to_string() const {
  std::string out;
  for (std::size_t k = 0; k < terms_.size(); ++k) {
    if (terms_[k].kind == TermKind::Intercept) continue;
    if (!out.empty()) out += ",";
    out += term_name(k);
  }
  return out;
}

double ModelSpec::linear_predictor(const Eigen::VectorXd& coef, int z1, int z2,
                                   const std::vector<double>& x) const {
  double eta = 0.0;
  for (std::size_t k = 0; k < terms_.size(); ++k) {
    eta += coef[static_cast<Eigen::Index>(k)] * terms_[k].evaluate(z1, z2, x);
  }
  return eta;
}

Eigen::MatrixXd build_design(const Cohort& cohort, const ModelSpec& spec) {
  if (spec.covariate_names().size() > cohort.covariate_count()) {
    throw data_error("BadCovariateIndex", "model expects more covariates than the cohort has");
  }
  for (const auto& t : spec.terms()) {
    if ((t.kind == TermKind::Covariate || t.kind == TermKind::ExposureCovariateProduct) &&
        t.covariate >= cohort.covariate_count()) {
      throw data_error("BadCovariateIndex",
                       "covariate index " + std::to_string(t.covariate) + " out of range",
                       {{"covariate", t.covariate}});
    }
  }
  const auto n = static_cast<Eigen::Index>(cohort.size());
  const auto k = static_cast<Eigen::Index>(spec.size());
  Eigen::MatrixXd X(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = cohort.records()[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < k; ++j) {
      X(i, j) = spec.terms()[static_cast<std::size_t>(j)].evaluate(r.z1, r.z2, r.x);
    }
  }
  return X;
}

Eigen::VectorXd outcome_vector(const Cohort& cohort) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(cohort.size()));
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    y[static_cast<Eigen::Index>(i)] = cohort.records()[i].y;
  }
  return y;
}

double logistic_loglik(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& coef) {
  Eigen::VectorXd eta = design * coef;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y[i] * eta[i] - softplus(eta[i]);
  return ll;
}

LogisticLikelihood logistic_likelihood(const Eigen::MatrixXd& design,
                                       const Eigen::VectorXd& y,
                                       const Eigen::VectorXd& coef) {
  Eigen::VectorXd eta = design * coef;
  Eigen::VectorXd resid(eta.size());
  Eigen::VectorXd w(eta.size());
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double mu = expit(eta[i]);
    ll += y[i] * eta[i] - softplus(eta[i]);
    resid[i] = y[i] - mu;
    w[i] = mu * (1.0 - mu);
  }
  // Under the canonical logit link the Hessian does not involve y, so the
  // observed information equals X' W X.
  Eigen::MatrixXd info = design.transpose() * w.asDiagonal() * design;
  return {ll, design.transpose() * resid, 0.5 * (info + info.transpose())};
}

FitResult fit_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                       const FitOptions& options) {
  const auto n = design.rows();
  const auto k = design.cols();
  if (y.size() != n) {
    throw fit_error("DimensionMismatch", "outcome length does not match design rows");
  }
  if (n < k) {
    throw fit_error("RankDeficientDesign",
                    "fewer observations (" + std::to_string(n) + ") than terms (" +
                        std::to_string(k) + ")");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) {
      throw data_error("NonBinaryValue", "outcome must be 0 or 1", {{"row", i + 1}});
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(options.rank_tolerance);
  if (qr.rank() < k) {
    throw fit_error("RankDeficientDesign",
                    "design has rank " + std::to_string(qr.rank()) + " < " + std::to_string(k),
                    {{"rank", qr.rank()}, {"columns", k}});
  }

  Eigen::VectorXd coef = Eigen::VectorXd::Zero(k);
  LogisticLikelihood cur = logistic_likelihood(design, y, coef);
  double deviance = -2.0 * cur.loglik;
  bool converged = false;
  int iter = 0;
  int polish = 0;  // extra Newton steps once the deviance has settled

  while (iter < options.max_iterations) {
    ++iter;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(cur.information);
    Eigen::VectorXd step = ldlt.solve(cur.score);
    if (!step.allFinite()) {
      throw fit_error("SeparationDetected", "information matrix became singular",
                      {{"iteration", iter}});
    }
    Eigen::VectorXd next = coef + step;
    double next_ll = logistic_loglik(design, y, next);
    // near the optimum the loglik change is below rounding; do not halve on noise
    const double slack = 1e-12 * (1.0 + std::abs(cur.loglik));
    for (int halving = 0; halving < 30 && !(next_ll >= cur.loglik - slack); ++halving) {
      step *= 0.5;
      next = coef + step;
      next_ll = logistic_loglik(design, y, next);
    }
    coef = next;
    if (coef.cwiseAbs().maxCoeff() > options.separation_bound) {
      throw fit_error("SeparationDetected",
                      "a coefficient exceeded " + std::to_string(options.separation_bound) +
                          " on the logit scale",
                      {{"iteration", iter}, {"max_abs_coefficient", coef.cwiseAbs().maxCoeff()}});
    }
    cur = logistic_likelihood(design, y, coef);
    const double next_deviance = -2.0 * cur.loglik;
    const double rel = std::abs(deviance - next_deviance) / (std::abs(next_deviance) + 0.1);
    deviance = next_deviance;
    if (rel < options.deviance_tolerance) {
      if (cur.score.lpNorm<Eigen::Infinity>() < options.score_tolerance || ++polish > 3) {
        converged = true;
        break;
      }
    }
  }
  if (!converged) {
    throw fit_error("NotConverged",
                    "no convergence after " + std::to_string(options.max_iterations) +
                        " iterations",
                    {{"iterations", iter}});
  }

  Eigen::LDLT<Eigen::MatrixXd> ldlt(cur.information);
  Eigen::MatrixXd sigma = ldlt.solve(Eigen::MatrixXd::Identity(k, k));
  sigma = 0.5 * (sigma + sigma.transpose());

  FitResult fit;
  fit.pi_hat = coef;
  fit.sigma_hat = sigma;
  fit.loglik = cur.loglik;
  fit.iterations = iter;
  fit.converged = converged;
  fit.n = static_cast<std::size_t>(n);
  fit.source = "fit";
  for (Eigen::Index j = 0; j < k; ++j) fit.term_names.push_back("b" + std::to_string(j));
  return fit;
}

FitResult fit_cohort(const Cohort& cohort, const ModelSpec& spec, const FitOptions& options) {
  FitResult fit = fit_logistic(build_design(cohort, spec), outcome_vector(cohort), options);
  fit.term_names = spec.term_names();
  return fit;
}

nlohmann::json FitResult::to_json() const {
  nlohmann::json j;
  j["terms"] = term_names;
  j["coefficients"] = std::vector<double>(pi_hat.data(), pi_hat.data() + pi_hat.size());
  nlohmann::json cov = nlohmann::json::array();
  for (Eigen::Index r = 0; r < sigma_hat.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < sigma_hat.cols(); ++c) row.push_back(sigma_hat(r, c));
    cov.push_back(std::move(row));
  }
  j["covariance"] = std::move(cov);
  if (std::isfinite(loglik)) {
    j["loglik"] = loglik;
  } else {
    j["loglik"] = nullptr;
  }
  j["iterations"] = iterations;
  j["converged"] = converged;
  j["n"] = n;
  j["source"] = source;
  j["identity"] = identity();
  return j;
}

FitResult FitResult::from_json(const nlohmann::json& j) {
  auto bad = [](const std::string& msg) { return data_error("InvalidFitJson", msg); };
  try {
    FitResult fit;
    fit.term_names = j.at("terms").get<std::vector<std::string>>();
    auto coef = j.at("coefficients").get<std::vector<double>>();
    const auto k = static_cast<Eigen::Index>(coef.size());
    if (static_cast<std::size_t>(k) != fit.term_names.size()) {
      throw bad("terms and coefficients differ in length");
    }
    fit.pi_hat = Eigen::Map<Eigen::VectorXd>(coef.data(), k);

    const auto& cov = j.at("covariance");
    fit.sigma_hat.resize(k, k);
    if (cov.size() == static_cast<std::size_t>(k * k) && !cov.empty() && cov[0].is_number()) {
      for (Eigen::Index r = 0; r < k; ++r)
        for (Eigen::Index c = 0; c < k; ++c)
          fit.sigma_hat(r, c) = cov[static_cast<std::size_t>(r * k + c)].get<double>();
    } else if (cov.size() == static_cast<std::size_t>(k)) {
      for (Eigen::Index r = 0; r < k; ++r) {
        auto row = cov[static_cast<std::size_t>(r)].get<std::vector<double>>();
        if (row.size() != static_cast<std::size_t>(k)) throw bad("covariance row has wrong length");
        for (Eigen::Index c = 0; c < k; ++c) fit.sigma_hat(r, c) = row[static_cast<std::size_t>(c)];
      }
    } else {
      throw bad("covariance must be k x k (nested rows or flat row-major)");
    }
    const double scale = std::max(1.0, fit.sigma_hat.cwiseAbs().maxCoeff());
    if ((fit.sigma_hat - fit.sigma_hat.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
      throw bad("covariance is not symmetric");
    }
    if ((fit.sigma_hat.diagonal().array() < 0.0).any()) {
      throw bad("covariance has a negative diagonal entry");
    }
    if (j.contains("loglik") && j["loglik"].is_number()) fit.loglik = j["loglik"].get<double>();
    fit.iterations = j.value("iterations", 0);
    fit.converged = j.value("converged", true);
    fit.n = j.value("n", std::size_t{0});
    fit.source = j.value("source", std::string("json"));
    return fit;
  } catch (const nlohmann::json::exception& e) {
    throw bad(std::string("malformed fit JSON: ") + e.what());
  }
}

std::string FitResult::identity() const {
  // FNV-1a over names and raw IEEE bytes.
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& t : term_names) mix(t.data(), t.size() + 1);
  mix(pi_hat.data(), sizeof(double) * static_cast<std::size_t>(pi_hat.size()));
  mix(sigma_hat.data(), sizeof(double) * static_cast<std::size_t>(sigma_hat.size()));
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

FitResult load_fit(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw data_error("FileNotFound", "cannot open '" + path.string() + "'", {{"path", path.string()}});
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw data_error("InvalidFitJson", std::string("cannot parse fit JSON: ") + e.what());
  }
  return FitResult::from_json(j);
}

void save_fit(const FitResult& fit, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw data_error("WriteFailed", "cannot write '" + path.string() + "'");
  out << fit.to_json().dump(2) << "\n";
}

double chi2_upper_tail(double x, double df) {
  if (!(df > 0)) throw usage_error("chi-square degrees of freedom must be positive");
  if (x <= 0.0) return 1.0;
  if (df == 2.0) return std::exp(-0.5 * x);
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

LrTest lr_test(const FitResult& full, const FitResult& reduced, int df) {
  if (df < 1) throw usage_error("likelihood-ratio df must be at least 1");
  if (!std::isfinite(full.loglik) || !std::isfinite(reduced.loglik)) {
    throw fit_error("MissingLoglik", "both fits need a finite log-likelihood");
  }
  double stat = 2.0 * (full.loglik - reduced.loglik);
  if (stat < -1e-8) {
    throw fit_error("NegativeStatisticBeyondTolerance",
                    "likelihood-ratio statistic is negative; models are not nested or a fit "
                    "did not converge",
                    {{"statistic", stat}});
  }
  stat = std::max(stat, 0.0);
  return {stat, static_cast<double>(df), chi2_upper_tail(stat, df)};
}

}  // namespace riskint
