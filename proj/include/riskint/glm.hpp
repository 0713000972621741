#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "riskint/dataset.hpp"

namespace riskint {

enum class TermKind {
  Intercept,
  Exposure1,
  Exposure2,
  ExposureProduct,
  Covariate,
  ExposureCovariateProduct,
};

struct Term {
  TermKind kind = TermKind::Intercept;
  int exposure = 0;           // 1 or 2, ExposureCovariateProduct only
  std::size_t covariate = 0;  // Covariate / ExposureCovariateProduct only

  /// Value of this term for one subject at exposure level (z1, z2).
  double evaluate(int z1, int z2, const std::vector<double>& x) const {
    switch (kind) {
      case TermKind::Intercept: return 1.0;
      case TermKind::Exposure1: return z1;
      case TermKind::Exposure2: return z2;
      case TermKind::ExposureProduct: return z1 * z2;
      case TermKind::Covariate: return x[covariate];
      case TermKind::ExposureCovariateProduct:
        return (exposure == 1 ? z1 : z2) * x[covariate];
    }
    return 0.0;
  }

  friend bool operator==(const Term&, const Term&) = default;
};

/// Ordered term list defining the design matrix. Intercept, z1 and z2 are
/// always present and terms are unique.
class ModelSpec {
 public:
  ModelSpec(std::vector<Term> terms, std::vector<std::string> covariate_names);

  /// Parses "z1,z2,z1*z2,x1,x2,x3,z1*x1". The intercept is implicit; an
  /// explicit "1" or "intercept" token is accepted and ignored.
  static ModelSpec parse(const std::string& text,
                         const std::vector<std::string>& covariate_names);

  const std::vector<Term>& terms() const { return terms_; }
  const std::vector<std::string>& covariate_names() const { return covariate_names_; }
  std::size_t size() const { return terms_.size(); }

  std::string term_name(std::size_t k) const;
  std::vector<std::string> term_names() const;
  /// Comma list without the intercept, the inverse of parse().
  std::string to_string() const;

  /// Linear predictor for one subject.
  double linear_predictor(const Eigen::VectorXd& coef, int z1, int z2,
                          const std::vector<double>& x) const;

 private:
  std::vector<Term> terms_;
  std::vector<std::string> covariate_names_;
};

struct FitResult {
  std::vector<std::string> term_names;
  Eigen::VectorXd pi_hat;
  Eigen::MatrixXd sigma_hat;
  double loglik = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = false;
  std::size_t n = 0;
  std::string source;  // "fit" or a fixture description

  nlohmann::json to_json() const;
  static FitResult from_json(const nlohmann::json& j);
  /// Stable hex digest of terms, coefficients and covariance.
  std::string identity() const;
};

FitResult load_fit(const std::filesystem::path& path);
void save_fit(const FitResult& fit, const std::filesystem::path& path);

/// n x k matrix whose column k is term k evaluated per record.
Eigen::MatrixXd build_design(const Cohort& cohort, const ModelSpec& spec);

struct FitOptions {
  int max_iterations = 100;
  double deviance_tolerance = 1e-10;
  // after the deviance settles, up to 3 more steps while the score exceeds this
  double score_tolerance = 1e-10;
  double separation_bound = 15.0;
  double rank_tolerance = 1e-10;
};

/// Bernoulli log-likelihood under the logit link, its gradient and the
/// observed information (negative Hessian).
struct LogisticLikelihood {
  double loglik;
  Eigen::VectorXd score;
  Eigen::MatrixXd information;
};

LogisticLikelihood logistic_likelihood(const Eigen::MatrixXd& design,
                                       const Eigen::VectorXd& y,
                                       const Eigen::VectorXd& coef);

double logistic_loglik(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& coef);

/// Newton-Raphson with step halving. Throws RankDeficientDesign,
/// SeparationDetected or NotConverged.
FitResult fit_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                       const FitOptions& options = {});

FitResult fit_cohort(const Cohort& cohort, const ModelSpec& spec,
                     const FitOptions& options = {});

Eigen::VectorXd outcome_vector(const Cohort& cohort);

/// Upper tail P(X > x) of a chi-square variable with df degrees of freedom.
double chi2_upper_tail(double x, double df);

struct LrTest {
  double statistic;
  double df;
  double p_value;
};

/// 2 (loglik_full - loglik_reduced), clamped at zero, against chi-square(df).
LrTest lr_test(const FitResult& full, const FitResult& reduced, int df);

}  // namespace riskint
