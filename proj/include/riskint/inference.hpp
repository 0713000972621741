#pragma once

#include <array>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "riskint/effects.hpp"
#include "riskint/glm.hpp"
#include "riskint/montecarlo.hpp"

namespace riskint {

using Interval = std::pair<double, double>;

/// Empirical quantile interpolated at rank h = (n - 1) p + 1 of the sorted
/// sample.
double quantile(std::vector<double> samples, double p);
/// Same, for an already sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double p);

/// Equal-tail interval: alpha/2 cut from each side.
Interval percentile_ci(std::vector<double> samples, double alpha);

struct IntervalEstimate {
  double point = 0.0;
  Interval ci50{0.0, 0.0};
  Interval ci95{0.0, 0.0};
  std::size_t count = 0;

  nlohmann::json to_json() const;
};

/// Point from the plug-in estimate at pi_hat, intervals from the draws.
IntervalEstimate marginal_report(const EffectDistribution& dist, Effect which);

class ConfidenceEllipse {
 public:
  ConfidenceEllipse(Eigen::Vector2d center, Eigen::Matrix2d shape, double alpha);

  const Eigen::Vector2d& center() const { return center_; }
  const Eigen::Matrix2d& shape() const { return shape_; }
  double alpha() const { return alpha_; }
  double level() const { return 1.0 - alpha_; }
  /// Chi-square(2) quantile at 1 - alpha, which is -2 ln(alpha).
  double quantile() const { return quantile_; }

  double mahalanobis2(const Eigen::Vector2d& q) const;
  bool contains(const Eigen::Vector2d& q) const { return mahalanobis2(q) <= quantile_; }

  /// Semi-axis lengths (major first) and the major-axis angle in radians.
  struct Axes {
    double major;
    double minor;
    double angle;
  };
  Axes axes() const;

  /// Closed boundary sampled at `points` equally spaced angles.
  std::vector<Eigen::Vector2d> polyline(int points = 64) const;

  nlohmann::json to_json() const;

 private:
  Eigen::Vector2d center_;
  Eigen::Matrix2d shape_;
  Eigen::Matrix2d shape_inv_;
  double alpha_;
  double quantile_;
};

/// Smallest-area region under the normal approximation: center and shape
/// are the sample mean and covariance of the pairs.
ConfidenceEllipse confidence_ellipse(const std::vector<Eigen::Vector2d>& pairs, double alpha);

struct TercileReport {
  Effect conditioning = Effect::TE1;
  std::array<double, 2> boundaries{};
  std::array<IntervalEstimate, 3> strata{};
  /// INT draws in each stratum, in draw order.
  std::array<std::vector<double>, 3> draws{};

  nlohmann::json to_json() const;
};

/// Strata (-inf, q1/3], (q1/3, q2/3], (q2/3, inf) of the conditioning
/// effect; per stratum the INT draw mean and its percentile intervals.
TercileReport tercile_report(const EffectDistribution& dist, Effect conditioning);

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges
  std::vector<std::size_t> counts;
};

/// Equal-width bins over [lo, hi]; values on the top edge go to the last bin.
Histogram histogram(const std::vector<double>& values, double lo, double hi, int bins);

struct DeltaVariances {
  double te1 = 0.0;
  double te2 = 0.0;
  double interaction = 0.0;
};

/// g' Sigma g with g the central finite-difference gradient of f at x.
double delta_variance(const std::function<double(const Eigen::VectorXd&)>& f,
                      const Eigen::VectorXd& x, const Eigen::MatrixXd& sigma,
                      double step = 1e-5);

/// Delta-method variances of TE1, TE2 and INT at pi_hat.
DeltaVariances delta_method_check(const FitResult& fit, const ModelSpec& spec,
                                  const StandardizationSet& std_set, double step = 1e-5);

}  // namespace riskint
