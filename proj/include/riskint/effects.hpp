#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "riskint/dataset.hpp"
#include "riskint/glm.hpp"

namespace riskint {

/// Logistic function, clamped to the open interval (0, 1) so that risks
/// stay strictly inside it even when exp() saturates.
inline double expit(double eta) {
  constexpr double kLo = std::numeric_limits<double>::min();
  constexpr double kHi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  double p;
  if (eta >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-eta));
  } else {
    const double e = std::exp(eta);
    p = e / (1.0 + e);
  }
  return p < kLo ? kLo : (p > kHi ? kHi : p);
}

/// The empirical covariate distribution: every subject's covariate vector
/// with uniform weight 1/n, duplicates kept.
class StandardizationSet {
 public:
  explicit StandardizationSet(const Cohort& cohort);
  explicit StandardizationSet(std::vector<std::vector<double>> rows);

  const std::vector<std::vector<double>>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  double weight() const { return 1.0 / static_cast<double>(rows_.size()); }

 private:
  std::vector<std::vector<double>> rows_;
};

struct EffectTriple {
  double te1 = 0.0;
  double te2 = 0.0;
  double interaction = 0.0;
};

enum class Effect { TE1, TE2, INT };

inline double effect_value(const EffectTriple& t, Effect which) {
  switch (which) {
    case Effect::TE1: return t.te1;
    case Effect::TE2: return t.te2;
    case Effect::INT: return t.interaction;
  }
  return 0.0;
}

const char* effect_name(Effect which);

/// pr(y = 1 | z1, z2, x) under the logistic model.
double risk(const Eigen::VectorXd& coef, const ModelSpec& spec, int z1, int z2,
            const std::vector<double>& x);

/// Standardized risk: risk averaged over the standardization rows.
double marginal_risk(const Eigen::VectorXd& coef, const ModelSpec& spec, int z1, int z2,
                     const StandardizationSet& std_set);

/// TE1, TE2 and INT at one parameter vector. INT is evaluated through TE1
/// and through TE2; the two must agree to 1e-12.
EffectTriple effect_triple(const Eigen::VectorXd& coef, const ModelSpec& spec,
                           const StandardizationSet& std_set);

}  // namespace riskint
