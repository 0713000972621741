#include "riskint/effects.hpp"

#include <stdexcept>
#include <string>

#include "riskint/errors.hpp"

namespace riskint {

namespace {

void check_dimension(const Eigen::VectorXd& coef, const ModelSpec& spec) {
  if (static_cast<std::size_t>(coef.size()) != spec.size()) {
    throw data_error("DimensionMismatch",
                     "coefficient vector has " + std::to_string(coef.size()) +
                         " entries, model has " + std::to_string(spec.size()) + " terms");
  }
}

}  // namespace

StandardizationSet::StandardizationSet(const Cohort& cohort) {
  rows_.reserve(cohort.size());
  for (const auto& r : cohort.records()) rows_.push_back(r.x);
}

StandardizationSet::StandardizationSet(std::vector<std::vector<double>> rows)
    : rows_(std::move(rows)) {
  if (rows_.empty()) throw data_error("EmptyFile", "standardization set has no rows");
}

const char* effect_name(Effect which) {
  switch (which) {
    case Effect::TE1: return "te1";
    case Effect::TE2: return "te2";
    case Effect::INT: return "int";
  }
  return "?";
}

double risk(const Eigen::VectorXd& coef, const ModelSpec& spec, int z1, int z2,
            const std::vector<double>& x) {
  check_dimension(coef, spec);
  if (x.size() < spec.covariate_names().size()) {
    throw data_error("DimensionMismatch", "covariate vector is shorter than the model expects");
  }
  return expit(spec.linear_predictor(coef, z1, z2, x));
}

double marginal_risk(const Eigen::VectorXd& coef, const ModelSpec& spec, int z1, int z2,
                     const StandardizationSet& std_set) {
  check_dimension(coef, spec);
  const std::size_t need = spec.covariate_names().size();
  for (const auto& x : std_set.rows()) {
    if (x.size() < need) {
      throw data_error("DimensionMismatch", "standardization row is shorter than the model expects");
    }
  }
  double sum = 0.0;
  for (const auto& x : std_set.rows()) sum += expit(spec.linear_predictor(coef, z1, z2, x));
  return sum / static_cast<double>(std_set.size());
}

EffectTriple effect_triple(const Eigen::VectorXd& coef, const ModelSpec& spec,
                           const StandardizationSet& std_set) {
  const double r00 = marginal_risk(coef, spec, 0, 0, std_set);
  const double r10 = marginal_risk(coef, spec, 1, 0, std_set);
  const double r01 = marginal_risk(coef, spec, 0, 1, std_set);
  const double r11 = marginal_risk(coef, spec, 1, 1, std_set);

  EffectTriple t;
  t.te1 = r10 - r00;
  t.te2 = r01 - r00;
  const double via_te1 = (r11 - r01) - t.te1;
  const double via_te2 = (r11 - r10) - t.te2;
  if (std::abs(via_te1 - via_te2) > 1e-12) {
    throw std::logic_error("interaction identity violated: " + std::to_string(via_te1) +
                           " vs " + std::to_string(via_te2));
  }
  t.interaction = via_te1;
  return t;
}

}  // namespace riskint
