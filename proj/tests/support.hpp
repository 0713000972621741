#pragma once

// Synthetic cohorts for tests. Uses std::mt19937_64, independent of the
// library's Philox streams.

#include <cmath>
#include <random>
#include <vector>

#include "riskint/dataset.hpp"

namespace riskint::testing {

struct Truth {
  // logit pr(y=1 | z, x) = alpha + b1 z1 + b2 z2 + b3 z1 z2 + t1 x1 + t2 x2 + t4 z1 x1
  double alpha = -0.3, b1 = 0.8, b2 = -0.6, b3 = 0.4, t1 = 0.5, t2 = -0.4, t4 = 0.3;
  // exposure assignment depends on x1 unless randomized
  bool randomized = false;
};

inline double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }

inline Cohort synthetic_cohort(std::size_t n, const Truth& t, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> norm(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<SubjectRecord> recs;
  recs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SubjectRecord r;
    const double x1 = norm(gen);
    const double x2 = unif(gen) < 0.5 ? 1.0 : 0.0;
    const double p1 = t.randomized ? 0.5 : logistic(0.7 * x1);
    const double p2 = t.randomized ? 0.5 : logistic(-0.5 * x1 + 0.3 * x2);
    r.z1 = unif(gen) < p1 ? 1 : 0;
    r.z2 = unif(gen) < p2 ? 1 : 0;
    const double eta = t.alpha + t.b1 * r.z1 + t.b2 * r.z2 + t.b3 * r.z1 * r.z2 + t.t1 * x1 +
                       t.t2 * x2 + t.t4 * r.z1 * x1;
    r.y = unif(gen) < logistic(eta) ? 1 : 0;
    r.x = {x1, x2};
    recs.push_back(std::move(r));
  }
  return Cohort(std::move(recs), {"x1", "x2"});
}

}  // namespace riskint::testing
