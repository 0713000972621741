#include <cmath>

#include "doctest.h"
#include "riskint/errors.hpp"
#include "riskint/montecarlo.hpp"
#include "support.hpp"

using namespace riskint;

namespace {

std::string fail_kind(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return "";
}

Eigen::MatrixXd printed_covariance() {
  Eigen::MatrixXd s(8, 8);
  s << 12.25, -11.68, -1.10, 1.08, -0.16, -0.37, -0.10, 0.16,  //
      -11.68, 13.25, 1.10, -1.36, 0.16, 0.04, 0.01, -0.18,      //
      -1.10, 1.10, 0.90, -0.90, 0.01, -0.00, 0.01, -0.01,       //
      1.08, -1.36, -0.90, 1.14, -0.01, 0.02, -0.00, 0.01,       //
      -0.16, 0.16, 0.01, -0.01, 0.00, 0.00, 0.00, -0.00,        //
      -0.37, 0.04, -0.00, 0.02, 0.00, 0.27, -0.03, -0.00,       //
      -0.10, 0.01, 0.01, -0.00, 0.00, -0.03, 0.17, -0.00,       //
      0.16, -0.18, -0.01, 0.01, -0.00, -0.00, -0.00, 0.00;
  return s;
}

FitResult small_fit() {
  FitResult f;
  f.term_names = {"intercept", "z1", "z2", "z1*z2"};
  f.pi_hat = Eigen::Vector4d(-0.5, 0.6, -0.4, 0.3);
  Eigen::MatrixXd a(4, 4);
  a << 0.20, -0.10, -0.10, 0.08,  //
      -0.10, 0.25, 0.07, -0.15,   //
      -0.10, 0.07, 0.22, -0.14,   //
      0.08, -0.15, -0.14, 0.40;
  f.sigma_hat = a;
  f.n = 100;
  return f;
}

}  // namespace

TEST_CASE("Philox4x32-10 known answers") {
  using B = Philox4x32::Block;
  CHECK(Philox4x32(0)(B{0, 0, 0, 0}) == B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32(0xffffffffffffffffULL)(B{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}) ==
        B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32(0x299f31d0a4093822ULL)(B{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}) ==
        B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("inverse normal CDF") {
  CHECK(std::abs(normal_quantile(0.975) - 1.959963984540054) < 1e-14);
  CHECK(std::abs(normal_quantile(1e-10) - (-6.361340902404056)) < 1e-12);
  CHECK(std::abs(normal_quantile(0.3) - (-0.5244005127080409)) < 1e-14);
  CHECK(normal_quantile(0.5) == 0.0);
  // lower half against erfc; the upper half by symmetry
  for (double x = -8.0; x <= 0.0; x += 0.25) {
    const double p = 0.5 * std::erfc(-x / std::sqrt(2.0));
    CHECK(std::abs(normal_quantile(p) - x) < 1e-9 * std::max(1.0, std::abs(x)));
  }
  for (double p : {0.01, 0.2, 0.4375}) CHECK(std::abs(normal_quantile(1.0 - p) + normal_quantile(p)) < 1e-12);
}

TEST_CASE("draw streams are deterministic and uniform in (0, 1)") {
  DrawStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  CHECK(a.normal(3) == b.normal(3));
  CHECK(a.normal(3) != c.normal(3));
  CHECK(a.normal(3) != d.normal(3));
  CHECK(a.uniform(0) != a.uniform(1));
  for (std::uint64_t i = 0; i < 1000; ++i) {
    DrawStream s(1, i);
    for (std::uint32_t v = 0; v < 9; ++v) {
      const double u = s.uniform(v);
      CHECK(u > 0.0);
      CHECK(u < 1.0);
    }
  }
}

TEST_CASE("cholesky") {
  Eigen::Matrix2d s;
  s << 4, 2, 2, 5;
  Eigen::MatrixXd l = cholesky(s);
  CHECK(l(0, 0) == 2.0);
  CHECK(l(0, 1) == 0.0);
  CHECK(l(1, 0) == 1.0);
  CHECK(l(1, 1) == 2.0);

  Eigen::MatrixXd a = small_fit().sigma_hat;
  Eigen::MatrixXd la = cholesky(a);
  CHECK((la * la.transpose() - a).lpNorm<Eigen::Infinity>() < 1e-14);

  Eigen::Matrix2d ns;
  ns << 1, 2, 3, 1;
  CHECK(fail_kind([&] { cholesky(ns); }) == "NotSymmetric");
  Eigen::Matrix2d indef;
  indef << 1, 2, 2, 1;
  try {
    cholesky(indef);
    FAIL("expected NotPositiveDefinite");
  } catch (const Error& e) {
    CHECK(e.kind() == "NotPositiveDefinite");
    CHECK(e.details()["pivot"] == 1);
  }
}

TEST_CASE("printed covariance table is not positive definite, even with jitter") {
  Eigen::MatrixXd s = printed_covariance();
  CHECK(fail_kind([&] { factor_covariance(s, false); }) == "NotPositiveDefinite");
  CHECK(fail_kind([&] { factor_covariance(s, true); }) == "NotPositiveDefinite");
}

TEST_CASE("jitter is opt-in and as small as possible") {
  Eigen::Matrix2d s;
  s << 1, 1, 1, 1;  // rank one
  CHECK(fail_kind([&] { factor_covariance(s, false); }) == "NotPositiveDefinite");
  CovarianceFactor f = factor_covariance(s, true);
  CHECK(f.jitter > 0.0);
  CHECK(f.jitter <= 1e-6);
  CHECK_FALSE(f.degenerate);

  CovarianceFactor z = factor_covariance(Eigen::MatrixXd::Zero(3, 3), false);
  CHECK(z.degenerate);
  CHECK(z.lower.isZero(0.0));
  CHECK(z.jitter == 0.0);
}

TEST_CASE("zero covariance: every draw equals the point") {
  FitResult f = small_fit();
  f.sigma_hat.setZero();
  Eigen::MatrixXd draws = sample_parameters(f, 50, 3);
  for (Eigen::Index i = 0; i < draws.rows(); ++i) CHECK(draws.row(i).transpose() == f.pi_hat);

  ModelSpec spec = ModelSpec::parse("z1,z2,z1*z2", {});
  StandardizationSet one(std::vector<std::vector<double>>{{}});
  EffectDistribution d = effect_distribution(f, spec, one, 20, 3);
  for (const auto& t : d.triples) {
    CHECK(t.te1 == d.point.te1);
    CHECK(t.interaction == d.point.interaction);
  }
}

TEST_CASE("sample mean and covariance converge") {
  FitResult f = small_fit();
  const std::size_t n = 100000;
  Eigen::MatrixXd draws = sample_parameters(f, n, 2024, {false, 0});
  Eigen::VectorXd mean = draws.colwise().mean();
  Eigen::MatrixXd centered = draws.rowwise() - mean.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / double(n - 1);
  for (Eigen::Index k = 0; k < 4; ++k) {
    const double se = std::sqrt(f.sigma_hat(k, k) / n);
    CHECK(std::abs(mean[k] - f.pi_hat[k]) < 5 * se);
  }
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 4; ++j) {
      const double se =
          std::sqrt((f.sigma_hat(i, i) * f.sigma_hat(j, j) + f.sigma_hat(i, j) * f.sigma_hat(i, j)) / n);
      CHECK(std::abs(cov(i, j) - f.sigma_hat(i, j)) < 5 * se);
    }
}

TEST_CASE("draws do not depend on thread count or on the total number of draws") {
  Cohort c = testing::synthetic_cohort(150, {}, 12);
  ModelSpec spec = ModelSpec::parse("z1,z2,z1*z2,x1,x2,z1*x1", c.covariate_names());
  FitResult f = fit_cohort(c, spec);
  StandardizationSet set(c);
  EffectDistribution d1 = effect_distribution(f, spec, set, 2000, 77, {false, 1});
  EffectDistribution d4 = effect_distribution(f, spec, set, 2000, 77, {false, 4});
  EffectDistribution d7 = effect_distribution(f, spec, set, 2000, 77, {false, 7});
  CHECK(d1.to_csv() == d4.to_csv());
  CHECK(d1.to_csv() == d7.to_csv());
  EffectDistribution prefix = effect_distribution(f, spec, set, 500, 77, {false, 3});
  CHECK(d1.to_csv().substr(0, prefix.to_csv().size()) == prefix.to_csv());
  EffectDistribution other = effect_distribution(f, spec, set, 2000, 78, {false, 1});
  CHECK(other.to_csv() != d1.to_csv());
  CHECK(d1.metadata()["seed"] == 77);
  CHECK(d1.metadata()["n_draws"] == 2000);
}
