#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "riskint/effects.hpp"
#include "riskint/glm.hpp"

namespace riskint {

/// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as
/// 1, 2, 3"). Stateless: output is a pure function of key and counter.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  Block operator()(Block counter) const;

 private:
  std::array<std::uint32_t, 2> key_;
};

/// Stream of standard normals for one (seed, draw index) pair. Variate j of
/// draw i never depends on any other draw.
class DrawStream {
 public:
  DrawStream(std::uint64_t seed, std::uint64_t draw_index)
      : rng_(seed), draw_(draw_index) {}

  /// Uniform in the open interval (0, 1) with 53 random bits.
  double uniform(std::uint32_t variate) const;
  double normal(std::uint32_t variate) const;

 private:
  Philox4x32 rng_;
  std::uint64_t draw_;
};

/// Inverse of the standard normal CDF (Wichura, AS241 PPND16).
double normal_quantile(double p);

/// Lower-triangular L with L L' = sigma. Throws NotSymmetric or
/// NotPositiveDefinite (details carry the failing pivot index).
Eigen::MatrixXd cholesky(const Eigen::MatrixXd& sigma);

struct CovarianceFactor {
  Eigen::MatrixXd lower;
  double jitter = 0.0;  // diagonal term added before factoring
  bool degenerate = false;  // sigma was exactly zero
};

/// Factor used for sampling. An all-zero sigma gives a zero factor. A
/// matrix that is not positive definite is repaired only when
/// allow_jitter is set, with the smallest of 1e-10, 1e-9, ..., 1e-6 added
/// to the diagonal that lets the factorization succeed.
CovarianceFactor factor_covariance(const Eigen::MatrixXd& sigma, bool allow_jitter);

struct SamplingOptions {
  bool allow_jitter = false;
  unsigned threads = 1;  // 0 = hardware concurrency
};

/// Parameter draws pi_hat + L z, one row per draw.
Eigen::MatrixXd sample_parameters(const FitResult& fit, std::size_t n_draws,
                                  std::uint64_t seed, const SamplingOptions& options = {});

struct EffectDistribution {
  std::vector<EffectTriple> triples;
  EffectTriple point;  // effect_triple at pi_hat
  std::size_t n_draws = 0;
  std::uint64_t seed = 0;
  double jitter = 0.0;
  std::string source;  // FitResult::identity()

  std::vector<double> values(Effect which) const;

  nlohmann::json metadata() const;
  /// Columns te1,te2,int,draw_index; numbers in shortest round-trip form.
  std::string to_csv() const;
};

EffectDistribution effect_distribution(const FitResult& fit, const ModelSpec& spec,
                                       const StandardizationSet& std_set,
                                       std::size_t n_draws, std::uint64_t seed,
                                       const SamplingOptions& options = {});

}  // namespace riskint
