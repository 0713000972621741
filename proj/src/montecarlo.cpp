#include "riskint/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <thread>

#include "riskint/errors.hpp"
#include "riskint/format.hpp"

namespace riskint {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53;
constexpr std::uint32_t kMul1 = 0xCD9E8D57;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

double eval_poly(const double* c, int n, double x) {
  double r = c[n - 1];
  for (int i = n - 2; i >= 0; --i) r = r * x + c[i];
  return r;
}

// Runs body(begin, end) over [0, n) split into contiguous chunks.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t b = t * chunk;
    const std::size_t e = std::min(n, b + chunk);
    pool.emplace_back([&, b, e, t] {
      try {
        if (b < e) body(b, e);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

}  // namespace

Philox4x32::Block Philox4x32::operator()(Block ctr) const {
  std::array<std::uint32_t, 2> key = key_;
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

double DrawStream::uniform(std::uint32_t variate) const {
  // One 128-bit block yields two 64-bit words; variate j uses word j % 2 of
  // block j / 2.
  const Philox4x32::Block out = rng_({static_cast<std::uint32_t>(draw_),
                                      static_cast<std::uint32_t>(draw_ >> 32),
                                      variate / 2, 0x52495349u});
  const std::size_t w = (variate % 2) * 2;
  const std::uint64_t bits = (static_cast<std::uint64_t>(out[w]) << 32) | out[w + 1];
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double DrawStream::normal(std::uint32_t variate) const {
  return normal_quantile(uniform(variate));
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw std::domain_error("normal_quantile: p outside [0, 1]");
  }
  static constexpr double a[] = {3.3871328727963666080e0, 1.3314166789178437745e2,
                                 1.9715909503065514427e3, 1.3731693765509461125e4,
                                 4.5921953931549871457e4, 6.7265770927008700853e4,
                                 3.3430575583588128105e4, 2.5090809287301226727e3};
  static constexpr double b[] = {1.0,
                                 4.2313330701600911252e1, 6.8718700749205790830e2,
                                 5.3941960214247511077e3, 2.1213794301586595867e4,
                                 3.9307895800092710610e4, 2.8729085735721942674e4,
                                 5.2264952788528545610e3};
  static constexpr double c[] = {1.42343711074968357734e0, 4.63033784615654529590e0,
                                 5.76949722146069140550e0, 3.64784832476320460504e0,
                                 1.27045825245236838258e0, 2.41780725177450611770e-1,
                                 2.27238449892691845833e-2, 7.74545014278341407640e-4};
  static constexpr double d[] = {1.0,
                                 2.05319162663775882187e0, 1.67638483018380384940e0,
                                 6.89767334985100004550e-1, 1.48103976427480074590e-1,
                                 1.51986665636164571966e-2, 5.47593808499534494600e-4,
                                 1.05075007164441684324e-9};
  static constexpr double e[] = {6.65790464350110377720e0, 5.46378491116411436990e0,
                                 1.78482653991729133580e0, 2.96560571828504891230e-1,
                                 2.65321895265761230930e-2, 1.24266094738807843860e-3,
                                 2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static constexpr double f[] = {1.0,
                                 5.99832206555887937690e-1, 1.36929880922735805310e-1,
                                 1.48753612908506148525e-2, 7.86869131145613259100e-4,
                                 1.84631831751005468180e-5, 1.42151175831644588870e-7,
                                 2.04426310338993978564e-15};

  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * eval_poly(a, 8, r) / eval_poly(b, 8, r);
  }
  double r = q < 0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = eval_poly(c, 8, r) / eval_poly(d, 8, r);
  } else {
    r -= 5.0;
    val = eval_poly(e, 8, r) / eval_poly(f, 8, r);
  }
  return q < 0 ? -val : val;
}

Eigen::MatrixXd cholesky(const Eigen::MatrixXd& sigma) {
  const auto k = sigma.rows();
  if (sigma.cols() != k) throw data_error("NotSquare", "covariance matrix must be square");
  const double scale = std::max(1e-300, sigma.cwiseAbs().maxCoeff());
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw fit_error("NotSymmetric", "covariance matrix is not symmetric");
  }
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    double d = sigma(j, j);
    for (Eigen::Index m = 0; m < j; ++m) d -= L(j, m) * L(j, m);
    if (!(d > 0.0)) {
      throw fit_error("NotPositiveDefinite",
                      "leading minor " + std::to_string(j + 1) + " is not positive",
                      {{"pivot", j}, {"value", d}});
    }
    const double ljj = std::sqrt(d);
    L(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < k; ++i) {
      double s = sigma(i, j);
      for (Eigen::Index m = 0; m < j; ++m) s -= L(i, m) * L(j, m);
      L(i, j) = s / ljj;
    }
  }
  return L;
}

CovarianceFactor factor_covariance(const Eigen::MatrixXd& sigma, bool allow_jitter) {
  CovarianceFactor out;
  if (sigma.size() > 0 && (sigma.array() == 0.0).all()) {
    out.lower = Eigen::MatrixXd::Zero(sigma.rows(), sigma.cols());
    out.degenerate = true;
    return out;
  }
  try {
    out.lower = cholesky(sigma);
    return out;
  } catch (const Error& e) {
    if (e.kind() != "NotPositiveDefinite" || !allow_jitter) throw;
  }
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols());
  for (double jitter : {1e-10, 1e-9, 1e-8, 1e-7, 1e-6}) {
    try {
      out.lower = cholesky(sigma + jitter * I);
      out.jitter = jitter;
      return out;
    } catch (const Error& e) {
      if (e.kind() != "NotPositiveDefinite") throw;
    }
  }
  throw fit_error("NotPositiveDefinite",
                  "covariance is not positive definite even with diagonal jitter 1e-6",
                  {{"max_jitter", 1e-6}});
}

namespace {

Eigen::VectorXd draw_one(const Eigen::VectorXd& mean, const Eigen::MatrixXd& lower,
                         std::uint64_t seed, std::uint64_t index) {
  const DrawStream stream(seed, index);
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index j = 0; j < mean.size(); ++j) z[j] = stream.normal(static_cast<std::uint32_t>(j));
  return mean + lower.triangularView<Eigen::Lower>() * z;
}

}  // namespace

Eigen::MatrixXd sample_parameters(const FitResult& fit, std::size_t n_draws, std::uint64_t seed,
                                  const SamplingOptions& options) {
  const CovarianceFactor factor = factor_covariance(fit.sigma_hat, options.allow_jitter);
  Eigen::MatrixXd draws(static_cast<Eigen::Index>(n_draws), fit.pi_hat.size());
  parallel_for(n_draws, options.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      draws.row(static_cast<Eigen::Index>(i)) = draw_one(fit.pi_hat, factor.lower, seed, i).transpose();
    }
  });
  return draws;
}

std::vector<double> EffectDistribution::values(Effect which) const {
  std::vector<double> v;
  v.reserve(triples.size());
  for (const auto& t : triples) v.push_back(effect_value(t, which));
  return v;
}

nlohmann::json EffectDistribution::metadata() const {
  return {{"n_draws", n_draws},
          {"seed", seed},
          {"jitter", jitter},
          {"source", source},
          {"point", {{"te1", point.te1}, {"te2", point.te2}, {"int", point.interaction}}}};
}

std::string EffectDistribution::to_csv() const {
  std::string out = "te1,te2,int,draw_index\n";
  out.reserve(triples.size() * 64);
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const auto& t = triples[i];
    out += format_double(t.te1);
    out += ',';
    out += format_double(t.te2);
    out += ',';
    out += format_double(t.interaction);
    out += ',';
    out += std::to_string(i);
    out += '\n';
  }
  return out;
}

EffectDistribution effect_distribution(const FitResult& fit, const ModelSpec& spec,
                                       const StandardizationSet& std_set, std::size_t n_draws,
                                       std::uint64_t seed, const SamplingOptions& options) {
  if (n_draws < 1) throw usage_error("n_draws must be at least 1");
  if (static_cast<std::size_t>(fit.pi_hat.size()) != spec.size()) {
    throw data_error("DimensionMismatch", "fit and model have different term counts");
  }
  const CovarianceFactor factor = factor_covariance(fit.sigma_hat, options.allow_jitter);

  EffectDistribution dist;
  dist.n_draws = n_draws;
  dist.seed = seed;
  dist.jitter = factor.jitter;
  dist.source = fit.identity();
  dist.point = effect_triple(fit.pi_hat, spec, std_set);
  dist.triples.resize(n_draws);
  parallel_for(n_draws, options.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      dist.triples[i] = effect_triple(draw_one(fit.pi_hat, factor.lower, seed, i), spec, std_set);
    }
  });
  return dist;
}

}  // namespace riskint
