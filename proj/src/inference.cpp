#include "riskint/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "riskint/errors.hpp"

namespace riskint {

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw inference_error("EmptySamples", "quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw usage_error("quantile probability must lie in [0, 1]");
  const double h = static_cast<double>(sorted.size() - 1) * p;  // 0-based rank
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double quantile(std::vector<double> samples, double p) {
  std::sort(samples.begin(), samples.end());
  return quantile_sorted(samples, p);
}

Interval percentile_ci(std::vector<double> samples, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw usage_error("alpha must lie in (0, 1)");
  std::sort(samples.begin(), samples.end());
  return {quantile_sorted(samples, alpha / 2.0), quantile_sorted(samples, 1.0 - alpha / 2.0)};
}

nlohmann::json IntervalEstimate::to_json() const {
  return {{"point", point},
          {"ci50", {ci50.first, ci50.second}},
          {"ci95", {ci95.first, ci95.second}},
          {"count", count},
          {"level_convention", "equal-tail"}};
}

namespace {

IntervalEstimate intervals_from(std::vector<double> values, double point) {
  IntervalEstimate est;
  est.point = point;
  est.count = values.size();
  std::sort(values.begin(), values.end());
  est.ci50 = {quantile_sorted(values, 0.25), quantile_sorted(values, 0.75)};
  est.ci95 = {quantile_sorted(values, 0.025), quantile_sorted(values, 0.975)};
  return est;
}

}  // namespace

IntervalEstimate marginal_report(const EffectDistribution& dist, Effect which) {
  if (dist.triples.empty()) throw inference_error("EmptySamples", "distribution has no draws");
  return intervals_from(dist.values(which), effect_value(dist.point, which));
}

ConfidenceEllipse::ConfidenceEllipse(Eigen::Vector2d center, Eigen::Matrix2d shape, double alpha)
    : center_(std::move(center)), shape_(std::move(shape)), alpha_(alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw usage_error("alpha must lie in (0, 1)");
  const double det = shape_.determinant();
  if (!(shape_(0, 0) > 0.0) || !(shape_(1, 1) > 0.0) ||
      !(det > 1e-12 * shape_(0, 0) * shape_(1, 1))) {
    throw inference_error("DegenerateCloud", "pair covariance is singular",
                          {{"determinant", det}});
  }
  shape_inv_ = shape_.inverse();
  quantile_ = -2.0 * std::log(alpha);
}

double ConfidenceEllipse::mahalanobis2(const Eigen::Vector2d& q) const {
  const Eigen::Vector2d d = q - center_;
  return d.dot(shape_inv_ * d);
}

ConfidenceEllipse::Axes ConfidenceEllipse::axes() const {
  const double a = shape_(0, 0), b = shape_(0, 1), c = shape_(1, 1);
  const double mid = 0.5 * (a + c);
  const double rad = std::hypot(0.5 * (a - c), b);
  const double l1 = mid + rad;
  const double l2 = mid - rad;
  const double angle = 0.5 * std::atan2(2.0 * b, a - c);
  return {std::sqrt(l1 * quantile_), std::sqrt(l2 * quantile_), angle};
}

std::vector<Eigen::Vector2d> ConfidenceEllipse::polyline(int points) const {
  const Axes ax = axes();
  const double ca = std::cos(ax.angle), sa = std::sin(ax.angle);
  std::vector<Eigen::Vector2d> out;
  out.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double t = 2.0 * std::numbers::pi * i / points;
    const double u = ax.major * std::cos(t);
    const double v = ax.minor * std::sin(t);
    out.emplace_back(center_[0] + ca * u - sa * v, center_[1] + sa * u + ca * v);
  }
  return out;
}

nlohmann::json ConfidenceEllipse::to_json() const {
  const Axes ax = axes();
  return {{"center", {center_[0], center_[1]}},
          {"shape", {{shape_(0, 0), shape_(0, 1)}, {shape_(1, 0), shape_(1, 1)}}},
          {"level", level()},
          {"alpha", alpha_},
          {"quantile", quantile_},
          {"axes", {{"major", ax.major}, {"minor", ax.minor}, {"angle", ax.angle}}}};
}

ConfidenceEllipse confidence_ellipse(const std::vector<Eigen::Vector2d>& pairs, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw usage_error("alpha must lie in (0, 1)");
  if (pairs.size() < 3) {
    throw inference_error("DegenerateCloud", "an ellipse needs at least 3 pairs",
                          {{"pairs", pairs.size()}});
  }
  const double n = static_cast<double>(pairs.size());
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : pairs) mean += p;
  mean /= n;
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : pairs) {
    const Eigen::Vector2d d = p - mean;
    cov += d * d.transpose();
  }
  cov /= (n - 1.0);
  return ConfidenceEllipse(mean, cov, alpha);
}

nlohmann::json TercileReport::to_json() const {
  nlohmann::json j;
  j["conditioning"] = effect_name(conditioning);
  j["boundaries"] = {boundaries[0], boundaries[1]};
  j["strata"] = nlohmann::json::array();
  const char* labels[] = {"(-inf, q1]", "(q1, q2]", "(q2, +inf)"};
  for (std::size_t s = 0; s < 3; ++s) {
    auto sj = strata[s].to_json();
    sj["range"] = labels[s];
    sj["point_convention"] = "conditional draw mean";
    j["strata"].push_back(std::move(sj));
  }
  return j;
}

TercileReport tercile_report(const EffectDistribution& dist, Effect conditioning) {
  if (conditioning == Effect::INT) {
    throw usage_error("tercile conditioning must be TE1 or TE2");
  }
  if (dist.triples.size() < 30) {
    throw inference_error("TooFewDraws", "tercile report needs at least 30 draws",
                          {{"n_draws", dist.triples.size()}, {"minimum", 30}});
  }
  std::vector<double> cond = dist.values(conditioning);
  std::vector<double> sorted = cond;
  std::sort(sorted.begin(), sorted.end());

  TercileReport rep;
  rep.conditioning = conditioning;
  rep.boundaries = {quantile_sorted(sorted, 1.0 / 3.0), quantile_sorted(sorted, 2.0 / 3.0)};
  for (std::size_t i = 0; i < dist.triples.size(); ++i) {
    const double c = cond[i];
    const std::size_t s = c <= rep.boundaries[0] ? 0 : (c <= rep.boundaries[1] ? 1 : 2);
    rep.draws[s].push_back(dist.triples[i].interaction);
  }
  for (std::size_t s = 0; s < 3; ++s) {
    const auto& v = rep.draws[s];
    if (v.empty()) {
      throw inference_error("TooFewDraws", "a tercile stratum is empty (tied draws)",
                            {{"stratum", s}});
    }
    double sum = 0.0;
    for (double x : v) sum += x;
    rep.strata[s] = intervals_from(v, sum / static_cast<double>(v.size()));
  }
  return rep;
}

Histogram histogram(const std::vector<double>& values, double lo, double hi, int bins) {
  if (bins < 1) throw usage_error("histogram needs at least one bin");
  if (!(hi > lo)) {
    hi = lo + 1e-12;
  }
  Histogram h;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) h.edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / bins;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    if (v < lo || v > hi) continue;
    auto b = static_cast<long>(std::floor((v - lo) / (hi - lo) * bins));
    b = std::clamp(b, 0L, static_cast<long>(bins) - 1);
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

double delta_variance(const std::function<double(const Eigen::VectorXd&)>& f,
                      const Eigen::VectorXd& x, const Eigen::MatrixXd& sigma, double step) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x, xm = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    xp[j] = x[j] + step;
    xm[j] = x[j] - step;
    g[j] = (f(xp) - f(xm)) / (2.0 * step);
    xp[j] = xm[j] = x[j];
  }
  return g.dot(sigma * g);
}

DeltaVariances delta_method_check(const FitResult& fit, const ModelSpec& spec,
                                  const StandardizationSet& std_set, double step) {
  auto component = [&](Effect which) {
    return delta_variance(
        [&](const Eigen::VectorXd& p) { return effect_value(effect_triple(p, spec, std_set), which); },
        fit.pi_hat, fit.sigma_hat, step);
  };
  return {component(Effect::TE1), component(Effect::TE2), component(Effect::INT)};
}

}  // namespace riskint
