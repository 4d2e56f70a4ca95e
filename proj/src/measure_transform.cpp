#include "mtqml/measure_transform.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mtqml/core_stats.hpp"
#include "mtqml/diagnostics.hpp"

namespace mtqml {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

MTFunction::MTFunction(LogEvaluator log_u, MTDescriptor descriptor)
    : log_u_(std::move(log_u)), descriptor_(std::move(descriptor)) {
  if (!log_u_) throw Error("MT-function evaluator is empty");
}

MTFunction MTFunction::constant(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) throw Error("constant MT-function must be positive");
  const double log_value = std::log(value);
  return MTFunction([log_value](const ComplexVector&) { return log_value; },
                    MTDescriptor{"constant", {value}});
}

MTFunction MTFunction::from_callable(std::function<double(const ComplexVector&)> u, std::string family) {
  if (!u) throw Error("MT-function evaluator is empty");
  return MTFunction(
      [u = std::move(u)](const ComplexVector& x) {
        const double value = u(x);
        if (value < 0.0 || std::isnan(value)) throw Error("MT-function returned a negative value");
        return value > 0.0 ? std::log(value) : kNegInf;
      },
      MTDescriptor{std::move(family), {}});
}

double MTFunction::operator()(const ComplexVector& x) const { return std::exp(log_u_(x)); }

MTFunction MTFunction::scaled(double c) const {
  if (!(c > 0.0)) throw Error("MT-function scale must be positive");
  const double log_c = std::log(c);
  MTDescriptor descriptor = descriptor_;
  descriptor.family = "scaled:" + descriptor.family;
  descriptor.parameters.push_back(c);
  return MTFunction([inner = log_u_, log_c](const ComplexVector& x) { return inner(x) + log_c; },
                    std::move(descriptor));
}

MTFunction gaussian_mt_function(double width, std::optional<ComplexMatrix> projector) {
  if (!(width > 0.0) || !std::isfinite(width)) throw Error("Gaussian MT-function width must be positive");
  const double inv_w2 = 1.0 / (width * width);
  if (!projector) {
    return MTFunction([inv_w2](const ComplexVector& x) { return -x.squaredNorm() * inv_w2; },
                      MTDescriptor{"gaussian", {width}});
  }
  const ComplexMatrix& p = *projector;
  if (p.rows() != p.cols()) throw Error("projector must be square");
  const double scale = std::max(1.0, p.norm());
  if ((p - p.adjoint()).norm() > 1e-10 * scale || (p * p - p).norm() > 1e-10 * scale) {
    throw Error("projector is not Hermitian idempotent");
  }
  return MTFunction(
      [p = *projector, inv_w2](const ComplexVector& x) { return -(p * x).squaredNorm() * inv_w2; },
      MTDescriptor{"projected-gaussian", {width}});
}

RealVector mt_log_values(const Dataset& data, const MTFunction& u) {
  RealVector logs(data.size());
  ComplexVector x(data.dim());
  for (Index n = 0; n < data.size(); ++n) {
    x = data.sample(n);
    logs(n) = u.log_value(x);
    if (std::isnan(logs(n)) || logs(n) == std::numeric_limits<double>::infinity()) {
      throw Error("MT-function value is not finite");
    }
  }
  return logs;
}

namespace {

// Normalized weights from log values; returns false when every weight is zero.
bool normalize_log_weights(const RealVector& logs, RealVector& weights, double& log_max) {
  log_max = logs.size() > 0 ? logs.maxCoeff() : kNegInf;
  if (log_max == kNegInf) return false;
  weights = (logs.array() - log_max).exp().matrix();
  const double total = weights.sum();
  weights /= total;
  return true;
}

}  // namespace

RealVector mt_weights(const Dataset& data, const MTFunction& u) {
  if (data.empty()) throw Error("empty dataset");
  RealVector weights;
  double log_max = 0.0;
  if (!normalize_log_weights(mt_log_values(data, u), weights, log_max)) {
    throw Error("MT-function annihilates sample");
  }
  return weights;
}

ComplexVector weighted_mean(const Dataset& data, const RealVector& weights) {
  return data.samples() * weights.cast<Complex>();
}

ComplexMatrix weighted_cov(const Dataset& data, const RealVector& weights, const ComplexVector& mean) {
  const ComplexMatrix centered = data.samples().colwise() - mean;
  const ComplexMatrix scaled = centered * weights.cast<Complex>().asDiagonal();
  return hermitize(scaled * centered.adjoint());
}

EmpiricalMTMoments empirical_mt_moments(const Dataset& data, const MTFunction& u) {
  if (data.empty()) throw Error("empty dataset");
  const RealVector logs = mt_log_values(data, u);
  EmpiricalMTMoments out;
  double log_max = 0.0;
  if (!normalize_log_weights(logs, out.weights, log_max)) throw Error("MT-function annihilates sample");
  out.mean = weighted_mean(data, out.weights);
  out.cov = weighted_cov(data, out.weights, out.mean);
  out.weight_mass = logs.array().exp().sum() / static_cast<double>(data.size());
  return out;
}

ComplexVector empirical_mt_mean(const Dataset& data, const MTFunction& u) {
  return weighted_mean(data, mt_weights(data, u));
}

ComplexMatrix empirical_mt_cov(const Dataset& data, const MTFunction& u) {
  const RealVector w = mt_weights(data, u);
  return weighted_cov(data, w, weighted_mean(data, w));
}

MTConditionReport check_mt_condition(const Dataset& data, const MTFunction& u) {
  MTConditionReport report;
  if (data.empty()) {
    report.degenerate = true;
    return report;
  }
  const RealVector logs = mt_log_values(data, u);
  const RealVector values = logs.array().exp().matrix();
  report.mean_u = values.mean();
  report.fraction_negligible =
      static_cast<double>((values.array() < 1e-300).count()) / static_cast<double>(data.size());
  RealVector weights;
  double log_max = 0.0;
  if (!normalize_log_weights(logs, weights, log_max)) {
    report.degenerate = true;
    warn("MT-function annihilates sample");
    return report;
  }
  report.effective_sample_size = 1.0 / weights.squaredNorm();
  report.low_ess = report.effective_sample_size < kLowEssThreshold;
  if (report.low_ess) {
    warn("effective sample size " + std::to_string(report.effective_sample_size) + " is below " +
         std::to_string(kLowEssThreshold));
  }
  return report;
}

}  // namespace mtqml
