#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mtqml/types.hpp"

namespace mtqml {

/// Family name plus parameters, kept for reporting.
struct MTDescriptor {
  std::string family;
  std::vector<double> parameters;
};

/// Non-negative weight function u on C^p.
///
/// Evaluated in the log domain so that Gaussian weights with small widths do
/// not underflow before normalization.  u(x) = 0 is represented by a log value
/// of -infinity.
class MTFunction {
 public:
  using LogEvaluator = std::function<double(const ComplexVector&)>;

  MTFunction(LogEvaluator log_u, MTDescriptor descriptor);

  /// u(x) = value > 0 everywhere.
  static MTFunction constant(double value = 1.0);

  /// Wraps an arbitrary non-negative callable.
  static MTFunction from_callable(std::function<double(const ComplexVector&)> u,
                                  std::string family = "callable");

  double log_value(const ComplexVector& x) const { return log_u_(x); }
  double operator()(const ComplexVector& x) const;

  /// c * u for c > 0.
  MTFunction scaled(double c) const;

  const MTDescriptor& descriptor() const noexcept { return descriptor_; }

 private:
  LogEvaluator log_u_;
  MTDescriptor descriptor_;
};

/// u(x) = exp(-||P x||^2 / width^2), P = I when no projector is given.
///
/// Throws for width <= 0 or when P is not Hermitian idempotent (1e-10).
MTFunction gaussian_mt_function(double width, std::optional<ComplexMatrix> projector = std::nullopt);

/// Log of u at every sample, in sample order.
RealVector mt_log_values(const Dataset& data, const MTFunction& u);

/// Normalized weights u(X_n) / sum_m u(X_m), computed with max-subtraction
/// in the log domain.  Throws "MT-function annihilates sample" when all
/// weights vanish.
RealVector mt_weights(const Dataset& data, const MTFunction& u);

struct EmpiricalMTMoments {
  RealVector weights;  // normalized, sums to 1
  ComplexVector mean;
  ComplexMatrix cov;
  double weight_mass = 0.0;  // sum_n u(X_n) / N; may underflow to 0 for tiny widths
};

EmpiricalMTMoments empirical_mt_moments(const Dataset& data, const MTFunction& u);
ComplexVector empirical_mt_mean(const Dataset& data, const MTFunction& u);
ComplexMatrix empirical_mt_cov(const Dataset& data, const MTFunction& u);

/// Weighted mean / covariance for precomputed normalized weights.
ComplexVector weighted_mean(const Dataset& data, const RealVector& weights);
ComplexMatrix weighted_cov(const Dataset& data, const RealVector& weights, const ComplexVector& mean);

struct MTConditionReport {
  double mean_u = 0.0;
  double fraction_negligible = 0.0;  // share of samples with u < 1e-300
  double effective_sample_size = 0.0;  // 1 / sum phi^2
  bool degenerate = false;  // all weights zero
  bool low_ess = false;  // ESS < 10
};

inline constexpr double kLowEssThreshold = 10.0;

MTConditionReport check_mt_condition(const Dataset& data, const MTFunction& u);

}  // namespace mtqml
