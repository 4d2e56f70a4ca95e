#pragma once

#include "mtqml/linreg.hpp"
#include "mtqml/types.hpp"

namespace mtqml {

struct FixedPointConfig {
  int max_iter = 100;
  double rel_tol = 1e-6;
  /// Starting point; empty means the median-location initializer.
  RealVector init;

  void validate() const;
};

struct FixedPointResult {
  RealVector theta;
  int iterations = 0;
  bool converged = false;
};

/// Coordinatewise median of the real and imaginary parts.
ComplexVector median_location(const Dataset& data);

/// 1 / erf^-1(3/4) (as commonly printed) or 1 / Phi^-1(3/4), the constant that
/// makes the MAD consistent for the standard deviation of a normal variable.
enum class MadConstant { erf_inverse, gaussian_consistent };

double mad_constant(MadConstant which);

struct RobustScale {
  double sigma = 0.0;
};

/// sqrt(p^-1 sum_k gamma^2 [MAD(Re X_k)^2 + MAD(Im X_k)^2]).
/// Throws "degenerate scale" when every MAD is zero.
RobustScale mad_scale(const Dataset& data, MadConstant constant = MadConstant::erf_inverse);

/// (1 - r^2)^2 for 0 <= r <= 1, else 0; r is the residual norm over c sigma.
double tukey_weight(double r);

/// Bi-square M-estimate of theta by reweighted mean fixed-point iteration.
/// Throws "all samples rejected" if every weight vanishes.
FixedPointResult tukey_m_estimator(const Dataset& data, const RegressionModel& model, double c,
                                   const FixedPointConfig& config = {},
                                   MadConstant constant = MadConstant::gaussian_consistent);

/// MLE under complex multivariate t noise with lambda dof and dispersion sigma2,
/// using weights (1 + 2 ||X - A alpha||^2 / (lambda sigma2))^-1.
FixedPointResult mle_t_noise(const Dataset& data, const RegressionModel& model, double lambda, double sigma2,
                             const FixedPointConfig& config = {});

/// Efficiency of the bi-square estimator relative to the Gaussian CRLB, where
/// sqrt(2) R is chi distributed with 2p degrees of freedom.
double are_tukey(double c, Index p);

/// Bisection on c until |ARE - target| < 1e-4.
double tune_c_for_are(double target, Index p);

}  // namespace mtqml
