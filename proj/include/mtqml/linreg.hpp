#pragma once

#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "mtqml/asymptotics.hpp"
#include "mtqml/estimator.hpp"
#include "mtqml/measure_transform.hpp"
#include "mtqml/samplers.hpp"
#include "mtqml/types.hpp"

namespace mtqml {

/// X = A alpha + W with full-column-rank A (p x q), theta = [Re alpha; Im alpha].
struct RegressionModel {
  ComplexMatrix A;
  ComplexMatrix P_A;     // projector onto range(A)
  ComplexMatrix P_perp;  // I - P_A
  RealMatrix B_inv;      // [[Re A^H A, -Im A^H A], [Im A^H A, Re A^H A]]
  RealMatrix B;
  ComplexMatrix left_inverse;  // (A^H A)^-1 A^H
  double noise_dispersion = 1.0;  // sigma_Z^2
  std::vector<std::string> warnings;

  /// Throws when A is not full column rank.
  static RegressionModel from_regressors(ComplexMatrix A, double noise_dispersion = 1.0);

  Index p() const noexcept { return A.rows(); }
  Index q() const noexcept { return A.cols(); }
  Index theta_dim() const noexcept { return 2 * A.cols(); }

  /// sigma_Z^2 from SNR = tr[A^H A] / sigma_Z^2 in dB.
  double dispersion_for_snr_db(double snr_db) const;
  RegressionModel with_dispersion(double sigma2) const;
};

/// A = (1/sqrt 2)[a_0, a_1], a_k = p^-1/2 [1, e^{i t_k}, ..., e^{i(p-1) t_k}]^T.
/// Nearly collinear columns produce a warning; exactly equal angles leave A
/// rank deficient, which throws.
RegressionModel build_steering_regressors(Index p = 10, double angle0 = std::numbers::pi / 3.0,
                                       double angle1 = std::numbers::pi / 6.0, double noise_dispersion = 1.0);

/// theta = [Re alpha; Im alpha].
RealVector realify(const ComplexVector& alpha);
ComplexVector complexify(const RealVector& theta);

/// Projected Gaussian MT-function exp(-||P_perp x||^2 / omega^2).
MTFunction regression_mt_function(const RegressionModel& model, double omega);

/// (A^H A)^-1 A^H mu, realified.
RealVector regression_closed_form(const RegressionModel& model, const ComplexVector& mean);

RealVector mt_gqmle_regression(const Dataset& data, const RegressionModel& model, double omega);

/// Least squares on the sample mean (GQMLE and Gaussian MLE coincide here).
RealVector gqmle_regression(const Dataset& data, const RegressionModel& model);

/// How the exponent in the closed-form MSE and influence prefactors is
/// chosen.  `complement_rank` uses p - q, the complex dimension of range(A)'s
/// orthogonal complement; `theta_dim` uses p - 2q.
enum class TextureExponent { complement_rank, theta_dim };

int texture_exponent(const RegressionModel& model, TextureExponent rule);

/// Closed-form asymptotic MSE matrix for N samples.
RealMatrix asymptotic_mse_regression(const RegressionModel& model, const TextureLaw& law, double omega, Index n,
                                     const TextureQuadrature& quadrature,
                                     TextureExponent rule = TextureExponent::complement_rank);
RealMatrix asymptotic_mse_regression(const RegressionModel& model, const TextureLaw& law, double omega, Index n,
                                     TextureExponent rule = TextureExponent::complement_rank);

/// Empirical asymptotic MSE matrix sum u^2 zeta zeta^T / (sum u)^2.
RealMatrix empirical_asymptotic_mse_regression(const Dataset& data, const RegressionModel& model, double omega);

/// Width selection by the smallest empirical asymptotic MSE trace; the
/// closed-form estimate at every width is stored in theta_hats.
SelectionResult select_omega_regression(const Dataset& data, const RegressionModel& model,
                                        const std::vector<double>& grid);

/// Closed-form influence function at y.
RealVector influence_regression(const ComplexVector& y, const RealVector& theta0, const RegressionModel& model,
                                const TextureLaw& law, double omega, const TextureQuadrature& quadrature,
                                TextureExponent rule = TextureExponent::complement_rank);
RealVector influence_regression(const ComplexVector& y, const RealVector& theta0, const RegressionModel& model,
                                const TextureLaw& law, double omega,
                                TextureExponent rule = TextureExponent::complement_rank);

/// MT-mean A alpha and MT-covariance r0 P_A + r1 I.
class RegressionMomentModel final : public MomentModel {
 public:
  RegressionMomentModel(std::shared_ptr<const RegressionModel> model, double r0, double r1, ParameterSpace space);

  Index theta_dim() const override { return model_->theta_dim(); }
  Index obs_dim() const override { return model_->p(); }
  ComplexVector mean(const RealVector& theta) const override;
  ComplexMatrix cov(const RealVector& theta) const override;
  ComplexVector d_mean(const RealVector& theta, Index k) const override;
  ComplexMatrix d_cov(const RealVector& theta, Index k) const override;
  bool has_second_derivatives() const override { return true; }
  ComplexVector d2_mean(const RealVector& theta, Index j, Index k) const override;
  ComplexMatrix d2_cov(const RealVector& theta, Index j, Index k) const override;
  const ParameterSpace& space() const override { return space_; }
  std::optional<RealVector> closed_form(const EmpiricalMTMoments& moments) const override;

  double r0() const noexcept { return r0_; }
  double r1() const noexcept { return r1_; }
  const RegressionModel& regression() const noexcept { return *model_; }

 private:
  std::shared_ptr<const RegressionModel> model_;
  double r0_;
  double r1_;
  ComplexMatrix cov_;
  ParameterSpace space_;
};

/// Box [-half_width, half_width]^(2q) with `points` grid points per coordinate.
ParameterSpace default_regression_space(const RegressionModel& model, double half_width = 2.0, Index points = 21);

/// Least-squares fit of (r0, r1) to Sigma_hat on {P_A, I}; r0 >= 0, r1 > 0.
std::shared_ptr<RegressionMomentModel> fit_regression_moment_model(std::shared_ptr<const RegressionModel> model,
                                                                   const EmpiricalMTMoments& moments,
                                                                   ParameterSpace space);

ModelBuilder regression_model_builder(std::shared_ptr<const RegressionModel> model, ParameterSpace space);

/// Score of the Gaussian likelihood CN(A alpha, sigma_Z^2 I).
RealVector gaussian_regression_score(const ComplexVector& x, const RealVector& theta, const RegressionModel& model);

/// Per-sample Fisher information (2 / sigma_Z^2) B^-1.
RealMatrix gaussian_regression_fim(const RegressionModel& model);

/// sigma_Z^2 / (2N) B.
RealMatrix gaussian_regression_crlb(const RegressionModel& model, Index n);

}  // namespace mtqml
