#pragma once

#include <memory>

#include "mtqml/asymptotics.hpp"
#include "mtqml/estimator.hpp"
#include "mtqml/measure_transform.hpp"
#include "mtqml/samplers.hpp"
#include "mtqml/types.hpp"

namespace mtqml {

inline constexpr double kDoaBoundaryGap = 1e-3;
inline constexpr Index kDoaGridPoints = 10'000;

/// Single BPSK source on a half-wavelength ULA in spherically contoured noise.
struct UlaModel {
  Index p = 4;
  double noise_dispersion = 1.0;  // sigma_Z^2
  double signal_power = 1.0;      // sigma_S^2
  TextureLaw texture;
  double delta = kDoaBoundaryGap;

  double lower() const;
  double upper() const;
  void validate() const;

  /// signal_power set from SNR = 10 log10(sigma_S^2 / sigma_Z^2).
  static UlaModel from_snr_db(Index p, double snr_db, TextureLaw texture, double noise_dispersion = 1.0);
};

/// a(theta) with entries exp(-i pi k sin theta), k = 0..p-1, or its first or
/// second derivative in theta.
ComplexVector steering(Index p, double theta, int order = 0);

/// Angle grid with its steering vectors precomputed.
class DoaGrid {
 public:
  /// `points` equally spaced angles on [-pi/2, pi/2 - delta].
  DoaGrid(Index p, Index points, double delta = kDoaBoundaryGap);
  /// Arbitrary angles.
  DoaGrid(Index p, RealVector angles);

  Index p() const noexcept { return steering_.rows(); }
  Index size() const noexcept { return angles_.size(); }
  const RealVector& angles() const noexcept { return angles_; }
  const ComplexMatrix& steering_matrix() const noexcept { return steering_; }

 private:
  RealVector angles_;
  ComplexMatrix steering_;  // p x K
};

/// Cached grid shared across calls; thread-safe.
std::shared_ptr<const DoaGrid> shared_doa_grid(Index p, Index points = kDoaGridPoints,
                                               double delta = kDoaBoundaryGap);

struct SpectrumCurve {
  RealVector angles;
  RealVector values;
  double max_imag_ratio = 0.0;  // largest |Im| / |value| seen

  /// First (smallest-angle) maximizer.
  Index argmax() const;
};

/// a^H C a over the grid.
SpectrumCurve spectrum_from_matrix(const ComplexMatrix& c, const DoaGrid& grid);

/// Spectrum of C_hat = Sigma_hat + mu_hat mu_hat^H under u.
SpectrumCurve mt_spectrum(const Dataset& data, const MTFunction& u, const DoaGrid& grid);
SpectrumCurve mt_spectrum(const Dataset& data, double omega, const DoaGrid& grid);

/// Weighted second moment sum phi_n X_n X_n^H, equal to Sigma_hat + mu_hat mu_hat^H.
ComplexMatrix mt_second_moment(const Dataset& data, const MTFunction& u);

double estimate_doa(const Dataset& data, const MTFunction& u, const DoaGrid& grid);
double estimate_doa(const Dataset& data, double omega, const DoaGrid& grid);
double estimate_doa(const Dataset& data, double omega, Index grid_points = kDoaGridPoints);

/// Closed-form asymptotic MSE of the MT estimator for N snapshots.
double asymptotic_mse_doa(const UlaModel& model, double theta0, double omega, Index n,
                          const TextureQuadrature& quadrature);
double asymptotic_mse_doa(const UlaModel& model, double theta0, double omega, Index n);

/// Empirical asymptotic MSE; throws "degenerate curvature" for a zero denominator.
double empirical_asymptotic_mse_doa(const Dataset& data, double theta_hat, double omega);
double empirical_asymptotic_mse_doa(const Dataset& data, double theta_hat, const MTFunction& u);

/// Width selection by the smallest empirical asymptotic MSE; theta_hats holds
/// the spectrum maximizer at every width.
SelectionResult select_omega_doa(const Dataset& data, const std::vector<double>& grid, const DoaGrid& angles);

/// Closed-form influence function at contamination point y.
double influence_doa(const ComplexVector& y, double theta0, const UlaModel& model, double omega,
                     const TextureQuadrature& quadrature);
double influence_doa(const ComplexVector& y, double theta0, const UlaModel& model, double omega);

/// Per-snapshot Gaussian CRLB C(theta0); divide by N for N snapshots.
double crlb_doa(const UlaModel& model, double theta0);

/// MT-mean 0 and MT-covariance r_S a a^H + r_W I.
class DoaMomentModel final : public MomentModel {
 public:
  DoaMomentModel(Index p, double r_signal, double r_noise, Index grid_points = kDoaGridPoints,
                 double delta = kDoaBoundaryGap);

  Index theta_dim() const override { return 1; }
  Index obs_dim() const override { return p_; }
  ComplexVector mean(const RealVector& theta) const override;
  ComplexMatrix cov(const RealVector& theta) const override;
  ComplexVector d_mean(const RealVector& theta, Index k) const override;
  ComplexMatrix d_cov(const RealVector& theta, Index k) const override;
  bool has_second_derivatives() const override { return true; }
  ComplexVector d2_mean(const RealVector& theta, Index j, Index k) const override;
  ComplexMatrix d2_cov(const RealVector& theta, Index j, Index k) const override;
  const ParameterSpace& space() const override { return space_; }

  double r_signal() const noexcept { return r_signal_; }
  double r_noise() const noexcept { return r_noise_; }

 private:
  Index p_;
  double r_signal_;
  double r_noise_;
  ParameterSpace space_;
};

/// Least-squares fit of (r_S, r_W) to Sigma_hat on {a(theta) a(theta)^H, I}.
std::shared_ptr<DoaMomentModel> fit_doa_moment_model(const EmpiricalMTMoments& moments, double theta,
                                                     Index grid_points = kDoaGridPoints,
                                                     double delta = kDoaBoundaryGap);

/// Builder for select_mt_parameter: fits the scalars at the spectrum maximizer.
ModelBuilder doa_model_builder(Index grid_points = kDoaGridPoints, double delta = kDoaBoundaryGap);

/// Per-snapshot Fisher information tr[S^-1 dS S^-1 dS] of CN(0, S(theta)),
/// S = sigma_S^2 a a^H + sigma_Z^2 I.
double gaussian_doa_fim(const UlaModel& model, double theta);

/// Score of the Gaussian likelihood (BPSK replaced by a Gaussian signal of the
/// same power), d/dtheta log of CN(0, sigma_S^2 a a^H + sigma_Z^2 I).
RealVector gaussian_doa_score(const ComplexVector& x, double theta, const UlaModel& model);

}  // namespace mtqml
