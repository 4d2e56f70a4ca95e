#include "mtqml/linreg.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "mtqml/core_stats.hpp"
#include "mtqml/diagnostics.hpp"

namespace mtqml {

RegressionModel RegressionModel::from_regressors(ComplexMatrix A, double noise_dispersion) {
  if (A.rows() < 1 || A.cols() < 1) throw Error("empty regressor matrix");
  if (!(noise_dispersion > 0.0)) throw Error("noise dispersion must be positive");
  Eigen::ColPivHouseholderQR<ComplexMatrix> qr(A);
  if (qr.rank() < A.cols()) throw Error("regressor matrix is not full column rank");
  RegressionModel m;
  m.A = std::move(A);
  m.noise_dispersion = noise_dispersion;
  const ComplexMatrix gram = m.A.adjoint() * m.A;
  m.left_inverse = gram.llt().solve(m.A.adjoint());
  m.P_A = hermitize(m.A * m.left_inverse);
  m.P_perp = ComplexMatrix::Identity(m.p(), m.p()) - m.P_A;
  const Index q = m.q();
  m.B_inv.resize(2 * q, 2 * q);
  m.B_inv << gram.real(), -gram.imag(), gram.imag(), gram.real();
  m.B = m.B_inv.inverse();
  m.B = 0.5 * (m.B + m.B.transpose());
  return m;
}

double RegressionModel::dispersion_for_snr_db(double snr_db) const {
  return (A.adjoint() * A).trace().real() / std::pow(10.0, snr_db / 10.0);
}

RegressionModel RegressionModel::with_dispersion(double sigma2) const {
  if (!(sigma2 > 0.0)) throw Error("noise dispersion must be positive");
  RegressionModel m = *this;
  m.noise_dispersion = sigma2;
  return m;
}

RegressionModel build_steering_regressors(Index p, double angle0, double angle1, double noise_dispersion) {
  if (p < 2) throw Error("regression needs p >= 2");
  ComplexMatrix A(p, 2);
  const double scale = 1.0 / std::sqrt(2.0 * static_cast<double>(p));
  for (Index k = 0; k < p; ++k) {
    const double kk = static_cast<double>(k);
    A(k, 0) = std::polar(scale, angle0 * kk);
    A(k, 1) = std::polar(scale, angle1 * kk);
  }
  const double coherence = std::abs(A.col(0).dot(A.col(1))) / (A.col(0).norm() * A.col(1).norm());
  std::vector<std::string> warnings;
  if (coherence > 0.99) {
    std::ostringstream msg;
    msg << "regressor columns are nearly collinear (coherence " << coherence << ")";
    warnings.push_back(msg.str());
    warn(msg.str());
  }
  RegressionModel m = RegressionModel::from_regressors(std::move(A), noise_dispersion);
  m.warnings = std::move(warnings);
  return m;
}

RealVector realify(const ComplexVector& alpha) {
  RealVector theta(2 * alpha.size());
  theta << alpha.real(), alpha.imag();
  return theta;
}

ComplexVector complexify(const RealVector& theta) {
  if (theta.size() % 2 != 0) throw Error("parameter vector length must be even");
  const Index q = theta.size() / 2;
  ComplexVector alpha(q);
  for (Index k = 0; k < q; ++k) alpha(k) = Complex(theta(k), theta(q + k));
  return alpha;
}

MTFunction regression_mt_function(const RegressionModel& model, double omega) {
  return gaussian_mt_function(omega, model.P_perp);
}

RealVector regression_closed_form(const RegressionModel& model, const ComplexVector& mean) {
  if (mean.size() != model.p()) throw Error("dimension mismatch");
  return realify(model.left_inverse * mean);
}

RealVector mt_gqmle_regression(const Dataset& data, const RegressionModel& model, double omega) {
  return regression_closed_form(model, empirical_mt_mean(data, regression_mt_function(model, omega)));
}

RealVector gqmle_regression(const Dataset& data, const RegressionModel& model) {
  return regression_closed_form(model, sample_mean(data));
}

int texture_exponent(const RegressionModel& model, TextureExponent rule) {
  const Index e = rule == TextureExponent::complement_rank ? model.p() - model.q() : model.p() - 2 * model.q();
  if (e < 0) throw Error("texture exponent is negative for this regressor shape");
  return static_cast<int>(e);
}

namespace {

void check_omega(double omega) {
  if (!(omega > 0.0)) throw Error("MT-function width must be positive");
}

// E[(w^2 / (sigma^2 nu^2 + w^2))^e]
double weight_mass_expectation(const TextureQuadrature& quadrature, double sigma2, double omega, int e) {
  const double w2 = omega * omega;
  return quadrature.expectation([&](double nu2) { return std::pow(w2 / (sigma2 * nu2 + w2), e); });
}

}  // namespace

RealMatrix asymptotic_mse_regression(const RegressionModel& model, const TextureLaw& law, double omega, Index n,
                                     const TextureQuadrature& quadrature, TextureExponent rule) {
  check_omega(omega);
  if (n < 1) throw Error("sample size must be positive");
  law.validate();
  const int e = texture_exponent(model, rule);
  if (!law.moment_finite(1.0 - e)) throw Error("nonintegrable texture law");
  const double sigma2 = model.noise_dispersion;
  const double w2 = omega * omega;
  const double num =
      quadrature.expectation([&](double nu2) { return std::pow(w2 / (2.0 * sigma2 * nu2 + w2), e) * nu2; });
  const double den = weight_mass_expectation(quadrature, sigma2, omega, e);
  if (!(den > 0.0)) throw Error("nonintegrable texture law");
  return (num / (den * den)) * (sigma2 / (2.0 * static_cast<double>(n))) * model.B;
}

RealMatrix asymptotic_mse_regression(const RegressionModel& model, const TextureLaw& law, double omega, Index n,
                                     TextureExponent rule) {
  return asymptotic_mse_regression(model, law, omega, n, *TextureQuadrature::shared(law), rule);
}

RealMatrix empirical_asymptotic_mse_regression(const Dataset& data, const RegressionModel& model, double omega) {
  if (data.dim() != model.p()) throw Error("dimension mismatch");
  const MTFunction u = regression_mt_function(model, omega);
  const RealVector logs = mt_log_values(data, u);
  const double log_max = data.empty() ? -INFINITY : logs.maxCoeff();
  if (!std::isfinite(log_max)) throw Error("MT-function annihilates sample");
  const RealVector w = (logs.array() - log_max).exp().matrix();
  const double total = w.sum();
  const ComplexVector mean = weighted_mean(data, w / total);
  const ComplexMatrix h = model.A.adjoint() * (data.samples().colwise() - mean);
  RealMatrix stacked(2 * model.q(), data.size());
  stacked << h.real(), h.imag();
  const RealMatrix zeta = model.B * stacked;
  const RealMatrix weighted = zeta * w.asDiagonal();
  RealMatrix out = weighted * weighted.transpose() / (total * total);
  return 0.5 * (out + out.transpose());
}

SelectionResult select_omega_regression(const Dataset& data, const RegressionModel& model,
                                        const std::vector<double>& grid) {
  if (grid.empty()) throw Error("empty grid");
  SelectionResult out;
  out.omegas = grid;
  out.traces.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
  out.theta_hats.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    try {
      out.theta_hats[i] = mt_gqmle_regression(data, model, grid[i]);
      const double trace = empirical_asymptotic_mse_regression(data, model, grid[i]).trace();
      if (std::isfinite(trace)) out.traces[i] = trace;
    } catch (const Error&) {
      // Degenerate width; left as NaN.
    }
  }
  choose_smallest_trace(out);
  return out;
}

RealVector influence_regression(const ComplexVector& y, const RealVector& theta0, const RegressionModel& model,
                                const TextureLaw& law, double omega, const TextureQuadrature& quadrature,
                                TextureExponent rule) {
  check_omega(omega);
  if (y.size() != model.p() || theta0.size() != model.theta_dim()) throw Error("dimension mismatch");
  law.validate();
  const int e = texture_exponent(model, rule);
  const double den = weight_mass_expectation(quadrature, model.noise_dispersion, omega, e);
  if (!(den > 0.0)) throw Error("nonintegrable texture law");
  const double weight = std::exp(-(model.P_perp * y).squaredNorm() / (omega * omega));
  const RealVector bracket = model.B * realify(model.A.adjoint() * y) - theta0;
  return bracket * (weight / den);
}

RealVector influence_regression(const ComplexVector& y, const RealVector& theta0, const RegressionModel& model,
                                const TextureLaw& law, double omega, TextureExponent rule) {
  return influence_regression(y, theta0, model, law, omega, *TextureQuadrature::shared(law), rule);
}

RegressionMomentModel::RegressionMomentModel(std::shared_ptr<const RegressionModel> model, double r0, double r1,
                                             ParameterSpace space)
    : model_(std::move(model)), r0_(r0), r1_(r1), space_(std::move(space)) {
  if (!model_) throw Error("missing regression model");
  if (!(r1 > 0.0) || r0 < 0.0) throw Error("MT-covariance scalars must satisfy r0 >= 0, r1 > 0");
  if (space_.dim() != model_->theta_dim()) throw Error("parameter space dimension mismatch");
  cov_ = r0_ * model_->P_A;
  cov_.diagonal().array() += r1_;
}

ComplexVector RegressionMomentModel::mean(const RealVector& theta) const { return model_->A * complexify(theta); }

ComplexMatrix RegressionMomentModel::cov(const RealVector&) const { return cov_; }

ComplexVector RegressionMomentModel::d_mean(const RealVector&, Index k) const {
  const Index q = model_->q();
  if (k < 0 || k >= 2 * q) throw Error("coordinate index out of range");
  if (k < q) return model_->A.col(k);
  return Complex(0.0, 1.0) * model_->A.col(k - q);
}

ComplexMatrix RegressionMomentModel::d_cov(const RealVector&, Index) const {
  return ComplexMatrix::Zero(model_->p(), model_->p());
}

ComplexVector RegressionMomentModel::d2_mean(const RealVector&, Index, Index) const {
  return ComplexVector::Zero(model_->p());
}

ComplexMatrix RegressionMomentModel::d2_cov(const RealVector&, Index, Index) const {
  return ComplexMatrix::Zero(model_->p(), model_->p());
}

std::optional<RealVector> RegressionMomentModel::closed_form(const EmpiricalMTMoments& moments) const {
  return regression_closed_form(*model_, moments.mean);
}

ParameterSpace default_regression_space(const RegressionModel& model, double half_width, Index points) {
  return ParameterSpace::uniform(model.theta_dim(), -half_width, half_width, points);
}

std::shared_ptr<RegressionMomentModel> fit_regression_moment_model(std::shared_ptr<const RegressionModel> model,
                                                                   const EmpiricalMTMoments& moments,
                                                                   ParameterSpace space) {
  if (!model) throw Error("missing regression model");
  const double p = static_cast<double>(model->p());
  const double q = static_cast<double>(model->q());
  if (model->p() == model->q()) throw Error("MT-covariance scalars are not identifiable when p == q");
  const double inner = (model->P_A * moments.cov).trace().real();
  const double trace = moments.cov.trace().real();
  const double floor = 1e-12 * std::max(trace / p, 1e-300);
  const double r1 = std::max((trace - inner) / (p - q), floor);
  const double r0 = std::max(inner / q - r1, 0.0);
  return std::make_shared<RegressionMomentModel>(std::move(model), r0, r1, std::move(space));
}

ModelBuilder regression_model_builder(std::shared_ptr<const RegressionModel> model, ParameterSpace space) {
  return [model = std::move(model), space = std::move(space)](const Dataset&, const MTFunction&,
                                                              const EmpiricalMTMoments& moments) {
    return std::shared_ptr<const MomentModel>(fit_regression_moment_model(model, moments, space));
  };
}

RealVector gaussian_regression_score(const ComplexVector& x, const RealVector& theta, const RegressionModel& model) {
  if (x.size() != model.p() || theta.size() != model.theta_dim()) throw Error("dimension mismatch");
  return (2.0 / model.noise_dispersion) * realify(model.A.adjoint() * (x - model.A * complexify(theta)));
}

RealMatrix gaussian_regression_fim(const RegressionModel& model) {
  return (2.0 / model.noise_dispersion) * model.B_inv;
}

RealMatrix gaussian_regression_crlb(const RegressionModel& model, Index n) {
  if (n < 1) throw Error("sample size must be positive");
  return (model.noise_dispersion / (2.0 * static_cast<double>(n))) * model.B;
}

}  // namespace mtqml
