#include "mtqml/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mtqml/core_stats.hpp"

namespace mtqml {

ParameterSpace::ParameterSpace(RealVector lower, RealVector upper, std::vector<Index> points_per_coordinate)
    : lower_(std::move(lower)), upper_(std::move(upper)), points_(std::move(points_per_coordinate)) {
  if (lower_.size() != upper_.size() || static_cast<Index>(points_.size()) != lower_.size()) {
    throw Error("dimension mismatch");
  }
  for (Index k = 0; k < lower_.size(); ++k) {
    if (!std::isfinite(lower_(k)) || !std::isfinite(upper_(k))) throw Error("parameter bounds must be finite");
    if (lower_(k) > upper_(k)) throw Error("parameter lower bound exceeds upper bound");
    if (points_[k] < 0) throw Error("negative grid resolution");
  }
}

ParameterSpace ParameterSpace::uniform(Index dim, double lower, double upper, Index points) {
  return ParameterSpace(RealVector::Constant(dim, lower), RealVector::Constant(dim, upper),
                        std::vector<Index>(static_cast<std::size_t>(dim), points));
}

Index ParameterSpace::grid_size() const {
  if (points_.empty()) return 0;
  Index total = 1;
  for (Index n : points_) total *= n;
  return total;
}

double ParameterSpace::grid_step(Index k) const {
  return points_[k] > 1 ? (upper_(k) - lower_(k)) / static_cast<double>(points_[k] - 1) : 0.0;
}

RealVector ParameterSpace::grid_point(Index flat_index) const {
  if (flat_index < 0 || flat_index >= grid_size()) throw Error("grid index out of range");
  RealVector theta(dim());
  for (Index k = dim() - 1; k >= 0; --k) {
    const Index n = points_[k];
    const Index i = flat_index % n;
    flat_index /= n;
    theta(k) = n > 1 ? lower_(k) + (upper_(k) - lower_(k)) * static_cast<double>(i) / static_cast<double>(n - 1)
                     : lower_(k);
  }
  return theta;
}

bool ParameterSpace::contains(const RealVector& theta, double tol) const {
  if (theta.size() != dim()) return false;
  for (Index k = 0; k < dim(); ++k) {
    if (theta(k) < lower_(k) - tol || theta(k) > upper_(k) + tol) return false;
  }
  return true;
}

bool ParameterSpace::on_boundary(const RealVector& theta, double tol) const {
  for (Index k = 0; k < dim(); ++k) {
    if (std::abs(theta(k) - lower_(k)) <= tol || std::abs(theta(k) - upper_(k)) <= tol) return true;
  }
  return false;
}

RealVector ParameterSpace::clamp(const RealVector& theta) const {
  return theta.cwiseMax(lower_).cwiseMin(upper_);
}

ComplexVector MomentModel::d2_mean(const RealVector&, Index, Index) const {
  throw Error("model provides no second derivatives");
}

ComplexMatrix MomentModel::d2_cov(const RealVector&, Index, Index) const {
  throw Error("model provides no second derivatives");
}

std::optional<RealVector> MomentModel::closed_form(const EmpiricalMTMoments&) const { return std::nullopt; }

double objective_j_u(const EmpiricalMTMoments& moments, const MomentModel& model, const RealVector& theta) {
  if (theta.size() != model.theta_dim()) throw Error("dimension mismatch");
  const ComplexMatrix sigma = model.cov(theta);
  const PdFactor factor(sigma);
  const double divergence = log_det_divergence(moments.cov, sigma);
  const double mahalanobis = inverse_weighted_norm_sq(moments.mean - model.mean(theta), factor);
  return -divergence - mahalanobis;
}

namespace {

// Objective up to the additive constant log det Sigma_hat + p, usable when
// Sigma_hat is singular.
double profile_objective(const EmpiricalMTMoments& moments, const MomentModel& model, const RealVector& theta) {
  const PdFactor factor(model.cov(theta));
  const double trace = factor.solve(moments.cov).trace().real();
  return -trace - factor.log_det() - inverse_weighted_norm_sq(moments.mean - model.mean(theta), factor);
}

// log det Sigma_hat when it is numerically positive definite.
std::optional<double> empirical_log_det(const ComplexMatrix& cov) {
  Eigen::LLT<ComplexMatrix> llt(cov);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const double value = 2.0 * llt.matrixLLT().diagonal().real().array().log().sum();
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

void finish_objective(EstimationResult& result, const EmpiricalMTMoments& moments, const MomentModel& model) {
  const auto log_det = empirical_log_det(moments.cov);
  if (log_det) {
    result.objective_value = objective_j_u(moments, model, result.theta_hat);
    result.profile_objective = false;
  } else {
    result.objective_value = profile_objective(moments, model, result.theta_hat);
    result.profile_objective = true;
    if (!result.note.empty()) result.note += "; ";
    result.note += "empirical MT-covariance singular, objective reported up to a constant";
  }
}

}  // namespace

EstimationResult estimate_from_moments(const EmpiricalMTMoments& moments, const MomentModel& model,
                                       SearchMethod method) {
  if (moments.mean.size() != model.obs_dim()) throw Error("dimension mismatch");
  const ParameterSpace& space = model.space();
  if (space.dim() != model.theta_dim()) throw Error("parameter space dimension mismatch");
  EstimationResult result;

  if (method == SearchMethod::automatic) {
    if (auto theta = model.closed_form(moments)) {
      result.method = "closed-form";
      result.evaluations = 1;
      if (!space.contains(*theta)) {
        result.theta_hat = space.clamp(*theta);
        result.note = "closed-form solution clamped to parameter space";
      } else {
        result.theta_hat = *theta;
      }
      finish_objective(result, moments, model);
      return result;
    }
  }

  const Index total = space.grid_size();
  if (total <= 0) throw Error("empty grid");
  std::vector<double> values(static_cast<std::size_t>(total));
#pragma omp parallel for schedule(static) if (total > 4096)
  for (Index i = 0; i < total; ++i) {
    values[static_cast<std::size_t>(i)] = profile_objective(moments, model, space.grid_point(i));
  }
  Index best = 0;
  for (Index i = 1; i < total; ++i) {
    if (values[static_cast<std::size_t>(i)] > values[static_cast<std::size_t>(best)]) best = i;
  }
  result.method = "grid";
  result.grid_index = best;
  result.evaluations = total;
  result.theta_hat = space.grid_point(best);
  finish_objective(result, moments, model);
  return result;
}

EstimationResult estimate_mt_gqmle(const Dataset& data, const MTFunction& u, const MomentModel& model,
                                   SearchMethod method) {
  return estimate_from_moments(empirical_mt_moments(data, u), model, method);
}

EstimationResult estimate_gqmle(const Dataset& data, const MomentModel& model, SearchMethod method) {
  return estimate_mt_gqmle(data, MTFunction::constant(), model, method);
}

std::pair<ComplexVector, ComplexMatrix> finite_diff_moment_derivatives(const MomentModel& model,
                                                                       const RealVector& theta, Index k,
                                                                       double step) {
  if (!(step > 0.0)) throw Error("finite-difference step must be positive");
  if (k < 0 || k >= model.theta_dim()) throw Error("coordinate index out of range");
  RealVector plus = theta;
  RealVector minus = theta;
  plus(k) += step;
  minus(k) -= step;
  const double scale = 1.0 / (2.0 * step);
  ComplexVector dm = (model.mean(plus) - model.mean(minus)) * scale;
  ComplexMatrix dc = hermitize((model.cov(plus) - model.cov(minus)) * scale);
  return {std::move(dm), std::move(dc)};
}

IdentifiabilityReport check_identifiability(const MomentModel& model, const RealVector& theta0,
                                            const ParameterSpace& grid) {
  IdentifiabilityReport report;
  const ComplexVector mean0 = model.mean(theta0);
  const ComplexMatrix cov0 = model.cov(theta0);
  const Index total = grid.grid_size();
  for (Index i = 0; i < total; ++i) {
    const RealVector theta = grid.grid_point(i);
    if ((theta - theta0).norm() <= 1e-12) continue;
    ++report.checked;
    if ((model.mean(theta) - mean0).norm() < kIdentifiabilityTol &&
        (model.cov(theta) - cov0).norm() < kIdentifiabilityTol) {
      report.flagged.push_back(i);
    }
  }
  return report;
}

}  // namespace mtqml
