#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mtqml/measure_transform.hpp"
#include "mtqml/types.hpp"

namespace mtqml {

/// Compact box with a rectangular search grid.
///
/// Grid points are enumerated lexicographically with the last coordinate
/// varying fastest; endpoints are included.
class ParameterSpace {
 public:
  ParameterSpace() = default;
  ParameterSpace(RealVector lower, RealVector upper, std::vector<Index> points_per_coordinate);

  /// Same bounds and resolution on every coordinate.
  static ParameterSpace uniform(Index dim, double lower, double upper, Index points);

  Index dim() const noexcept { return lower_.size(); }
  const RealVector& lower() const noexcept { return lower_; }
  const RealVector& upper() const noexcept { return upper_; }
  const std::vector<Index>& points() const noexcept { return points_; }

  Index grid_size() const;
  RealVector grid_point(Index flat_index) const;
  double grid_step(Index k) const;

  bool contains(const RealVector& theta, double tol = 1e-12) const;
  bool on_boundary(const RealVector& theta, double tol = 1e-12) const;
  RealVector clamp(const RealVector& theta) const;

 private:
  RealVector lower_;
  RealVector upper_;
  std::vector<Index> points_;
};

/// Parametric MT-mean and MT-covariance of the data, with derivatives.
class MomentModel {
 public:
  virtual ~MomentModel() = default;

  virtual Index theta_dim() const = 0;
  virtual Index obs_dim() const = 0;

  virtual ComplexVector mean(const RealVector& theta) const = 0;
  virtual ComplexMatrix cov(const RealVector& theta) const = 0;
  virtual ComplexVector d_mean(const RealVector& theta, Index k) const = 0;
  virtual ComplexMatrix d_cov(const RealVector& theta, Index k) const = 0;

  virtual bool has_second_derivatives() const { return false; }
  virtual ComplexVector d2_mean(const RealVector& theta, Index j, Index k) const;
  virtual ComplexMatrix d2_cov(const RealVector& theta, Index j, Index k) const;

  virtual const ParameterSpace& space() const = 0;

  /// Optional direct maximizer of the objective given the empirical moments.
  virtual std::optional<RealVector> closed_form(const EmpiricalMTMoments& moments) const;
};

/// Shared by applications that refit model scalars for every MT-function.
using ModelBuilder =
    std::function<std::shared_ptr<const MomentModel>(const Dataset&, const MTFunction&, const EmpiricalMTMoments&)>;

enum class SearchMethod { automatic, grid };

struct EstimationResult {
  RealVector theta_hat;
  double objective_value = 0.0;
  std::string method;  // "closed-form" or "grid"
  Index grid_index = -1;
  Index evaluations = 0;
  bool profile_objective = false;  // empirical MT-covariance singular; value excludes log det of it
  std::string note;
};

/// -D_LD[Sigma_hat || Sigma(theta)] - ||mu_hat - mu(theta)||^2 over Sigma(theta)^-1.
double objective_j_u(const EmpiricalMTMoments& moments, const MomentModel& model, const RealVector& theta);

/// Argmax of the objective.  Grid ties go to the lowest grid index.
EstimationResult estimate_from_moments(const EmpiricalMTMoments& moments, const MomentModel& model,
                                       SearchMethod method = SearchMethod::automatic);

EstimationResult estimate_mt_gqmle(const Dataset& data, const MTFunction& u, const MomentModel& model,
                                   SearchMethod method = SearchMethod::automatic);

/// The u == 1 special case.
EstimationResult estimate_gqmle(const Dataset& data, const MomentModel& model,
                                SearchMethod method = SearchMethod::automatic);

/// Central differences of the model mean and covariance in coordinate k.
std::pair<ComplexVector, ComplexMatrix> finite_diff_moment_derivatives(const MomentModel& model,
                                                                       const RealVector& theta, Index k,
                                                                       double step);

struct IdentifiabilityReport {
  std::vector<Index> flagged;  // grid indices indistinguishable from theta0
  Index checked = 0;
  bool identifiable() const noexcept { return flagged.empty(); }
};

inline constexpr double kIdentifiabilityTol = 1e-8;

IdentifiabilityReport check_identifiability(const MomentModel& model, const RealVector& theta0,
                                            const ParameterSpace& grid);

}  // namespace mtqml
