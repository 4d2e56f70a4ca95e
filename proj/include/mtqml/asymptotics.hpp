#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "mtqml/estimator.hpp"
#include "mtqml/measure_transform.hpp"
#include "mtqml/types.hpp"

namespace mtqml {

/// Gradient in theta of the log Gaussian density with the model's MT-mean and
/// MT-covariance, evaluated at x.
RealVector psi_u(const ComplexVector& x, const RealVector& theta, const MomentModel& model);

/// Hessian of the same log density.  Analytic when the model supplies second
/// derivatives, otherwise central differences of psi_u.
RealMatrix gamma_u(const ComplexVector& x, const RealVector& theta, const MomentModel& model);

/// Always the finite-difference path, step 1e-5 * (1 + |theta_k|).
RealMatrix gamma_u_finite_difference(const ComplexVector& x, const RealVector& theta, const MomentModel& model);

/// log of the Gaussian density with the model moments (used as a test oracle).
double log_gaussian_density(const ComplexVector& x, const RealVector& theta, const MomentModel& model);

struct SandwichMatrices {
  RealMatrix G;  // N^-1 sum u^2 psi psi^T
  RealMatrix F;  // -N^-1 sum u Gamma
  RealMatrix C;  // N^-1 F^-1 G F^-1
  /// G and F are reported at the true scale of u; C is computed from u divided
  /// by its sample maximum, exp(log_u_max), which leaves C unchanged.
  double log_u_max = 0.0;
  bool on_boundary = false;
  double trace() const { return C.trace(); }
};

SandwichMatrices sandwich(const Dataset& data, const RealVector& theta_hat, const MomentModel& model,
                          const MTFunction& u);

/// || N^-1 sum u(X_n) psi_u(X_n; theta) ||.
double score_identity_check(const Dataset& data, const RealVector& theta, const MomentModel& model,
                            const MTFunction& u);

/// F^-1 psi_u(y; theta0) u(y).
RealVector influence(const ComplexVector& y, const RealVector& theta0, const MomentModel& model,
                     const MTFunction& u, const RealMatrix& F);

struct SelectionResult {
  double omega_opt = std::numeric_limits<double>::quiet_NaN();
  Index index = -1;
  std::vector<double> omegas;
  std::vector<double> traces;  // NaN where the grid point was degenerate
  std::vector<RealVector> theta_hats;
};

/// Sets index and omega_opt from the traces: smallest finite trace, ties to
/// the smallest omega.  Throws when every trace is NaN.
void choose_smallest_trace(SelectionResult& selection);

using MTFamily = std::function<MTFunction(double)>;

/// Minimizes tr C_hat over the grid, re-estimating theta for every omega on
/// the same data.  Ties go to the smallest omega.
SelectionResult select_mt_parameter(const Dataset& data, const MTFamily& family, const std::vector<double>& grid,
                                    const ModelBuilder& builder, SearchMethod method = SearchMethod::automatic);

/// Score of a known likelihood, eta(x; theta).
using ScoreFunction = std::function<RealVector(const ComplexVector&, const RealVector&)>;

/// Sample average of eta eta^T.  Throws "likelihood unknown" for an empty score.
RealMatrix fisher_information(const ScoreFunction& score, const Dataset& data, const RealVector& theta);

/// Throws "F matrix singular" when F cannot be inverted reliably.
RealMatrix checked_inverse(const RealMatrix& F);

}  // namespace mtqml
