#pragma once

// Independent reference computations for the tests.  These deliberately avoid
// the library's own routines: determinants and inverses come from dense LU or
// eigen-decompositions, sums are written out elementwise.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mtqml/estimator.hpp"
#include "mtqml/types.hpp"

namespace oracle {

using mtqml::Complex;
using mtqml::ComplexMatrix;
using mtqml::ComplexVector;
using mtqml::Index;
using mtqml::RealMatrix;
using mtqml::RealVector;

/// Small generator for property tests, independent of the library's RNG.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  Index integer(Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi)(engine_); }

  Complex complex_normal() { return {normal() / std::sqrt(2.0), normal() / std::sqrt(2.0)}; }

  ComplexVector vector(Index p, double scale = 1.0) {
    ComplexVector v(p);
    for (Index i = 0; i < p; ++i) v(i) = scale * complex_normal();
    return v;
  }

  ComplexMatrix matrix(Index rows, Index cols) {
    ComplexMatrix m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
      for (Index i = 0; i < rows; ++i) m(i, j) = complex_normal();
    }
    return m;
  }

  /// Hermitian PD with eigenvalues in [lo, hi].
  ComplexMatrix pd_matrix(Index p, double lo = 0.2, double hi = 3.0) {
    const ComplexMatrix q = matrix(p, p).householderQr().householderQ();
    RealVector eig(p);
    for (Index i = 0; i < p; ++i) eig(i) = uniform(lo, hi);
    ComplexMatrix out = q * eig.cast<Complex>().asDiagonal() * q.adjoint();
    return (out + out.adjoint()) / 2.0;
  }

  mtqml::Dataset dataset(Index p, Index n, double scale = 1.0) {
    ComplexMatrix m(p, n);
    for (Index j = 0; j < n; ++j) m.col(j) = vector(p, scale);
    return mtqml::Dataset(m);
  }

 private:
  std::mt19937_64 engine_;
};

/// Sum over eigenvalues of A B^-1 of (lambda - log lambda - 1).
inline double log_det_divergence_eigen(const ComplexMatrix& a, const ComplexMatrix& b) {
  Eigen::GeneralizedSelfAdjointEigenSolver<ComplexMatrix> solver(a, b);
  double d = 0.0;
  for (Index i = 0; i < a.rows(); ++i) {
    const double l = solver.eigenvalues()(i);
    d += l - std::log(l) - 1.0;
  }
  return d;
}

/// sum_ij conj(a_i) C_ij a_j, written out.
inline Complex quadratic_form_sum(const ComplexVector& a, const ComplexMatrix& c) {
  Complex s = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    for (Index j = 0; j < a.size(); ++j) s += std::conj(a(i)) * c(i, j) * a(j);
  }
  return s;
}

/// Weights from direct evaluation of u followed by division by the sum.
inline RealVector direct_weights(const mtqml::Dataset& data, const std::function<double(const ComplexVector&)>& u) {
  RealVector w(data.size());
  for (Index n = 0; n < data.size(); ++n) w(n) = u(data.sample(n));
  return w / w.sum();
}

inline ComplexVector weighted_mean_loop(const mtqml::Dataset& data, const RealVector& w) {
  ComplexVector m = ComplexVector::Zero(data.dim());
  for (Index n = 0; n < data.size(); ++n) m += w(n) * data.sample(n);
  return m;
}

inline ComplexMatrix weighted_cov_loop(const mtqml::Dataset& data, const RealVector& w) {
  const ComplexVector m = weighted_mean_loop(data, w);
  ComplexMatrix c = ComplexMatrix::Zero(data.dim(), data.dim());
  for (Index n = 0; n < data.size(); ++n) {
    const ComplexVector d = data.sample(n) - m;
    for (Index i = 0; i < d.size(); ++i) {
      for (Index j = 0; j < d.size(); ++j) c(i, j) += w(n) * d(i) * std::conj(d(j));
    }
  }
  return c;
}

/// log of the proper complex Gaussian density CN(mu, Sigma) at x, by LU.
inline double log_cn_density(const ComplexVector& x, const ComplexVector& mu, const ComplexMatrix& sigma) {
  const Index p = x.size();
  const Eigen::PartialPivLU<ComplexMatrix> lu(sigma);
  const ComplexVector d = x - mu;
  const double quad = std::real(d.dot(lu.solve(d)));
  const double logdet = std::log(std::abs(lu.determinant()));
  return -static_cast<double>(p) * std::log(M_PI) - logdet - quad;
}

inline double model_log_density(const ComplexVector& x, const RealVector& theta, const mtqml::MomentModel& model) {
  return log_cn_density(x, model.mean(theta), model.cov(theta));
}

/// Central-difference gradient of f at theta.
inline RealVector fd_gradient(const std::function<double(const RealVector&)>& f, const RealVector& theta,
                              double rel_step = 1e-5) {
  RealVector g(theta.size());
  for (Index k = 0; k < theta.size(); ++k) {
    const double h = rel_step * (1.0 + std::abs(theta(k)));
    RealVector plus = theta;
    RealVector minus = theta;
    plus(k) += h;
    minus(k) -= h;
    g(k) = (f(plus) - f(minus)) / (2.0 * h);
  }
  return g;
}

/// Central-difference Jacobian of a vector function.
inline RealMatrix fd_jacobian(const std::function<RealVector(const RealVector&)>& f, const RealVector& theta,
                              double rel_step = 1e-5) {
  const Index m = theta.size();
  RealMatrix j(f(theta).size(), m);
  for (Index k = 0; k < m; ++k) {
    const double h = rel_step * (1.0 + std::abs(theta(k)));
    RealVector plus = theta;
    RealVector minus = theta;
    plus(k) += h;
    minus(k) -= h;
    j.col(k) = (f(plus) - f(minus)) / (2.0 * h);
  }
  return j;
}

/// Objective assembled from elementary operations: eigen-based divergence and
/// an LU-based Mahalanobis term.
inline double objective_oracle(const ComplexVector& mu_hat, const ComplexMatrix& sigma_hat, const ComplexVector& mu,
                               const ComplexMatrix& sigma) {
  const ComplexVector d = mu_hat - mu;
  const double quad = std::real(d.dot(sigma.partialPivLu().solve(d)));
  return -log_det_divergence_eigen(sigma_hat, sigma) - quad;
}

/// Exhaustive scan returning the first maximizer.
inline Index brute_force_argmax(const std::vector<double>& values) {
  Index best = 0;
  for (Index i = 1; i < static_cast<Index>(values.size()); ++i) {
    if (values[static_cast<std::size_t>(i)] > values[static_cast<std::size_t>(best)]) best = i;
  }
  return best;
}

/// Least-squares slope of log y against log x.
inline double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double sx = 0;
  double sy = 0;
  double sxx = 0;
  double sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

template <typename A, typename B>
double rel_err_norm(const A& a, const B& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace oracle
