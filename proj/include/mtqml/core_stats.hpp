#pragma once

#include "mtqml/types.hpp"

namespace mtqml {

/// (1/N) sum_n X_n.
ComplexVector sample_mean(const Dataset& data);

/// Biased (1/N) or unbiased (1/(N-1)) sample covariance, Hermitian by construction.
ComplexMatrix sample_covariance(const Dataset& data, bool unbiased = false);

/// (A + A^H) / 2.
ComplexMatrix hermitize(const ComplexMatrix& a);

bool is_hermitian(const ComplexMatrix& a, double rel_tol = 1e-12);

/// Cholesky factor of a Hermitian PD matrix.
///
/// On failure a single jitter of 1e-10 * trace / p is added to the diagonal
/// and the factorization retried; a second failure throws
/// "matrix not positive definite".
class PdFactor {
 public:
  explicit PdFactor(const ComplexMatrix& a);

  ComplexMatrix solve(const ComplexMatrix& b) const { return llt_.solve(b); }
  ComplexVector solve(const ComplexVector& b) const { return llt_.solve(b); }
  ComplexMatrix inverse() const;
  double log_det() const;
  bool jittered() const noexcept { return jittered_; }
  Index dim() const noexcept { return llt_.matrixLLT().rows(); }

 private:
  Eigen::LLT<ComplexMatrix> llt_;
  bool jittered_ = false;
};

/// tr[A B^-1] - log det[A B^-1] - p.  Zero iff A == B.
double log_det_divergence(const ComplexMatrix& a, const ComplexMatrix& b);

/// a^H C a (real part; C must be Hermitian PD).
double weighted_norm_sq(const ComplexVector& a, const ComplexMatrix& c);

/// Same quadratic form, reusing an existing factorization of C^-1's argument:
/// returns a^H B^-1 a where `b` factors B.
double inverse_weighted_norm_sq(const ComplexVector& a, const PdFactor& b);

}  // namespace mtqml
