#include "mtqml/core_stats.hpp"

#include <cmath>
#include <string>

namespace mtqml {

Dataset::Dataset(ComplexMatrix samples) : samples_(std::move(samples)) {
  for (Index j = 0; j < samples_.cols(); ++j) {
    for (Index i = 0; i < samples_.rows(); ++i) {
      const Complex z = samples_(i, j);
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
        throw Error("dataset contains a non-finite entry at sample " + std::to_string(j));
      }
    }
  }
}

Dataset Dataset::replicated(Index times) const {
  ComplexMatrix out(dim(), size() * times);
  for (Index n = 0; n < size(); ++n) {
    for (Index t = 0; t < times; ++t) out.col(n * times + t) = samples_.col(n);
  }
  return Dataset(std::move(out));
}

ComplexVector sample_mean(const Dataset& data) {
  if (data.empty()) throw Error("empty dataset");
  return data.samples().rowwise().sum() / static_cast<double>(data.size());
}

ComplexMatrix hermitize(const ComplexMatrix& a) { return 0.5 * (a + a.adjoint()); }

bool is_hermitian(const ComplexMatrix& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(a.norm(), 1e-300);
  return (a - a.adjoint()).norm() <= rel_tol * scale;
}

ComplexMatrix sample_covariance(const Dataset& data, bool unbiased) {
  const Index n = data.size();
  if (n == 0) throw Error("empty dataset");
  if (unbiased && n < 2) throw Error("insufficient samples: unbiased covariance needs N >= 2");
  const ComplexVector mean = sample_mean(data);
  const ComplexMatrix centered = data.samples().colwise() - mean;
  const double denom = unbiased ? static_cast<double>(n - 1) : static_cast<double>(n);
  return hermitize(centered * centered.adjoint() / denom);
}

PdFactor::PdFactor(const ComplexMatrix& a) {
  if (a.rows() != a.cols()) throw Error("matrix not square");
  llt_.compute(a);
  if (llt_.info() == Eigen::Success) return;
  const double trace = a.trace().real();
  const double jitter = 1e-10 * trace / static_cast<double>(a.rows());
  if (jitter > 0.0) {
    ComplexMatrix shifted = a;
    shifted.diagonal().array() += jitter;
    llt_.compute(shifted);
    if (llt_.info() == Eigen::Success) {
      jittered_ = true;
      return;
    }
  }
  throw Error("matrix not positive definite");
}

ComplexMatrix PdFactor::inverse() const {
  return hermitize(llt_.solve(ComplexMatrix::Identity(dim(), dim())));
}

double PdFactor::log_det() const {
  return 2.0 * llt_.matrixLLT().diagonal().real().array().log().sum();
}

double log_det_divergence(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error("dimension mismatch");
  const PdFactor fa(a);
  const PdFactor fb(b);
  const double p = static_cast<double>(a.rows());
  // tr[A B^-1] = tr[B^-1 A] for Hermitian inputs.
  const double trace = fb.solve(a).trace().real();
  const double value = trace - (fa.log_det() - fb.log_det()) - p;
  return std::max(value, 0.0);
}

double weighted_norm_sq(const ComplexVector& a, const ComplexMatrix& c) {
  if (c.rows() != a.size() || c.cols() != a.size()) throw Error("dimension mismatch");
  return a.dot(c * a).real();
}

double inverse_weighted_norm_sq(const ComplexVector& a, const PdFactor& b) {
  if (b.dim() != a.size()) throw Error("dimension mismatch");
  return a.dot(b.solve(a)).real();
}

}  // namespace mtqml
