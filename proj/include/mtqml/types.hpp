#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mtqml {

using Complex = std::complex<double>;
using Index = Eigen::Index;

using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A batch of N complex p-vectors, stored column-wise (p x N).
class Dataset {
 public:
  Dataset() = default;

  /// Throws if any entry is NaN or infinite.
  explicit Dataset(ComplexMatrix samples);

  const ComplexMatrix& samples() const noexcept { return samples_; }
  Index size() const noexcept { return samples_.cols(); }
  Index dim() const noexcept { return samples_.rows(); }
  bool empty() const noexcept { return samples_.cols() == 0; }

  auto sample(Index n) const { return samples_.col(n); }

  /// Each sample repeated `times` times in a row.
  Dataset replicated(Index times) const;

 private:
  ComplexMatrix samples_;
};

}  // namespace mtqml
