#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include <boost/random/mersenne_twister.hpp>

#include "mtqml/types.hpp"

namespace mtqml {

/// Identifies an independent random stream.  The same (seed, stream) pair
/// yields the same sequence on every run and platform.
struct SeededStream {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  SeededStream child(std::uint64_t id) const;
};

/// Engine plus the few distributions the samplers need.  Boost.Random is used
/// because its distributions are specified algorithms, unlike <random>'s.
class Rng {
 public:
  explicit Rng(SeededStream stream);

  double normal();  // N(0, 1)
  double gamma(double shape, double scale);
  double uniform();  // [0, 1)
  bool coin();

 private:
  boost::random::mt19937_64 engine_;
};

enum class NoiseKind { gaussian, t, k };

/// Law of the positive texture nu in W = nu Z.
struct TextureLaw {
  NoiseKind kind = NoiseKind::gaussian;
  double lambda = 0.0;  // dof for t, shape for k

  static TextureLaw gaussian() { return {}; }
  static TextureLaw student_t(double dof) { return {NoiseKind::t, dof}; }
  static TextureLaw k_distributed(double shape) { return {NoiseKind::k, shape}; }

  void validate() const;
  std::string name() const;

  /// Whether E[nu^(2 power)] is finite.
  bool moment_finite(double power) const;
};

NoiseKind parse_noise_kind(const std::string& name);

struct NoiseSpec {
  TextureLaw texture;
  double dispersion = 1.0;  // sigma_Z^2
};

/// i.i.d. circular complex Gaussian vectors with covariance sigma2 * I.
Dataset sample_complex_gaussian(Index p, double sigma2, Index n, SeededStream stream);

/// Texture draws nu (not nu^2).  t: nu^2 = lambda / (2 G), G ~ Gamma(lambda/2, 1);
/// k: nu^2 ~ Gamma(lambda, 1/lambda); gaussian: nu = 1.
RealVector sample_texture(const TextureLaw& law, Index n, SeededStream stream);

/// Equiprobable +/- sqrt(power).
ComplexVector sample_bpsk(double power, Index n, SeededStream stream);

/// X_n = A alpha0 + nu_n Z_n.
Dataset synthesize_regression(const ComplexMatrix& A, const ComplexVector& alpha0, const NoiseSpec& noise, Index n,
                              SeededStream stream);

/// X_n = S_n a(theta0) + nu_n Z_n with BPSK S_n on a p-element half-wavelength ULA.
Dataset synthesize_doa(Index p, double theta0, double signal_power, const NoiseSpec& noise, Index n,
                       SeededStream stream);

/// Fixed-seed Monte Carlo nodes for expectations over the texture law.
class TextureQuadrature {
 public:
  static constexpr Index kDefaultDraws = 1'000'000;
  static constexpr std::uint64_t kDefaultSeed = 0x6d7471756164ULL;

  explicit TextureQuadrature(const TextureLaw& law, Index draws = kDefaultDraws,
                             std::uint64_t seed = kDefaultSeed);

  /// Cached instance with the default draw count and seed; thread-safe.
  static std::shared_ptr<const TextureQuadrature> shared(const TextureLaw& law);

  const TextureLaw& law() const noexcept { return law_; }
  const RealVector& nu_squared() const noexcept { return nu2_; }

  /// Mean of f(nu^2) over the nodes.  Throws if the result is not finite.
  double expectation(const std::function<double(double)>& f) const;

 private:
  TextureLaw law_;
  RealVector nu2_;
};

}  // namespace mtqml
