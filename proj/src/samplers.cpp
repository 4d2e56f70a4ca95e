#include "mtqml/samplers.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <utility>

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "mtqml/doa.hpp"

namespace mtqml {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

SeededStream SeededStream::child(std::uint64_t id) const {
  return {seed, splitmix64(stream ^ splitmix64(id + 0x51ed2701ULL))};
}

Rng::Rng(SeededStream stream) : engine_(splitmix64(splitmix64(stream.seed) ^ stream.stream)) {}

double Rng::normal() { return boost::random::normal_distribution<double>(0.0, 1.0)(engine_); }

double Rng::gamma(double shape, double scale) {
  return boost::random::gamma_distribution<double>(shape, scale)(engine_);
}

double Rng::uniform() { return boost::random::uniform_01<double>()(engine_); }

bool Rng::coin() { return boost::random::bernoulli_distribution<double>(0.5)(engine_); }

void TextureLaw::validate() const {
  if (kind != NoiseKind::gaussian && !(lambda > 0.0 && std::isfinite(lambda))) {
    throw Error("texture parameter must be positive");
  }
}

std::string TextureLaw::name() const {
  switch (kind) {
    case NoiseKind::gaussian:
      return "gaussian";
    case NoiseKind::t:
      return "t";
    case NoiseKind::k:
      return "k";
  }
  return "unknown";
}

bool TextureLaw::moment_finite(double power) const {
  // t: nu^2 = lambda / (2G) has a tail ~ (nu^2)^(-lambda/2 - 1); k and gaussian have all moments.
  if (kind == NoiseKind::t && power > 0.0) return power < lambda / 2.0;
  return true;
}

NoiseKind parse_noise_kind(const std::string& name) {
  if (name == "gaussian") return NoiseKind::gaussian;
  if (name == "t") return NoiseKind::t;
  if (name == "k") return NoiseKind::k;
  throw Error("unsupported noise kind '" + name + "'");
}

Dataset sample_complex_gaussian(Index p, double sigma2, Index n, SeededStream stream) {
  if (!(sigma2 > 0.0)) throw Error("noise variance must be positive");
  if (p < 1 || n < 0) throw Error("invalid dimensions");
  Rng rng(stream);
  const double sd = std::sqrt(sigma2 / 2.0);
  ComplexMatrix x(p, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < p; ++i) {
      const double re = rng.normal();
      const double im = rng.normal();
      x(i, j) = Complex(sd * re, sd * im);
    }
  }
  return Dataset(std::move(x));
}

namespace {

double draw_nu_squared(const TextureLaw& law, Rng& rng) {
  switch (law.kind) {
    case NoiseKind::gaussian:
      return 1.0;
    case NoiseKind::t: {
      // Guard against G underflowing to 0 for very small dof.
      const double g = std::max(rng.gamma(law.lambda / 2.0, 1.0), 1e-300);
      return law.lambda / (2.0 * g);
    }
    case NoiseKind::k:
      return rng.gamma(law.lambda, 1.0 / law.lambda);
  }
  throw Error("unsupported noise kind");
}

}  // namespace

RealVector sample_texture(const TextureLaw& law, Index n, SeededStream stream) {
  law.validate();
  Rng rng(stream);
  RealVector nu(n);
  for (Index i = 0; i < n; ++i) nu(i) = std::sqrt(draw_nu_squared(law, rng));
  return nu;
}

ComplexVector sample_bpsk(double power, Index n, SeededStream stream) {
  if (!(power > 0.0)) throw Error("signal power must be positive");
  Rng rng(stream);
  const double amp = std::sqrt(power);
  ComplexVector s(n);
  for (Index i = 0; i < n; ++i) s(i) = rng.coin() ? amp : -amp;
  return s;
}

namespace {

ComplexMatrix spherical_noise(Index p, const NoiseSpec& noise, Index n, SeededStream stream) {
  noise.texture.validate();
  const RealVector nu = sample_texture(noise.texture, n, stream.child(1));
  ComplexMatrix w = sample_complex_gaussian(p, noise.dispersion, n, stream.child(2)).samples();
  for (Index j = 0; j < n; ++j) w.col(j) *= nu(j);
  return w;
}

}  // namespace

Dataset synthesize_regression(const ComplexMatrix& A, const ComplexVector& alpha0, const NoiseSpec& noise, Index n,
                              SeededStream stream) {
  if (A.cols() != alpha0.size()) throw Error("dimension mismatch");
  ComplexMatrix x = spherical_noise(A.rows(), noise, n, stream);
  x.colwise() += A * alpha0;
  return Dataset(std::move(x));
}

Dataset synthesize_doa(Index p, double theta0, double signal_power, const NoiseSpec& noise, Index n,
                       SeededStream stream) {
  const ComplexVector s = sample_bpsk(signal_power, n, stream.child(3));
  const ComplexVector a = steering(p, theta0, 0);
  ComplexMatrix x = spherical_noise(p, noise, n, stream);
  x += a * s.transpose();
  return Dataset(std::move(x));
}

TextureQuadrature::TextureQuadrature(const TextureLaw& law, Index draws, std::uint64_t seed) : law_(law) {
  law.validate();
  if (law.kind == NoiseKind::gaussian) {
    nu2_ = RealVector::Ones(1);
    return;
  }
  if (draws < 1) throw Error("quadrature needs at least one draw");
  Rng rng(SeededStream{seed, 0});
  nu2_.resize(draws);
  for (Index i = 0; i < draws; ++i) nu2_(i) = draw_nu_squared(law, rng);
}

std::shared_ptr<const TextureQuadrature> TextureQuadrature::shared(const TextureLaw& law) {
  static std::mutex mutex;
  static std::map<std::pair<int, double>, std::shared_ptr<const TextureQuadrature>> cache;
  const std::pair<int, double> key{static_cast<int>(law.kind), law.kind == NoiseKind::gaussian ? 0.0 : law.lambda};
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto q = std::make_shared<const TextureQuadrature>(law);
  cache.emplace(key, q);
  return q;
}

double TextureQuadrature::expectation(const std::function<double(double)>& f) const {
  double total = 0.0;
  for (Index i = 0; i < nu2_.size(); ++i) total += f(nu2_(i));
  const double value = total / static_cast<double>(nu2_.size());
  if (!std::isfinite(value)) throw Error("texture expectation is not finite");
  return value;
}

}  // namespace mtqml
