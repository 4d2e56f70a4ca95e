#include "mtqml/doa.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include "mtqml/core_stats.hpp"

namespace mtqml {

namespace {

constexpr double kPi = std::numbers::pi;

// ((v2 + w^2) / w^2)^(-p-2) exp(-s2 / (v2 + w^2)) in a form that stays finite
// for very large widths.
double h_kernel(double s2, double v2, double omega, Index p) {
  const double w2 = omega * omega;
  return std::exp(-static_cast<double>(p + 2) * std::log1p(v2 / w2) - s2 / (v2 + w2));
}

double array_factor(Index p, double theta0) {
  const double c = std::cos(theta0);
  const double pd = static_cast<double>(p);
  return kPi * kPi * c * c * (pd * pd - 1.0);
}

void check_omega(double omega) {
  if (!(omega > 0.0)) throw Error("MT-function width must be positive");
}

}  // namespace

double UlaModel::lower() const { return -kPi / 2.0; }
double UlaModel::upper() const { return kPi / 2.0 - delta; }

void UlaModel::validate() const {
  if (p < 2) throw Error("ULA needs at least two sensors");
  if (!(noise_dispersion > 0.0)) throw Error("noise dispersion must be positive");
  if (!(signal_power > 0.0)) throw Error("signal power must be positive");
  if (!(delta > 0.0)) throw Error("boundary gap must be positive");
  texture.validate();
}

UlaModel UlaModel::from_snr_db(Index p, double snr_db, TextureLaw texture, double noise_dispersion) {
  UlaModel m;
  m.p = p;
  m.noise_dispersion = noise_dispersion;
  m.signal_power = noise_dispersion * std::pow(10.0, snr_db / 10.0);
  m.texture = texture;
  m.validate();
  return m;
}

ComplexVector steering(Index p, double theta, int order) {
  if (order < 0 || order > 2) throw Error("steering derivative order must be 0, 1 or 2");
  if (p < 1) throw Error("invalid array size");
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  ComplexVector a(p);
  for (Index k = 0; k < p; ++k) {
    const double kk = static_cast<double>(k);
    const Complex base = std::polar(1.0, -kPi * kk * s);
    const Complex d1(0.0, -kPi * kk * c);  // d/dtheta of the phase
    switch (order) {
      case 0:
        a(k) = base;
        break;
      case 1:
        a(k) = d1 * base;
        break;
      default:
        a(k) = (Complex(0.0, kPi * kk * s) + d1 * d1) * base;
        break;
    }
  }
  return a;
}

DoaGrid::DoaGrid(Index p, Index points, double delta) {
  if (points < 2) throw Error("DOA grid needs at least two points");
  if (!(delta > 0.0)) throw Error("boundary gap must be positive");
  angles_ = RealVector::LinSpaced(points, -kPi / 2.0, kPi / 2.0 - delta);
  steering_.resize(p, points);
  for (Index i = 0; i < points; ++i) steering_.col(i) = steering(p, angles_(i), 0);
}

DoaGrid::DoaGrid(Index p, RealVector angles) : angles_(std::move(angles)) {
  if (angles_.size() < 1) throw Error("empty grid");
  steering_.resize(p, angles_.size());
  for (Index i = 0; i < angles_.size(); ++i) steering_.col(i) = steering(p, angles_(i), 0);
}

std::shared_ptr<const DoaGrid> shared_doa_grid(Index p, Index points, double delta) {
  static std::mutex mutex;
  static std::map<std::tuple<Index, Index, double>, std::shared_ptr<const DoaGrid>> cache;
  const auto key = std::make_tuple(p, points, delta);
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto grid = std::make_shared<const DoaGrid>(p, points, delta);
  cache.emplace(key, grid);
  return grid;
}

Index SpectrumCurve::argmax() const {
  if (values.size() == 0) throw Error("empty spectrum");
  Index best = 0;
  for (Index i = 1; i < values.size(); ++i) {
    if (values(i) > values(best)) best = i;
  }
  return best;
}

SpectrumCurve spectrum_from_matrix(const ComplexMatrix& c, const DoaGrid& grid) {
  if (c.rows() != grid.p() || c.cols() != grid.p()) throw Error("dimension mismatch");
  const ComplexMatrix& s = grid.steering_matrix();
  const ComplexMatrix cs = c * s;
  SpectrumCurve out;
  out.angles = grid.angles();
  out.values.resize(grid.size());
  for (Index i = 0; i < grid.size(); ++i) {
    const Complex v = s.col(i).dot(cs.col(i));
    out.values(i) = v.real();
    if (v.real() != 0.0) out.max_imag_ratio = std::max(out.max_imag_ratio, std::abs(v.imag() / v.real()));
  }
  return out;
}

ComplexMatrix mt_second_moment(const Dataset& data, const MTFunction& u) {
  const RealVector w = mt_weights(data, u);
  const ComplexMatrix scaled = data.samples() * w.cast<Complex>().asDiagonal();
  return hermitize(scaled * data.samples().adjoint());
}

SpectrumCurve mt_spectrum(const Dataset& data, const MTFunction& u, const DoaGrid& grid) {
  return spectrum_from_matrix(mt_second_moment(data, u), grid);
}

SpectrumCurve mt_spectrum(const Dataset& data, double omega, const DoaGrid& grid) {
  return mt_spectrum(data, gaussian_mt_function(omega), grid);
}

double estimate_doa(const Dataset& data, const MTFunction& u, const DoaGrid& grid) {
  const SpectrumCurve curve = mt_spectrum(data, u, grid);
  return curve.angles(curve.argmax());
}

double estimate_doa(const Dataset& data, double omega, const DoaGrid& grid) {
  return estimate_doa(data, gaussian_mt_function(omega), grid);
}

double estimate_doa(const Dataset& data, double omega, Index grid_points) {
  return estimate_doa(data, omega, *shared_doa_grid(data.dim(), grid_points));
}

double asymptotic_mse_doa(const UlaModel& model, double theta0, double omega, Index n,
                          const TextureQuadrature& quadrature) {
  model.validate();
  check_omega(omega);
  if (n < 1) throw Error("sample size must be positive");
  if (theta0 < model.lower() || theta0 > model.upper()) throw Error("angle outside parameter space");
  const Index p = model.p;
  const double pd = static_cast<double>(p);
  const double s2 = model.signal_power;  // |S|^2 is constant for BPSK
  const double z2 = model.noise_dispersion;
  const double w2 = omega * omega;
  const double num = quadrature.expectation([&](double nu2) {
    const double v2 = nu2 * z2;
    return (v2 * v2 + v2 * w2 * pd / (2.0 * v2 + w2) * s2) * h_kernel(2.0 * pd * s2, 2.0 * v2, omega, p);
  });
  const double den = quadrature.expectation([&](double nu2) { return pd * s2 * h_kernel(pd * s2, nu2 * z2, omega, p); });
  if (!(den > 0.0)) throw Error("divergent texture expectation");
  const double value = num / (den * den) * 6.0 / (array_factor(p, theta0) * static_cast<double>(n));
  if (!std::isfinite(value)) throw Error("divergent texture expectation");
  return value;
}

double asymptotic_mse_doa(const UlaModel& model, double theta0, double omega, Index n) {
  return asymptotic_mse_doa(model, theta0, omega, n, *TextureQuadrature::shared(model.texture));
}

double empirical_asymptotic_mse_doa(const Dataset& data, double theta_hat, const MTFunction& u) {
  if (data.empty()) throw Error("empty dataset");
  const Index p = data.dim();
  const RealVector logs = mt_log_values(data, u);
  const double log_max = logs.maxCoeff();
  if (!std::isfinite(log_max)) throw Error("MT-function annihilates sample");
  const ComplexVector a = steering(p, theta_hat, 0);
  const ComplexVector da = steering(p, theta_hat, 1);
  const ComplexVector dda = steering(p, theta_hat, 2);
  const ComplexMatrix& x = data.samples();
  const ComplexVector xa = x.adjoint() * a;      // conj(a^H x_n)
  const ComplexVector xda = x.adjoint() * da;    // conj(da^H x_n)
  const ComplexVector xdda = x.adjoint() * dda;  // conj(dda^H x_n)
  double num = 0.0;
  double den = 0.0;
  for (Index n = 0; n < data.size(); ++n) {
    const double w = std::exp(logs(n) - log_max);
    // da^H x x^H a = conj(xda) * xa
    const double alpha = 2.0 * (std::conj(xda(n)) * xa(n)).real();
    const double beta = 2.0 * ((std::conj(xdda(n)) * xa(n)).real() + std::norm(xda(n)));
    num += w * w * alpha * alpha;
    den += w * beta;
  }
  if (den == 0.0 || !std::isfinite(den)) throw Error("degenerate curvature");
  return num / (den * den);
}

double empirical_asymptotic_mse_doa(const Dataset& data, double theta_hat, double omega) {
  return empirical_asymptotic_mse_doa(data, theta_hat, gaussian_mt_function(omega));
}

SelectionResult select_omega_doa(const Dataset& data, const std::vector<double>& grid, const DoaGrid& angles) {
  if (grid.empty()) throw Error("empty grid");
  SelectionResult out;
  out.omegas = grid;
  out.traces.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
  out.theta_hats.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    try {
      const MTFunction u = gaussian_mt_function(grid[i]);
      const double theta = estimate_doa(data, u, angles);
      out.theta_hats[i] = RealVector::Constant(1, theta);
      const double value = empirical_asymptotic_mse_doa(data, theta, u);
      if (std::isfinite(value)) out.traces[i] = value;
    } catch (const Error&) {
      // Degenerate width; left as NaN.
    }
  }
  choose_smallest_trace(out);
  return out;
}

double influence_doa(const ComplexVector& y, double theta0, const UlaModel& model, double omega,
                     const TextureQuadrature& quadrature) {
  model.validate();
  check_omega(omega);
  if (y.size() != model.p) throw Error("dimension mismatch");
  const Index p = model.p;
  const double pd = static_cast<double>(p);
  const double s2 = model.signal_power;
  const double z2 = model.noise_dispersion;
  const double w2 = omega * omega;
  const double num = quadrature.expectation([&](double nu2) {
    const double g = 1.0 + nu2 * z2 / w2;
    return g * g * h_kernel(pd * s2, nu2 * z2, omega, p);
  });
  const double den = quadrature.expectation([&](double nu2) { return s2 * h_kernel(pd * s2, nu2 * z2, omega, p); });
  if (!(den > 0.0)) throw Error("divergent texture expectation");
  const double weight = std::exp(-y.squaredNorm() / w2);
  if (weight == 0.0) return 0.0;
  const ComplexVector a = steering(p, theta0, 0);
  const ComplexVector da = steering(p, theta0, 1);
  const double quad = (da.dot(y) * std::conj(a.dot(y))).real();  // Re{da^H y y^H a}
  return num / den * 12.0 * quad * weight / (array_factor(p, theta0) * pd * pd);
}

double influence_doa(const ComplexVector& y, double theta0, const UlaModel& model, double omega) {
  return influence_doa(y, theta0, model, omega, *TextureQuadrature::shared(model.texture));
}

double crlb_doa(const UlaModel& model, double theta0) {
  model.validate();
  const double pd = static_cast<double>(model.p);
  const double z2 = model.noise_dispersion;
  const double s2 = model.signal_power;
  return 6.0 * z2 * (z2 + s2 * pd) / (s2 * s2 * array_factor(model.p, theta0) * pd * pd);
}

double gaussian_doa_fim(const UlaModel& model, double theta) {
  model.validate();
  const ComplexVector a = steering(model.p, theta, 0);
  const ComplexVector da = steering(model.p, theta, 1);
  ComplexMatrix sigma = model.signal_power * a * a.adjoint();
  sigma.diagonal().array() += model.noise_dispersion;
  const ComplexMatrix dsigma = model.signal_power * (da * a.adjoint() + a * da.adjoint());
  const PdFactor factor(sigma);
  const ComplexMatrix m = factor.solve(dsigma);
  return (m * m).trace().real();
}

RealVector gaussian_doa_score(const ComplexVector& x, double theta, const UlaModel& model) {
  model.validate();
  if (x.size() != model.p) throw Error("dimension mismatch");
  const double pd = static_cast<double>(model.p);
  const double z2 = model.noise_dispersion;
  const double c = model.signal_power / (z2 + pd * model.signal_power);
  const ComplexVector a = steering(model.p, theta, 0);
  const ComplexVector da = steering(model.p, theta, 1);
  const double alpha = 2.0 * (da.dot(x) * std::conj(a.dot(x))).real();
  return RealVector::Constant(1, c / z2 * alpha);
}

DoaMomentModel::DoaMomentModel(Index p, double r_signal, double r_noise, Index grid_points, double delta)
    : p_(p),
      r_signal_(r_signal),
      r_noise_(r_noise),
      space_(RealVector::Constant(1, -kPi / 2.0), RealVector::Constant(1, kPi / 2.0 - delta), {grid_points}) {
  if (p < 2) throw Error("ULA needs at least two sensors");
  if (!(r_noise > 0.0) || r_signal < 0.0) throw Error("MT-covariance scalars must satisfy r_S >= 0, r_W > 0");
}

ComplexVector DoaMomentModel::mean(const RealVector&) const { return ComplexVector::Zero(p_); }

ComplexMatrix DoaMomentModel::cov(const RealVector& theta) const {
  const ComplexVector a = steering(p_, theta(0), 0);
  ComplexMatrix c = r_signal_ * a * a.adjoint();
  c.diagonal().array() += r_noise_;
  return c;
}

ComplexVector DoaMomentModel::d_mean(const RealVector&, Index) const { return ComplexVector::Zero(p_); }

ComplexMatrix DoaMomentModel::d_cov(const RealVector& theta, Index) const {
  const ComplexVector a = steering(p_, theta(0), 0);
  const ComplexVector da = steering(p_, theta(0), 1);
  return r_signal_ * (da * a.adjoint() + a * da.adjoint());
}

ComplexVector DoaMomentModel::d2_mean(const RealVector&, Index, Index) const { return ComplexVector::Zero(p_); }

ComplexMatrix DoaMomentModel::d2_cov(const RealVector& theta, Index, Index) const {
  const ComplexVector a = steering(p_, theta(0), 0);
  const ComplexVector da = steering(p_, theta(0), 1);
  const ComplexVector dda = steering(p_, theta(0), 2);
  return r_signal_ * (dda * a.adjoint() + 2.0 * da * da.adjoint() + a * dda.adjoint());
}

std::shared_ptr<DoaMomentModel> fit_doa_moment_model(const EmpiricalMTMoments& moments, double theta,
                                                     Index grid_points, double delta) {
  const Index p = moments.cov.rows();
  const double pd = static_cast<double>(p);
  const ComplexVector a = steering(p, theta, 0);
  const double quad = a.dot(moments.cov * a).real();
  const double trace = moments.cov.trace().real();
  const double floor = 1e-12 * std::max(trace / pd, 1e-300);
  const double r_signal = std::max((quad - trace) / (pd * (pd - 1.0)), floor);
  const double r_noise = std::max((pd * trace - quad) / (pd * (pd - 1.0)), floor);
  return std::make_shared<DoaMomentModel>(p, r_signal, r_noise, grid_points, delta);
}

ModelBuilder doa_model_builder(Index grid_points, double delta) {
  return [grid_points, delta](const Dataset& data, const MTFunction&, const EmpiricalMTMoments& moments) {
    const ComplexMatrix second = moments.cov + moments.mean * moments.mean.adjoint();
    const auto grid = shared_doa_grid(data.dim(), grid_points, delta);
    const SpectrumCurve curve = spectrum_from_matrix(second, *grid);
    return std::shared_ptr<const MomentModel>(fit_doa_moment_model(moments, curve.angles(curve.argmax()),
                                                                   grid_points, delta));
  };
}

}  // namespace mtqml
