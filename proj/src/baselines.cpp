#include "mtqml/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/tools/roots.hpp>

namespace mtqml {

void FixedPointConfig::validate() const {
  if (max_iter < 1) throw Error("max_iter must be at least 1");
  if (!(rel_tol > 0.0)) throw Error("rel_tol must be positive");
}

namespace {

double median_of(std::vector<double>& v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double mad_of(std::vector<double> v) {
  const double med = median_of(v);
  for (double& x : v) x = std::abs(x - med);
  return median_of(v);
}

using WeightFn = std::function<double(double)>;  // weight from squared residual norm

FixedPointResult reweighted_fixed_point(const Dataset& data, const RegressionModel& model, const WeightFn& weight,
                                        const ComplexVector& alpha_init, const FixedPointConfig& config) {
  ComplexVector alpha = alpha_init;
  const ComplexMatrix& x = data.samples();
  FixedPointResult out;
  RealVector w(data.size());
  for (int iter = 1; iter <= config.max_iter; ++iter) {
    const ComplexVector fit = model.A * alpha;
    for (Index n = 0; n < data.size(); ++n) w(n) = weight((x.col(n) - fit).squaredNorm());
    const double total = w.sum();
    if (!(total > 0.0)) throw Error("all samples rejected");
    const ComplexVector mean = x * (w / total).cast<Complex>();
    const ComplexVector next = model.left_inverse * mean;
    const double step = (next - alpha).norm();
    const double base = alpha.norm();
    alpha = next;
    out.iterations = iter;
    if (step == 0.0 || (base > 0.0 && step / base < config.rel_tol)) {
      out.converged = true;
      break;
    }
  }
  out.theta = realify(alpha);
  return out;
}

ComplexVector initial_alpha(const Dataset& data, const RegressionModel& model, const FixedPointConfig& config) {
  if (config.init.size() > 0) {
    if (config.init.size() != model.theta_dim()) throw Error("dimension mismatch");
    return complexify(config.init);
  }
  return model.left_inverse * median_location(data);
}

}  // namespace

ComplexVector median_location(const Dataset& data) {
  if (data.empty()) throw Error("empty dataset");
  ComplexVector out(data.dim());
  std::vector<double> re(static_cast<std::size_t>(data.size()));
  std::vector<double> im(re.size());
  for (Index k = 0; k < data.dim(); ++k) {
    for (Index n = 0; n < data.size(); ++n) {
      re[static_cast<std::size_t>(n)] = data.samples()(k, n).real();
      im[static_cast<std::size_t>(n)] = data.samples()(k, n).imag();
    }
    out(k) = Complex(median_of(re), median_of(im));
  }
  return out;
}

double mad_constant(MadConstant which) {
  if (which == MadConstant::erf_inverse) return 1.0 / boost::math::erf_inv(0.75);
  // Phi^-1(3/4) = sqrt(2) erf^-1(1/2)
  return 1.0 / (std::sqrt(2.0) * boost::math::erf_inv(0.5));
}

RobustScale mad_scale(const Dataset& data, MadConstant constant) {
  if (data.size() < 2) throw Error("insufficient samples: MAD scale needs N >= 2");
  const double gamma = mad_constant(constant);
  std::vector<double> re(static_cast<std::size_t>(data.size()));
  std::vector<double> im(re.size());
  double total = 0.0;
  for (Index k = 0; k < data.dim(); ++k) {
    for (Index n = 0; n < data.size(); ++n) {
      re[static_cast<std::size_t>(n)] = data.samples()(k, n).real();
      im[static_cast<std::size_t>(n)] = data.samples()(k, n).imag();
    }
    const double mr = mad_of(re);
    const double mi = mad_of(im);
    total += gamma * gamma * (mr * mr + mi * mi);
  }
  if (total == 0.0) throw Error("degenerate scale");
  return {std::sqrt(total / static_cast<double>(data.dim()))};
}

double tukey_weight(double r) {
  const double a = std::abs(r);
  if (a > 1.0) return 0.0;
  const double t = 1.0 - a * a;
  return t * t;
}

FixedPointResult tukey_m_estimator(const Dataset& data, const RegressionModel& model, double c,
                                   const FixedPointConfig& config, MadConstant constant) {
  config.validate();
  if (!(c > 0.0)) throw Error("tuning constant must be positive");
  if (data.dim() != model.p()) throw Error("dimension mismatch");
  const ComplexVector alpha0 = initial_alpha(data, model, config);
  double sigma = 0.0;
  try {
    sigma = mad_scale(data, constant).sigma;
  } catch (const Error&) {
    // Zero scale is only usable when the initial fit is already exact up to rounding.
    const ComplexVector fit = model.A * alpha0;
    const double residual = (data.samples().colwise() - fit).cwiseAbs().maxCoeff();
    const double magnitude = data.samples().cwiseAbs().maxCoeff();
    if (!(residual <= 1e-12 * (1.0 + magnitude))) throw;
    FixedPointResult exact;
    exact.theta = realify(alpha0);
    exact.iterations = 1;
    exact.converged = true;
    return exact;
  }
  const double cutoff = c * sigma;
  const WeightFn weight = [cutoff](double d2) { return tukey_weight(std::sqrt(d2) / cutoff); };
  return reweighted_fixed_point(data, model, weight, alpha0, config);
}

FixedPointResult mle_t_noise(const Dataset& data, const RegressionModel& model, double lambda, double sigma2,
                             const FixedPointConfig& config) {
  config.validate();
  if (!(lambda > 0.0)) throw Error("degrees of freedom must be positive");
  if (!(sigma2 > 0.0)) throw Error("noise dispersion must be positive");
  if (data.dim() != model.p()) throw Error("dimension mismatch");
  const double k = 2.0 / (lambda * sigma2);
  const WeightFn weight = [k](double d2) { return 1.0 / (1.0 + k * d2); };
  return reweighted_fixed_point(data, model, weight, initial_alpha(data, model, config), config);
}

double are_tukey(double c, Index p) {
  if (!(c > 0.0)) throw Error("tuning constant must be positive");
  if (p < 1) throw Error("dimension must be positive");
  const double pd = static_cast<double>(p);
  const boost::math::chi_squared_distribution<double> chi2(2.0 * pd);
  // Density of R with sqrt(2) R ~ chi_{2p}: 4 r f_{chi^2}(2 r^2).
  const auto density = [&](double r) { return r > 0.0 ? 4.0 * r * boost::math::pdf(chi2, 2.0 * r * r) : 0.0; };
  using Integrator = boost::math::quadrature::gauss_kronrod<double, 61>;
  const auto integrate = [&](const std::function<double(double)>& g) {
    return Integrator::integrate([&](double r) { return g(r) * density(r); }, 0.0, c, 15, 1e-12);
  };
  const double e1 = integrate([c](double r) { return (1.0 - (r / c) * (r / c)) * r * r; });
  const double e2 = integrate([c](double r) {
    const double t = 1.0 - (r / c) * (r / c);
    return t * t;
  });
  const double e3 = integrate([c](double r) {
    const double t = 1.0 - (r / c) * (r / c);
    return t * t * t * t * r * r;
  });
  const double lead = 2.0 / (c * c * pd) * e1 - e2;
  return lead * lead / (e3 / pd);
}

double tune_c_for_are(double target, Index p) {
  if (!(target > 0.0 && target < 1.0)) throw Error("ARE target must lie in (0, 1)");
  constexpr double c_min = 0.5;
  constexpr double c_max = 1e3;
  const auto gap = [&](double c) { return are_tukey(c, p) - target; };
  if (gap(c_min) > 0.0) throw Error("ARE target unreachable above the smallest tuning constant");
  if (gap(c_max) < 0.0) throw Error("ARE target unreachable below the largest tuning constant");
  const auto bracket = boost::math::tools::bisect(gap, c_min, c_max, boost::math::tools::eps_tolerance<double>(40));
  const double c = 0.5 * (bracket.first + bracket.second);
  if (std::abs(gap(c)) >= 1e-4) throw Error("ARE bisection did not reach the requested accuracy");
  return c;
}

}  // namespace mtqml
