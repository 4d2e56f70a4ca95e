#include "mtqml/asymptotics.hpp"

#include <cmath>
#include <numbers>
#include <optional>

#include "mtqml/core_stats.hpp"
#include "mtqml/diagnostics.hpp"

namespace mtqml {

namespace {

// Per-theta quantities shared by every sample.
class ScoreContext {
 public:
  ScoreContext(const MomentModel& model, const RealVector& theta, bool with_hessian)
      : m_(model.theta_dim()), mu_(model.mean(theta)), factor_(model.cov(theta)) {
    if (theta.size() != m_) throw Error("dimension mismatch");
    dmu_.reserve(static_cast<std::size_t>(m_));
    dsig_.reserve(static_cast<std::size_t>(m_));
    w_.reserve(static_cast<std::size_t>(m_));
    trace_term_.resize(m_);
    for (Index k = 0; k < m_; ++k) {
      dmu_.push_back(model.d_mean(theta, k));
      dsig_.push_back(model.d_cov(theta, k));
      w_.push_back(factor_.solve(dmu_.back()));
      trace_term_(k) = -factor_.solve(dsig_.back()).trace().real();
    }
    if (!with_hessian) return;
    std::vector<ComplexMatrix> inv_dsig;
    for (Index k = 0; k < m_; ++k) inv_dsig.push_back(factor_.solve(dsig_[static_cast<std::size_t>(k)]));
    hessian_const_.resize(m_, m_);
    for (Index j = 0; j < m_; ++j) {
      for (Index k = 0; k < m_; ++k) {
        dmu2_.push_back(model.d2_mean(theta, j, k));
        dsig2_.push_back(model.d2_cov(theta, j, k));
        const double t1 = (inv_dsig[static_cast<std::size_t>(j)] * inv_dsig[static_cast<std::size_t>(k)]).trace().real() -
                          factor_.solve(dsig2_.back()).trace().real();
        const double t2 = -2.0 * dmu_[static_cast<std::size_t>(j)].dot(w_[static_cast<std::size_t>(k)]).real();
        hessian_const_(j, k) = t1 + t2;
      }
    }
  }

  Index dim() const { return m_; }

  RealVector psi(const ComplexVector& x) const {
    const ComplexVector s = factor_.solve(ComplexVector(x - mu_));
    RealVector out(m_);
    for (Index k = 0; k < m_; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      out(k) = trace_term_(k) + 2.0 * s.dot(dmu_[kk]).real() + s.dot(dsig_[kk] * s).real();
    }
    return out;
  }

  RealMatrix gamma(const ComplexVector& x) const {
    const ComplexVector s = factor_.solve(ComplexVector(x - mu_));
    std::vector<ComplexVector> t;
    std::vector<ComplexVector> v;
    for (Index k = 0; k < m_; ++k) {
      t.push_back(dsig_[static_cast<std::size_t>(k)] * s);
      v.push_back(factor_.solve(t.back()));
    }
    RealMatrix out(m_, m_);
    for (Index j = 0; j < m_; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      for (Index k = 0; k < m_; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        const auto jk = static_cast<std::size_t>(j * m_ + k);
        out(j, k) = hessian_const_(j, k) - 2.0 * t[jj].dot(w_[kk]).real() - 2.0 * w_[jj].dot(t[kk]).real() +
                    2.0 * s.dot(dmu2_[jk]).real() - 2.0 * t[jj].dot(v[kk]).real() +
                    s.dot(dsig2_[jk] * s).real();
      }
    }
    return 0.5 * (out + out.transpose());
  }

 private:
  Index m_;
  ComplexVector mu_;
  PdFactor factor_;
  std::vector<ComplexVector> dmu_;
  std::vector<ComplexMatrix> dsig_;
  std::vector<ComplexVector> w_;  // Sigma^-1 d_mean
  RealVector trace_term_;
  RealMatrix hessian_const_;
  std::vector<ComplexVector> dmu2_;
  std::vector<ComplexMatrix> dsig2_;
};

double fd_step(double theta_k) { return 1e-5 * (1.0 + std::abs(theta_k)); }

// Contexts at theta +/- h e_k for the finite-difference Hessian.
struct FdContexts {
  std::vector<ScoreContext> plus;
  std::vector<ScoreContext> minus;
  RealVector steps;

  FdContexts(const MomentModel& model, const RealVector& theta) : steps(theta.size()) {
    for (Index k = 0; k < theta.size(); ++k) {
      steps(k) = fd_step(theta(k));
      RealVector tp = theta;
      RealVector tm = theta;
      tp(k) += steps(k);
      tm(k) -= steps(k);
      plus.emplace_back(model, tp, false);
      minus.emplace_back(model, tm, false);
    }
  }

  RealMatrix gamma(const ComplexVector& x) const {
    const Index m = steps.size();
    RealMatrix out(m, m);
    for (Index k = 0; k < m; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      out.col(k) = (plus[kk].psi(x) - minus[kk].psi(x)) / (2.0 * steps(k));
    }
    return 0.5 * (out + out.transpose());
  }
};

}  // namespace

RealVector psi_u(const ComplexVector& x, const RealVector& theta, const MomentModel& model) {
  if (x.size() != model.obs_dim()) throw Error("dimension mismatch");
  return ScoreContext(model, theta, false).psi(x);
}

RealMatrix gamma_u_finite_difference(const ComplexVector& x, const RealVector& theta, const MomentModel& model) {
  if (x.size() != model.obs_dim()) throw Error("dimension mismatch");
  return FdContexts(model, theta).gamma(x);
}

RealMatrix gamma_u(const ComplexVector& x, const RealVector& theta, const MomentModel& model) {
  if (!model.has_second_derivatives()) return gamma_u_finite_difference(x, theta, model);
  if (x.size() != model.obs_dim()) throw Error("dimension mismatch");
  return ScoreContext(model, theta, true).gamma(x);
}

double log_gaussian_density(const ComplexVector& x, const RealVector& theta, const MomentModel& model) {
  const PdFactor factor(model.cov(theta));
  const double p = static_cast<double>(model.obs_dim());
  return -p * std::log(std::numbers::pi) - factor.log_det() -
         inverse_weighted_norm_sq(x - model.mean(theta), factor);
}

RealMatrix checked_inverse(const RealMatrix& F) {
  if (F.rows() != F.cols() || F.rows() == 0) throw Error("F matrix singular");
  if (!F.allFinite() || F.norm() == 0.0) throw Error("F matrix singular");
  Eigen::FullPivLU<RealMatrix> lu(F);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) throw Error("F matrix singular");
  return lu.inverse();
}

SandwichMatrices sandwich(const Dataset& data, const RealVector& theta_hat, const MomentModel& model,
                          const MTFunction& u) {
  if (data.empty()) throw Error("empty dataset");
  if (data.dim() != model.obs_dim()) throw Error("dimension mismatch");
  const RealVector logs = mt_log_values(data, u);
  const double log_max = logs.maxCoeff();
  if (!std::isfinite(log_max)) throw Error("MT-function annihilates sample");
  const RealVector scaled = (logs.array() - log_max).exp().matrix();

  const Index m = model.theta_dim();
  const ScoreContext context(model, theta_hat, model.has_second_derivatives());
  std::optional<FdContexts> fd;
  if (!model.has_second_derivatives()) fd.emplace(model, theta_hat);

  RealMatrix G = RealMatrix::Zero(m, m);
  RealMatrix F = RealMatrix::Zero(m, m);
  ComplexVector x(data.dim());
  for (Index n = 0; n < data.size(); ++n) {
    const double w = scaled(n);
    if (w == 0.0) continue;
    x = data.sample(n);
    const RealVector psi = context.psi(x);
    G.noalias() += (w * w) * psi * psi.transpose();
    F -= w * (fd ? fd->gamma(x) : context.gamma(x));
  }
  const double inv_n = 1.0 / static_cast<double>(data.size());
  G *= inv_n;
  F *= inv_n;
  G = 0.5 * (G + G.transpose());
  F = 0.5 * (F + F.transpose());

  const RealMatrix f_inv = checked_inverse(F);
  SandwichMatrices out;
  out.C = inv_n * f_inv * G * f_inv;
  out.C = 0.5 * (out.C + out.C.transpose());
  out.G = G * std::exp(2.0 * log_max);
  out.F = F * std::exp(log_max);
  out.log_u_max = log_max;
  out.on_boundary = model.space().dim() == m && model.space().on_boundary(theta_hat);
  if (out.on_boundary) warn("estimate lies on the parameter-space boundary; sandwich assumes an interior point");
  return out;
}

double score_identity_check(const Dataset& data, const RealVector& theta, const MomentModel& model,
                            const MTFunction& u) {
  if (data.empty()) throw Error("empty dataset");
  const ScoreContext context(model, theta, false);
  RealVector total = RealVector::Zero(model.theta_dim());
  ComplexVector x(data.dim());
  for (Index n = 0; n < data.size(); ++n) {
    x = data.sample(n);
    const double w = u(x);
    if (w == 0.0) continue;
    total += w * context.psi(x);
  }
  return (total / static_cast<double>(data.size())).norm();
}

RealVector influence(const ComplexVector& y, const RealVector& theta0, const MomentModel& model, const MTFunction& u,
                     const RealMatrix& F) {
  const RealMatrix f_inv = checked_inverse(F);
  const double uy = u(y);
  if (uy == 0.0) return RealVector::Zero(model.theta_dim());
  return f_inv * psi_u(y, theta0, model) * uy;
}

void choose_smallest_trace(SelectionResult& selection) {
  selection.index = -1;
  for (std::size_t i = 0; i < selection.traces.size(); ++i) {
    const double t = selection.traces[i];
    if (std::isnan(t)) continue;
    if (selection.index < 0) {
      selection.index = static_cast<Index>(i);
      continue;
    }
    const auto b = static_cast<std::size_t>(selection.index);
    if (t < selection.traces[b] || (t == selection.traces[b] && selection.omegas[i] < selection.omegas[b])) {
      selection.index = static_cast<Index>(i);
    }
  }
  if (selection.index < 0) throw Error("every MT-function parameter on the grid is degenerate");
  selection.omega_opt = selection.omegas[static_cast<std::size_t>(selection.index)];
}

SelectionResult select_mt_parameter(const Dataset& data, const MTFamily& family, const std::vector<double>& grid,
                                    const ModelBuilder& builder, SearchMethod method) {
  if (grid.empty()) throw Error("empty grid");
  SelectionResult out;
  out.omegas = grid;
  out.traces.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
  out.theta_hats.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    try {
      const MTFunction u = family(grid[i]);
      const EmpiricalMTMoments moments = empirical_mt_moments(data, u);
      const auto model = builder(data, u, moments);
      const EstimationResult est = estimate_from_moments(moments, *model, method);
      out.theta_hats[i] = est.theta_hat;
      const double trace = sandwich(data, est.theta_hat, *model, u).trace();
      if (std::isfinite(trace)) out.traces[i] = trace;
    } catch (const Error&) {
      // Degenerate grid point; left as NaN.
    }
  }
  choose_smallest_trace(out);
  return out;
}

RealMatrix fisher_information(const ScoreFunction& score, const Dataset& data, const RealVector& theta) {
  if (!score) throw Error("likelihood unknown");
  if (data.empty()) throw Error("empty dataset");
  RealMatrix total;
  ComplexVector x(data.dim());
  for (Index n = 0; n < data.size(); ++n) {
    x = data.sample(n);
    const RealVector eta = score(x, theta);
    if (n == 0) total = RealMatrix::Zero(eta.size(), eta.size());
    total.noalias() += eta * eta.transpose();
  }
  total /= static_cast<double>(data.size());
  return 0.5 * (total + total.transpose());
}

}  // namespace mtqml
