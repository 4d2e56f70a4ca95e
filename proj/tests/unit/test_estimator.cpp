#include <catch_amalgamated.hpp>

#include "mtqml/core_stats.hpp"
#include "mtqml/doa.hpp"
#include "mtqml/estimator.hpp"
#include "mtqml/linreg.hpp"
#include "mtqml/samplers.hpp"
#include "support/oracles.hpp"

using namespace mtqml;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Mean (theta_0 + theta_1) v with identity covariance: (a, b) and (b, a) are
// indistinguishable.
class SumModel final : public MomentModel {
 public:
  explicit SumModel(ParameterSpace space) : space_(std::move(space)) {
    v_ = ComplexVector(2);
    v_ << Complex(1.0, 0.5), Complex(-0.3, 1.0);
  }
  Index theta_dim() const override { return 2; }
  Index obs_dim() const override { return 2; }
  ComplexVector mean(const RealVector& t) const override { return (t(0) + t(1)) * v_; }
  ComplexMatrix cov(const RealVector&) const override { return ComplexMatrix::Identity(2, 2); }
  ComplexVector d_mean(const RealVector&, Index) const override { return v_; }
  ComplexMatrix d_cov(const RealVector&, Index) const override { return ComplexMatrix::Zero(2, 2); }
  const ParameterSpace& space() const override { return space_; }

 private:
  ComplexVector v_;
  ParameterSpace space_;
};

// Moments independent of theta; a negative scale makes the covariance indefinite.
class ConstantModel final : public MomentModel {
 public:
  explicit ConstantModel(double cov_scale = 2.0)
      : cov_scale_(cov_scale), space_(ParameterSpace::uniform(2, -1.0, 1.0, 5)) {}
  Index theta_dim() const override { return 2; }
  Index obs_dim() const override { return 3; }
  ComplexVector mean(const RealVector&) const override { return ComplexVector::Ones(3); }
  ComplexMatrix cov(const RealVector&) const override { return cov_scale_ * ComplexMatrix::Identity(3, 3); }
  ComplexVector d_mean(const RealVector&, Index) const override { return ComplexVector::Zero(3); }
  ComplexMatrix d_cov(const RealVector&, Index) const override { return ComplexMatrix::Zero(3, 3); }
  const ParameterSpace& space() const override { return space_; }

 private:
  double cov_scale_;
  ParameterSpace space_;
};

struct RegressionFixture {
  std::shared_ptr<const RegressionModel> model =
      std::make_shared<const RegressionModel>(build_steering_regressors(10, M_PI / 3, M_PI / 6, 1.0));
  RealVector theta0 = (RealVector(4) << 0.3, 0.5, 0.6, 0.8).finished();
  ComplexVector alpha0 = complexify(theta0);
  ParameterSpace space = ParameterSpace::uniform(4, -0.2, 1.3, 16);  // step 0.1

  std::shared_ptr<RegressionMomentModel> fitted(const Dataset& d, const MTFunction& u) const {
    return fit_regression_moment_model(model, empirical_mt_moments(d, u), space);
  }
};

EmpiricalMTMoments population_moments(const MomentModel& m, const RealVector& theta) {
  EmpiricalMTMoments out;
  out.mean = m.mean(theta);
  out.cov = m.cov(theta);
  return out;
}

}  // namespace

TEST_CASE("parameter space grid", "[estimator]") {
  const ParameterSpace s(RealVector::Zero(2), (RealVector(2) << 1.0, 2.0).finished(), {3, 5});
  CHECK(s.grid_size() == 15);
  CHECK(s.grid_point(0) == RealVector::Zero(2));
  CHECK(s.grid_point(1)(1) == 0.5);  // last coordinate varies fastest
  CHECK(s.grid_point(5)(0) == 0.5);
  CHECK(s.grid_point(14) == (RealVector(2) << 1.0, 2.0).finished());
  CHECK(s.grid_step(1) == 0.5);
  CHECK(s.on_boundary((RealVector(2) << 0.0, 1.0).finished()));
  CHECK_FALSE(s.on_boundary((RealVector(2) << 0.5, 1.0).finished()));
  CHECK_FALSE(s.contains((RealVector(2) << 1.5, 1.0).finished()));
  CHECK(s.clamp((RealVector(2) << 1.5, -1.0).finished()) == (RealVector(2) << 1.0, 0.0).finished());
  REQUIRE_THROWS_AS(ParameterSpace(RealVector::Ones(1), RealVector::Zero(1), {3}), Error);
  REQUIRE_THROWS_AS(ParameterSpace(RealVector::Zero(1), RealVector::Constant(1, INFINITY), {3}), Error);
  REQUIRE_THROWS_AS(s.grid_point(15), Error);
}

TEST_CASE("objective", "[estimator]") {
  const RegressionFixture fx;
  const RegressionMomentModel model(fx.model, 0.5, 1.2, fx.space);

  SECTION("perfect fit is zero") {
    CHECK_THAT(objective_j_u(population_moments(model, fx.theta0), model, fx.theta0), WithinAbs(0.0, 1e-12));
  }
  SECTION("doubled covariance reduces to the divergence") {
    const SumModel sum(ParameterSpace::uniform(2, -1, 1, 3));
    const RealVector t = RealVector::Zero(2);
    EmpiricalMTMoments m;
    m.mean = sum.mean(t);
    m.cov = 2.0 * ComplexMatrix::Identity(2, 2);
    CHECK_THAT(objective_j_u(m, sum, t), WithinRel(-(2.0 - 2.0 * std::log(2.0)), 1e-12));
  }
  SECTION("property: matches composed oracle and is nonpositive") {
    oracle::Gen g(21);
    for (int trial = 0; trial < 50; ++trial) {
      EmpiricalMTMoments m;
      m.mean = g.vector(10);
      m.cov = g.pd_matrix(10);
      RealVector theta(4);
      for (Index k = 0; k < 4; ++k) theta(k) = g.uniform(-0.2, 1.3);
      const double j = objective_j_u(m, model, theta);
      CHECK(j <= 0.0);
      CHECK_THAT(j, WithinRel(oracle::objective_oracle(m.mean, m.cov, model.mean(theta), model.cov(theta)), 1e-9));
    }
  }
  SECTION("non-PD model covariance") {
    const ConstantModel good;
    const ConstantModel bad(-1.0);
    REQUIRE_THROWS_WITH(objective_j_u(population_moments(good, RealVector::Zero(2)), bad, RealVector::Zero(2)),
                        ContainsSubstring("not positive definite"));
  }
}

TEST_CASE("MT-GQMLE estimation", "[estimator]") {
  const RegressionFixture fx;

  SECTION("constant u on the regression model equals the GQMLE closed form") {
    const Dataset d = synthesize_regression(fx.model->A, fx.alpha0, {TextureLaw::gaussian(), 1.0}, 200, {22, 0});
    const auto m = fx.fitted(d, MTFunction::constant());
    const EstimationResult mt = estimate_mt_gqmle(d, MTFunction::constant(), *m);
    const EstimationResult gq = estimate_gqmle(d, *m);
    CHECK(mt.method == "closed-form");
    CHECK((mt.theta_hat - gq.theta_hat).norm() < 1e-12);
    CHECK((mt.theta_hat - gqmle_regression(d, *fx.model)).norm() < 1e-12);
  }
  SECTION("noiseless data recovers theta0 exactly") {
    const Dataset d(fx.model->A * fx.alpha0.replicate(1, 5));
    const auto m = fx.fitted(d, MTFunction::constant());
    CHECK((estimate_gqmle(d, *m).theta_hat - fx.theta0).norm() < 1e-12);
    // The grid path lands on theta0, which is a grid point.
    const EstimationResult grid = estimate_gqmle(d, *m, SearchMethod::grid);
    CHECK(grid.method == "grid");
    CHECK((grid.theta_hat - fx.theta0).norm() < 1e-12);
    CHECK(grid.profile_objective);
  }
  SECTION("grid search agrees with the closed form to grid resolution") {
    const Dataset d =
        synthesize_regression(fx.model->A, fx.alpha0, {TextureLaw::student_t(0.2), 0.1}, 1000, {22, 1});
    const MTFunction u = regression_mt_function(*fx.model, 3.0);
    const auto m = fx.fitted(d, u);
    const EstimationResult grid = estimate_mt_gqmle(d, u, *m, SearchMethod::grid);
    const RealVector cf = mt_gqmle_regression(d, *fx.model, 3.0);
    CHECK((grid.theta_hat - cf).cwiseAbs().maxCoeff() <= fx.space.grid_step(0) + 1e-12);
    CHECK(grid.evaluations == fx.space.grid_size());
    // Objective at the result dominates every grid point (spot check).
    oracle::Gen g(22);
    const EmpiricalMTMoments mom = empirical_mt_moments(d, u);
    for (int i = 0; i < 200; ++i) {
      const RealVector t = fx.space.grid_point(g.integer(0, fx.space.grid_size() - 1));
      CHECK(objective_j_u(mom, *m, grid.theta_hat) >= objective_j_u(mom, *m, t) - 1e-12);
    }
  }
  SECTION("least squares for Gaussian data") {
    const Dataset d = synthesize_regression(fx.model->A, fx.alpha0, {TextureLaw::gaussian(), 1.0}, 300, {22, 2});
    const auto m = fx.fitted(d, MTFunction::constant());
    // Normal equations solved directly.
    const ComplexVector ls = (fx.model->A.adjoint() * fx.model->A).ldlt().solve(fx.model->A.adjoint() * sample_mean(d));
    CHECK((estimate_gqmle(d, *m).theta_hat - realify(ls)).norm() < 1e-10);
  }
  SECTION("scaling u leaves the estimate unchanged") {
    const Dataset d =
        synthesize_regression(fx.model->A, fx.alpha0, {TextureLaw::k_distributed(0.75), 1.0}, 300, {22, 3});
    const MTFunction u = regression_mt_function(*fx.model, 2.0);
    const auto m = fx.fitted(d, u);
    for (double c : {1e-30, 0.5, 1e30}) {
      CHECK((estimate_mt_gqmle(d, u.scaled(c), *m).theta_hat - estimate_mt_gqmle(d, u, *m).theta_hat).norm() < 1e-12);
      CHECK((estimate_mt_gqmle(d, u.scaled(c), *m, SearchMethod::grid).theta_hat -
             estimate_mt_gqmle(d, u, *m, SearchMethod::grid).theta_hat)
                .norm() == 0.0);
    }
  }
  SECTION("grid ties go to the lowest index") {
    const SumModel sum(ParameterSpace::uniform(2, -1.0, 1.0, 5));
    EmpiricalMTMoments m = population_moments(sum, (RealVector(2) << 0.5, 0.0).finished());
    const EstimationResult r = estimate_from_moments(m, sum, SearchMethod::grid);
    // Maximizers in scan order: (-0.5, 1), (0, 0.5), (0.5, 0), (1, -0.5).
    CHECK(r.grid_index == 9);
    CHECK(r.theta_hat == (RealVector(2) << -0.5, 1.0).finished());
  }
  SECTION("empty grid") {
    const SumModel sum(ParameterSpace(RealVector::Zero(2), RealVector::Ones(2), {0, 3}));
    REQUIRE_THROWS_WITH(estimate_from_moments(population_moments(sum, RealVector::Zero(2)), sum),
                        ContainsSubstring("empty grid"));
  }
  SECTION("degenerate weights propagate") {
    const Dataset d = synthesize_regression(fx.model->A, fx.alpha0, {TextureLaw::gaussian(), 1.0}, 10, {22, 4});
    const auto m = fx.fitted(d, MTFunction::constant());
    const MTFunction zero = MTFunction::from_callable([](const ComplexVector&) { return 0.0; });
    REQUIRE_THROWS_WITH(estimate_mt_gqmle(d, zero, *m), ContainsSubstring("annihilates"));
  }
}

TEST_CASE("population objective peaks at the grid point nearest theta0", "[estimator]") {
  SECTION("regression") {
    const RegressionFixture fx;
    const RegressionMomentModel model(fx.model, 0.4, 0.9, fx.space);
    const RealVector theta0 = (RealVector(4) << 0.31, 0.52, 0.58, 0.83).finished();
    const EstimationResult r = estimate_from_moments(population_moments(model, theta0), model, SearchMethod::grid);
    CHECK((r.theta_hat - fx.theta0).norm() < 1e-12);
  }
  SECTION("doa") {
    const DoaMomentModel model(4, 0.7, 1.3, 1001);
    const double step = model.space().grid_step(0);
    const Index nearest = 640;
    const double theta0 = model.space().grid_point(nearest)(0) + 0.3 * step;
    const EstimationResult r =
        estimate_from_moments(population_moments(model, RealVector::Constant(1, theta0)), model, SearchMethod::grid);
    CHECK(r.grid_index == nearest);
  }
}

TEST_CASE("finite-difference moment derivatives", "[estimator]") {
  SECTION("constant model") {
    const ConstantModel m;
    const auto [dm, dc] = finite_diff_moment_derivatives(m, RealVector::Zero(2), 1, 1e-4);
    CHECK(dm.norm() == 0.0);
    CHECK(dc.norm() == 0.0);
  }
  SECTION("regression model: analytic agrees with differences") {
    const RegressionFixture fx;
    const RegressionMomentModel m(fx.model, 0.5, 1.0, fx.space);
    for (Index k = 0; k < 4; ++k) {
      const auto [dm, dc] = finite_diff_moment_derivatives(m, fx.theta0, k, 1e-5);
      CHECK(oracle::rel_err_norm(dm, m.d_mean(fx.theta0, k)) < 1e-6);
      CHECK(dc.norm() < 1e-8);
      // d mean / d theta_k is column k of [A, iA].
      const ComplexVector col = k < 2 ? ComplexVector(fx.model->A.col(k)) : ComplexVector(Complex(0, 1) * fx.model->A.col(k - 2));
      CHECK((m.d_mean(fx.theta0, k) - col).norm() < 1e-14);
    }
  }
  SECTION("doa model: analytic covariance derivative is r_S d(a a^H)") {
    const DoaMomentModel m(4, 0.8, 1.1, 1000);
    oracle::Gen g(23);
    for (int i = 0; i < 20; ++i) {
      const RealVector t = RealVector::Constant(1, g.uniform(-1.4, 1.4));
      const auto [dm, dc] = finite_diff_moment_derivatives(m, t, 0, 1e-6);
      const ComplexVector a = steering(4, t(0));
      const ComplexVector da = steering(4, t(0), 1);
      const ComplexMatrix analytic = 0.8 * (da * a.adjoint() + a * da.adjoint());
      CHECK(oracle::rel_err_norm(dc, analytic) < 1e-6);
      CHECK(oracle::rel_err_norm(m.d_cov(t, 0), analytic) < 1e-12);
      CHECK(dm.norm() == 0.0);
    }
  }
  SECTION("invalid step") {
    const ConstantModel m;
    REQUIRE_THROWS_AS(finite_diff_moment_derivatives(m, RealVector::Zero(2), 0, 0.0), Error);
    REQUIRE_THROWS_AS(finite_diff_moment_derivatives(m, RealVector::Zero(2), 0, -1.0), Error);
  }
}

TEST_CASE("identifiability check", "[estimator]") {
  SECTION("full-rank regression is identifiable") {
    const RegressionFixture fx;
    const RegressionMomentModel m(fx.model, 0.5, 1.0, fx.space);
    const ParameterSpace coarse = ParameterSpace::uniform(4, -1.0, 1.0, 6);
    const IdentifiabilityReport r = check_identifiability(m, fx.theta0, coarse);
    CHECK(r.identifiable());
    CHECK(r.checked == coarse.grid_size());
  }
  SECTION("duplicated coordinate is flagged") {
    const ParameterSpace s = ParameterSpace::uniform(2, -1.0, 1.0, 5);
    const SumModel m(s);
    const IdentifiabilityReport r = check_identifiability(m, (RealVector(2) << 0.5, 0.0).finished(), s);
    REQUIRE(r.flagged.size() == 3);
    for (Index i : r.flagged) CHECK_THAT(s.grid_point(i).sum(), WithinAbs(0.5, 1e-12));
  }
  SECTION("doa grid") {
    const DoaMomentModel m(4, 1.0, 1.0, 3000);
    const IdentifiabilityReport r = check_identifiability(m, RealVector::Constant(1, 0.4), m.space());
    CHECK(m.space().grid_step(0) >= 1e-4);
    CHECK(r.identifiable());
  }
}
