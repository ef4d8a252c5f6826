#include <boost/math/special_functions/lambert_w.hpp>
#include <cmath>

#include "doctest.h"
#include "sqg/pinn.hpp"

using namespace sqg;
using namespace sqg::pinn;

namespace {

// e^{-t} cos x1 and all its derivatives
double decaying_cos(double t, Vec2 x, StMultiIndex a) {
  const double time = (a.dt % 2 ? -1.0 : 1.0) * std::exp(-t);
  const double space = a.d2 > 0 ? 0.0 : std::cos(x.x1 + a.d1 * kPi / 2);
  return time * space;
}

AnalyticFunction linear_x1() {
  return AnalyticFunction(
      [](double, Vec2 x, StMultiIndex a) {
        if (a.dt || a.d2) return 0.0;
        if (a.d1 == 0) return x.x1;
        return a.d1 == 1 ? 1.0 : 0.0;
      },
      4);
}

AnalyticFunction constant(double c) {
  return AnalyticFunction([c](double, Vec2, StMultiIndex a) { return a.order() == 0 ? c : 0.0; }, 4);
}

net::MlpParams zero_net() { return net::MlpParams::zeros({3, 4, 1}); }

ResidualConfig small_config() {
  ResidualConfig c;
  c.T = 0.5;
  c.interior_grid = 8;
  c.interior_time_nodes = 2;
  c.periodicity_panels = 2;
  c.periodicity_order = 3;
  c.periodicity_time_nodes = 2;
  c.penalty_grid = 16;
  c.penalty_time_nodes = 3;
  return c;
}

}  // namespace

TEST_CASE("PDE residual of trivial and exact functions") {
  const OperatorContext ctx(QuadratureSpec::reporting(), 64);
  const NetworkFunction zero(zero_net());
  CHECK(pde_residual(zero, 0.2, Vec2{0.3, -1.0}, ctx) == 0.0);
  CHECK(pde_residual(constant(2.5), 0.2, Vec2{0.3, -1.0}, ctx) == 0.0);
  const AnalyticFunction exact(decaying_cos, 4);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10; ++i) {
    const double t = uniform(rng, 0, 1);
    const Vec2 x{uniform(rng, -kPi, kPi), uniform(rng, -kPi, kPi)};
    CHECK(std::fabs(pde_residual(exact, t, x, ctx)) < 1e-5);
  }
}

TEST_CASE("initial residual norm") {
  const int n = 32;
  const GridField c = GridField::sample(n, [](Vec2 x) { return std::cos(x.x1); });
  const NetworkFunction zero(zero_net());
  CHECK(initial_residual_norm(zero, c, 0) == doctest::Approx(kPi * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(initial_residual_norm(zero, c, 1) == doctest::Approx(2 * kPi).epsilon(1e-12));
  const AnalyticFunction exact(decaying_cos, 4);
  CHECK(initial_residual_norm(exact, c, 1) < 1e-12);
}

TEST_CASE("boundary residual") {
  const AnalyticFunction f = linear_x1();
  ResidualConfig cfg = small_config();
  CHECK(boundary_residual(f, 0, 0.1, 0.4, -0.7) == doctest::Approx(4 * kPi * kPi));
  CHECK(boundary_residual(f, 1, 0.1, 0.4, -0.7) == doctest::Approx(4 * kPi * kPi));
  const double expected = kTwoPi * 4 * kPi * kPi * cfg.T;
  CHECK(boundary_error_sq(f, cfg) == doctest::Approx(expected).epsilon(1e-12));
  cfg.s = 1;
  CHECK(boundary_error_sq(f, cfg) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(boundary_error_sq(AnalyticFunction(decaying_cos, 4), cfg) < 1e-25);
}

TEST_CASE("periodicity residual") {
  const AnalyticFunction f = linear_x1();
  // block 1 by an explicit loop over the 25 shifts
  double block1 = 0;
  for (int k = -2; k <= 2; ++k)
    for (int m = -2; m <= 2; ++m) {
      const double d = 0.0 - (0.0 - 2 * k * kPi);
      block1 += d * d;
    }
  CHECK(block1 == doctest::Approx(200 * kPi * kPi));
  // block 2: value jump 2 pi across e1; block 3: (x1^2) jumps 4 pi^2, d1(x1^2) jumps 4 pi
  const double expected = block1 + 4 * kPi * kPi + 16 * std::pow(kPi, 4) + 16 * kPi * kPi;
  CHECK(periodicity_residual(f, 0, 0.0, {0, 0}) == doctest::Approx(expected).epsilon(1e-13));

  CHECK(periodicity_residual(constant(3.0), 0, 0.1, {1, 1}) == 0.0);
  const AnalyticFunction periodic(
      [](double t, Vec2 x, StMultiIndex a) {
        return std::exp(-t) * std::cos(x.x1 + a.d1 * kPi / 2) * std::cos(x.x2 + a.d2 * kPi / 2);
      },
      4);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; ++i) {
    const Vec2 x{uniform(rng, -kTwoPi, kTwoPi), uniform(rng, -kTwoPi, kTwoPi)};
    CHECK(periodicity_residual(periodic, 1, uniform(rng, 0, 1), x) < 1e-24);
  }
  ResidualConfig cfg = small_config();
  CHECK(periodicity_error_sq(periodic, cfg) < 1e-24);
}

TEST_CASE("penalty term") {
  ResidualConfig cfg = small_config();
  CHECK(penalty_term(NetworkFunction(zero_net()), cfg) == 0.0);
  const double c = 1.7;
  CHECK(penalty_term(constant(c), cfg) == doctest::Approx(kTwoPi * c * std::sqrt(cfg.T)).epsilon(1e-12));
  cfg.T = 1.0;
  const AnalyticFunction cosx([](double, Vec2 x, StMultiIndex a) {
    return a.dt || a.d2 ? 0.0 : std::cos(x.x1 + a.d1 * kPi / 2);
  }, 4);
  const double h3 = spectral::sobolev_norm(GridField::sample(16, [](Vec2 x) { return std::cos(x.x1); }), 3);
  CHECK(penalty_term(cosx, cfg) == doctest::Approx(h3).epsilon(1e-12));
  CHECK(h3 == doctest::Approx(std::sqrt(2 * kPi * kPi * 4)).epsilon(1e-12));
}

TEST_CASE("error report identity") {
  ErrorReport r;
  r.E_G_i = r.E_G_t = r.E_G_b = r.E_G_per = r.E_G_p = 1.0;
  r.lambda = 4.0;
  r.assemble();
  CHECK(r.E_G == doctest::Approx(std::sqrt(8.0)).epsilon(1e-15));
  ErrorReport single;
  single.E_G_t = 0.3;
  single.lambda = 1e-4;
  single.assemble();
  CHECK(single.E_G == 0.3);

  // exact solution: every component small but the penalty
  const int n = 16;
  const GridField psi0 = GridField::sample(n, [](Vec2 x) { return std::cos(x.x1); });
  ResidualConfig cfg = small_config();
  const ErrorReport e = generalization_error(AnalyticFunction(decaying_cos, 4), psi0, cfg);
  CHECK(e.E_G_i < 1e-6);
  CHECK(e.E_G_t < 1e-12);
  CHECK(e.E_G_b < 1e-12);
  CHECK(e.E_G_per < 1e-12);
  const double sum = e.E_G_i * e.E_G_i + e.E_G_t * e.E_G_t + e.E_G_b * e.E_G_b +
                     e.E_G_per * e.E_G_per + e.lambda * e.E_G_p * e.E_G_p;
  CHECK(std::fabs(e.E_G * e.E_G - sum) <= 1e-12 * sum);
}

TEST_CASE("reference function and total error") {
  const int n = 32;
  const GridField psi0 = GridField::sample(n, [](Vec2 x) { return std::cos(x.x1); });
  solver::SolverConfig sc;
  sc.dt = 0.01;
  const double T = 0.5;
  const solver::Trajectory fine = solver::solve(psi0, T, 0.01, sc);
  const solver::Trajectory coarse = solver::solve(psi0, T, 0.02, sc);
  const ReferenceFunction ref(fine, 2);
  CHECK(ref.eval(0.125, {0.3, 0.1}) == doctest::Approx(std::exp(-0.125) * std::cos(0.3)).epsilon(1e-9));
  CHECK(ref.eval(0.125, {0.3, 0.1}, {1, 0, 0}) ==
        doctest::Approx(-std::exp(-0.125) * std::cos(0.3)).epsilon(1e-6));
  CHECK_THROWS_AS(ref.eval(0.6, {0, 0}), DomainError);
  CHECK_THROWS_AS(ref.eval(0.1, {0, 0}, {2, 0, 0}), CapabilityError);

  const NetworkFunction zero(zero_net());
  const double exact = std::sqrt(kPi * kPi * (1 - std::exp(-2 * T)));
  const double e1 = total_error(zero, fine, 0, T);
  CHECK(e1 == doctest::Approx(exact).epsilon(1e-3));
  CHECK(std::fabs(total_error(zero, coarse, 0, T) - e1) < 0.01 * e1);
  CHECK(total_error(ref, fine, 1, T) < 1e-10);
  CHECK_THROWS_AS(total_error(zero, fine, 0, 0.7), DomainError);
}

TEST_CASE("bound check") {
  const double lambda = 0.01;
  CHECK(bound_check(0.0, 0.5, lambda, 0.0).holds);
  CHECK(bound_check(0.0, 0.5, lambda, 0.0).c_min == 0.0);
  const BoundVerdict v = bound_check(1.0, 0.0, lambda, 5.0);
  CHECK(v.violated);
  CHECK_FALSE(v.holds);
  // C e^C = E^2 / (E_G^2 (1 + 1/sqrt(lambda)) e^{E_G/sqrt(lambda)})
  for (double EG : {0.01, 0.1, 0.5}) {
    for (double E : {0.05, 1.0, 30.0}) {
      const double q = E * E / (EG * EG * (1 + 1 / std::sqrt(lambda)) * std::exp(EG / std::sqrt(lambda)));
      const double w = boost::math::lambert_w0(q);
      const BoundVerdict b = bound_check(E, EG, lambda, 1.0);
      CHECK(b.c_min == doctest::Approx(w).epsilon(1e-12));
      CHECK(bound_check(E, EG, lambda, w * 1.001).holds);
      CHECK_FALSE(bound_check(E, EG, lambda, w * 0.999).holds);
    }
  }
  double prev = 1e300;
  for (double EG = 1.0; EG > 1e-3; EG *= 0.7) {
    // smaller E_G at fixed E needs a larger constant
    const double c = bound_check(0.5, EG, lambda, 1.0).c_min;
    CHECK(c >= prev * (1 - 1e-12) - 1e300 * (prev == 1e300));
    prev = c;
  }
}

TEST_CASE("training loss matches the residual functions and its gradient") {
  TrainConfig cfg;
  cfg.residual = small_config();
  cfg.residual.penalty_grid = 16;
  cfg.residual.penalty_time_nodes = 3;
  cfg.architecture = {3, 8, 8, 1};
  cfg.initial_grid = 16;
  cfg.penalty_grid = 16;
  cfg.validation_interior = 3;
  cfg.validation_boundary = 4;
  cfg.validation_periodicity = 3;
  const int n = 16;
  const GridField psi0 = GridField::sample(n, [](Vec2 x) { return std::cos(x.x1) + 0.5 * std::sin(x.x2); });
  const net::MlpParams p = net::MlpParams::xavier(cfg.architecture, 7);
  const TrainingLoss loss(cfg, psi0);
  const Collocation c = Collocation::sample(cfg, 11, true);
  LossComponents lc;
  std::vector<double> g;
  const double L = loss.evaluate(p, c, &g, &lc);
  const double lambda = cfg.residual.lambda;
  CHECK(L == doctest::Approx(lc.total(lambda)).epsilon(1e-14));

  const NetworkFunction f(p);
  const OperatorContext ctx(cfg.quadrature, cfg.truncation);
  const double T = cfg.residual.T;
  double interior = 0, boundary = 0, periodicity = 0;
  for (std::size_t i = 0; i < c.interior_t.size(); ++i) {
    const double r = pde_residual(f, c.interior_t[i], c.interior_x[i], ctx);
    interior += r * r * T * 4 * kPi * kPi / c.interior_t.size();
  }
  for (std::size_t i = 0; i < c.boundary_t.size(); ++i) {
    boundary += boundary_residual(f, 0, c.boundary_t[i], c.boundary_s[i], c.boundary_s[i]) * T *
                kTwoPi / c.boundary_t.size();
  }
  for (std::size_t i = 0; i < c.periodicity_t.size(); ++i) {
    periodicity += periodicity_residual(f, 0, c.periodicity_t[i], c.periodicity_x[i]) * T * 16 *
                   kPi * kPi / c.periodicity_t.size();
  }
  CHECK(lc.interior == doctest::Approx(interior).epsilon(1e-10));
  CHECK(lc.boundary == doctest::Approx(boundary).epsilon(1e-12));
  CHECK(lc.periodicity == doctest::Approx(periodicity).epsilon(1e-12));
  const double e_t = initial_residual_norm(f, psi0, 0);
  CHECK(lc.initial == doctest::Approx(e_t * e_t).epsilon(1e-12));
  const double e_p = penalty_term(f, cfg.residual);
  CHECK(lc.penalty == doctest::Approx(e_p * e_p).epsilon(1e-12));

  // directional derivative of the full loss
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<double> v(p.num_params());
    for (double& e : v) e = uniform(rng, -1, 1);
    const double h = 1e-5;
    net::MlpParams pp = p, pm = p;
    double gv = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      pp.theta[i] += h * v[i];
      pm.theta[i] -= h * v[i];
      gv += g[i] * v[i];
    }
    const double fd = (loss.evaluate(pp, c, nullptr) - loss.evaluate(pm, c, nullptr)) / (2 * h);
    CHECK(std::fabs(gv - fd) <= 1e-6 * std::fabs(fd));
  }
}

TEST_CASE("training") {
  TrainConfig cfg;
  cfg.residual.T = 0.5;
  cfg.residual.lambda = 1e-2;
  cfg.architecture = {3, 16, 16, 1};
  cfg.steps = 60;
  cfg.log_every = 10;
  cfg.interior_batch = 8;
  cfg.boundary_batch = 16;
  cfg.periodicity_batch = 8;
  cfg.initial_grid = 16;
  cfg.penalty_grid = 16;
  cfg.validation_interior = 16;
  cfg.validation_boundary = 32;
  cfg.validation_periodicity = 16;
  const GridField psi0 = GridField::sample(32, [](Vec2 x) { return std::cos(x.x1) + 0.5 * std::sin(x.x2); });
  const net::MlpParams p0 = net::MlpParams::xavier(cfg.architecture, 42);

  const TrainResult a = train(p0, psi0, cfg, {30});
  const TrainResult b = train(p0, psi0, cfg, {30});
  CHECK(a.first_loss == b.first_loss);
  CHECK(a.best.theta == b.best.theta);
  REQUIRE(a.history.size() == 7);
  for (std::size_t i = 1; i < a.history.size(); ++i) {
    CHECK(a.history[i].best_E_G <= a.history[i - 1].best_E_G);
  }
  REQUIRE(a.checkpoints.size() == 1);
  CHECK(a.checkpoints[0].first == 30);

  TrainConfig bad = cfg;
  bad.residual.s = 1;
  CHECK_THROWS_AS(train(p0, psi0, bad), CapabilityError);
  bad = cfg;
  bad.residual.lambda = 0;
  CHECK_THROWS_AS(train(p0, psi0, bad), ConfigError);
}

TEST_CASE("fitting the initial datum alone") {
  TrainConfig cfg;
  cfg.architecture = {3, 16, 16, 1};
  cfg.steps = 10000;
  cfg.log_every = 500;
  cfg.adam.lr = 3e-2;
  cfg.lr_final_ratio = 1e-2;
  cfg.initial_grid = 8;
  cfg.penalty_grid = 8;
  cfg.interior_batch = 1;
  cfg.boundary_batch = 1;
  cfg.periodicity_batch = 1;
  cfg.validation_interior = 1;
  cfg.validation_boundary = 1;
  cfg.validation_periodicity = 1;
  cfg.w_interior = cfg.w_boundary = cfg.w_periodicity = cfg.w_penalty = 0.0;
  const GridField psi0 = GridField::sample(8, [](Vec2 x) { return std::cos(x.x1) + 0.5 * std::sin(x.x2); });
  const net::MlpParams p0 = net::MlpParams::xavier(cfg.architecture, 42);
  const TrainResult r = train(p0, psi0, cfg);
  const double e_t = initial_residual_norm(NetworkFunction(r.best), psi0, 0);
  MESSAGE("initial-only fit E_t = " << e_t);
  CHECK(e_t < 1e-2);
}
