#include <cmath>

#include "doctest.h"
#include "sqg/sqg_solver.hpp"

using namespace sqg;
using namespace sqg::solver;
using spectral::random_field;

namespace {

double max_diff(const GridField& a, const GridField& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

// the value of the fine-grid field at the coarse nodes
GridField restrict_to(const GridField& fine, int n) {
  const int r = fine.n() / n;
  std::vector<double> v(std::size_t(n) * n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) v[std::size_t(j) * n + k] = fine(r * j, r * k);
  return GridField(n, std::move(v));
}

GridField final_field(const GridField& psi0, double T, double dt) {
  SolverConfig c;
  c.dt = dt;
  return solve(psi0, T, T, c).snapshots.back().field;
}

}  // namespace

TEST_CASE("unit-frequency data decay exactly like exp(-t)") {
  // every mode has |n| = 1, so u = grad^perp psi and the advection vanishes
  const int n = 64;
  auto f = [](Vec2 x) { return std::cos(x.x1) + 0.5 * std::sin(x.x2); };
  const GridField psi0 = GridField::sample(n, f);
  SolverConfig c;
  c.dt = 0.01;
  const Trajectory tr = solve(psi0, 1.0, 0.25, c);
  REQUIRE(tr.snapshots.size() == 5);
  for (const Snapshot& s : tr.snapshots) {
    const GridField exact = psi0 * std::exp(-s.time);
    CHECK(max_diff(s.field, exact) < 1e-8);
  }
  CHECK(tr.snapshots.back().time == 1.0);

  const GridField r = rhs(GridField::sample(n, [](Vec2 x) { return std::cos(x.x1); }));
  CHECK(max_diff(r, GridField::sample(n, [](Vec2 x) { return -std::cos(x.x1); })) < 1e-13);
}

TEST_CASE("advection is skew-symmetric and the mean is conserved") {
  for (std::uint64_t seed : {3ULL, 4ULL}) {
    const GridField psi = random_field(64, 8, 1.0, 2.0, seed);
    const GridField adv = spectral::inverse(nonlinear_term(spectral::forward(psi)));
    CHECK(std::fabs(spectral::inner(psi, adv)) < 1e-10 * spectral::inner(adv, adv));
    CHECK(std::fabs(adv.mean()) < 1e-14);
  }
  const GridField psi0 = random_field(64, 6, 1.0, 3.0, 11);
  const Trajectory tr = solve(psi0, 1.0, 0.1);
  for (std::size_t i = 0; i < tr.snapshots.size(); ++i) {
    CHECK(std::fabs(tr.snapshots[i].field.mean()) <= 1e-10);
    if (i > 0) CHECK(tr.telemetry[i].l2 < tr.telemetry[i - 1].l2);
  }
}

TEST_CASE("fourth order in time") {
  const GridField psi0 = random_field(64, 6, 1.0, 4.0, 7);
  const double T = 0.5;
  const GridField a = final_field(psi0, T, 0.02);
  const GridField b = final_field(psi0, T, 0.01);
  const GridField c = final_field(psi0, T, 0.005);
  const double e1 = max_diff(a, b), e2 = max_diff(b, c);
  MESSAGE("self-convergence errors " << e1 << " " << e2);
  REQUIRE(e2 > 0);
  CHECK(std::log2(e1 / e2) >= 3.8);
}

TEST_CASE("spatial resolution: N=64 and N=128 agree") {
  const GridField psi0 = random_field(64, 5, 1.0, 2.0, 21);
  // same trigonometric polynomial sampled on the finer grid
  const BoxFunction b = spectral::to_box_function(psi0, 1, 0);
  const GridField fine0 = GridField::sample(128, [&](Vec2 x) { return b(x); }).remove_mean();
  CHECK(max_diff(restrict_to(fine0, 64), psi0) < 1e-13);
  const GridField c = final_field(psi0, 0.5, 0.005);
  const GridField f = final_field(fine0, 0.5, 0.005);
  const double d = max_diff(restrict_to(f, 64), c);
  MESSAGE("N=64 vs N=128 max difference " << d);
  CHECK(d < 1e-6);
}

TEST_CASE("energy ledger closes at order dt^5 per step") {
  const GridField psi0 = random_field(64, 6, 1.0, 4.0, 5);
  auto worst = [&](double dt) {
    SolverConfig c;
    c.dt = dt;
    c.s = 2.0;
    c.track_ledger = true;
    const Trajectory tr = solve(psi0, 0.2, 0.2, c);
    double m = 0;
    for (const LedgerEntry& e : tr.ledger) m = std::max(m, std::fabs(e.residual()));
    return m;
  };
  const double r1 = worst(0.02), r2 = worst(0.01);
  MESSAGE("ledger residuals " << r1 << " " << r2);
  CHECK(r1 / r2 > 20.0);  // 32 asymptotically
}

TEST_CASE("step checks") {
  const int n = 32;
  const GridField psi = random_field(n, 5, 1.0, 5.0, 2);
  SolverState st;
  st.field = psi;
  CHECK_THROWS_AS(step(st, 10.0), StepSizeError);
  CHECK_THROWS_AS(step(st, -0.1), StepSizeError);
  const SolverState next = step(st, 0.5 * cfl_limit(psi, 0.5));
  CHECK(next.history.size() == 1);
  CHECK(next.time > 0.0);

  const GridField shifted = psi + GridField::sample(n, [](Vec2) { return 1.0; });
  CHECK_THROWS_AS(rhs(shifted), InvertibilityError);
  const GridField rough = GridField::sample(n, [](Vec2 x) { return std::cos(13 * x.x1); });
  CHECK_THROWS_AS(solve(rough, 0.1, 0.1), DomainError);
  CHECK(std::isinf(cfl_limit(GridField::zeros(n), 0.5)));
}

TEST_CASE("dissipation budget constant") {
  const GridField psi0 = random_field(64, 6, 1.0, 3.0, 13);
  SolverConfig c;
  c.s = 1.0;
  const Trajectory tr = solve(psi0, 1.0, 0.05, c);
  const double C = fitted_budget_constant(tr, 1.0);
  CHECK(C >= 0.0);
  CHECK(std::isfinite(C));
  // unit-frequency data saturate the budget without any coupling
  const GridField u = GridField::sample(64, [](Vec2 x) { return std::sin(x.x1); });
  CHECK(fitted_budget_constant(solve(u, 1.0, 0.05, c), 1.0) < 1e-3);
}
