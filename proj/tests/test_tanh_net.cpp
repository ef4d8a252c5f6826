#include <cmath>

#include "doctest.h"
#include "sqg/net_batch.hpp"
#include "sqg/tanh_net.hpp"

using namespace sqg;
using namespace sqg::net;

namespace {

using Pt = std::array<double, 3>;

Pt random_point(std::mt19937_64& rng) {
  return {uniform(rng, 0.0, 1.0), uniform(rng, -kPi, kPi), uniform(rng, -kPi, kPi)};
}

Pt bump(Pt p, int c, double h) {
  p[std::size_t(c)] += h;
  return p;
}

StMultiIndex plus(StMultiIndex a, int c) {
  if (c == 0) ++a.dt;
  if (c == 1) ++a.d1;
  if (c == 2) ++a.d2;
  return a;
}

MlpParams small_net(std::uint64_t seed) { return MlpParams::xavier({3, 8, 6, 1}, seed); }

}  // namespace

TEST_CASE("layout and initialization") {
  const MlpParams p = MlpParams::xavier(kDefaultArchitecture, kDefaultSeed);
  CHECK(p.num_params() == 3 * 64 + 64 + 64 * 64 + 64 + 64 * 64 + 64 + 64 + 1);
  CHECK(p.bias_offset(0) == 3 * 64);
  CHECK(p.weight_offset(1) == 4 * 64);
  CHECK(p.finite());
  const double a = std::sqrt(6.0 / 128.0);
  for (std::size_t i = p.weight_offset(1); i < p.bias_offset(1); ++i) CHECK(std::fabs(p.theta[i]) <= a);
  for (std::size_t i = p.bias_offset(1); i < p.weight_offset(2); ++i) CHECK(p.theta[i] == 0.0);
  CHECK(MlpParams::xavier(kDefaultArchitecture, 42).theta == p.theta);
  CHECK(MlpParams::xavier(kDefaultArchitecture, 43).theta != p.theta);
  CHECK_THROWS_AS(MlpParams::zeros({2, 4, 1}), ConfigError);
  CHECK_THROWS_AS(MlpParams::zeros({3, 4, 2}), ConfigError);
}

TEST_CASE("zero final layer evaluates to the final bias") {
  MlpParams p = small_net(1);
  const std::size_t w = p.weight_offset(2);
  for (std::size_t i = w; i < p.bias_offset(2); ++i) p.theta[i] = 0.0;
  p.theta.back() = 0.7;
  CHECK(eval(p, {0.3, 1.0, -2.0}) == 0.7);
  CHECK(eval(p, {0.3, 1.0, -2.0}, {0, 1, 0}) == 0.0);
  CHECK(eval(p, {0.3, 1.0, -2.0}, {1, 2, 1}) == 0.0);
  CHECK_THROWS_AS(eval(p, {0, 0, 0}, {2, 2, 1}), CapabilityError);
  CHECK_THROWS_AS(eval(p, {0, 0, 0}, {0, 2, 1}, 2), CapabilityError);
}

TEST_CASE("single neuron second derivative") {
  // psi = v tanh(w . (t, x1, x2) + b) + c
  MlpParams p = MlpParams::zeros({3, 1, 1});
  p.theta = {0.4, -1.3, 0.9, 0.2, 1.7, -0.5};
  const Pt x{0.25, 0.6, -0.3};
  const double z = 0.4 * x[0] - 1.3 * x[1] + 0.9 * x[2] + 0.2;
  const double th = std::tanh(z);
  CHECK(eval(p, x) == doctest::Approx(1.7 * th - 0.5).epsilon(1e-15));
  const double d2 = 1.7 * (-2.0 * th * (1 - th * th)) * 1.3 * 1.3;
  CHECK(eval(p, x, {0, 2, 0}) == doctest::Approx(d2).epsilon(1e-13));
  const double d11 = 1.7 * (-2.0 * th * (1 - th * th)) * (-1.3) * 0.9;
  CHECK(eval(p, x, {0, 1, 1}) == doctest::Approx(d11).epsilon(1e-13));
}

TEST_CASE("input derivatives match finite differences") {
  std::mt19937_64 rng(5);
  const MlpParams p = small_net(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Pt x = random_point(rng);
    const double h = 1e-5;
    const double fd = (eval(p, bump(x, 1, h)) - eval(p, bump(x, 1, -h))) / (2 * h);
    CHECK(std::fabs(eval(p, x, {0, 1, 0}) - fd) < 1e-7);
  }
  // every derivative of order k <= 4 against a difference of order k-1
  const Pt x = random_point(rng);
  for (int k = 1; k <= 4; ++k) {
    for (int dt = 0; dt <= k; ++dt)
      for (int d1 = 0; d1 + dt <= k; ++d1) {
        const StMultiIndex a{dt, d1, k - dt - d1};
        const int c = a.dt > 0 ? 0 : (a.d1 > 0 ? 1 : 2);
        StMultiIndex lower = a;
        if (c == 0) --lower.dt;
        if (c == 1) --lower.d1;
        if (c == 2) --lower.d2;
        const double h = 1e-4;
        const double fd = (eval(p, bump(x, c, h), lower) - eval(p, bump(x, c, -h), lower)) / (2 * h);
        const double v = eval(p, x, a);
        CHECK(std::fabs(v - fd) <= 1e-6 * std::max(1.0, std::fabs(v)));
      }
  }
}

TEST_CASE("mixed partials commute") {
  std::mt19937_64 rng(8);
  const MlpParams p = small_net(3);
  for (int trial = 0; trial < 5; ++trial) {
    const Pt x = random_point(rng);
    // (0,1,1) by one nesting, compared with the x2-then-x1 route through a
    // difference of the single derivatives and with the tape-based path
    const double v = eval(p, x, {0, 1, 1});
    const double h = 1e-5;
    const double a = (eval(p, bump(x, 2, h), {0, 1, 0}) - eval(p, bump(x, 2, -h), {0, 1, 0})) / (2 * h);
    const double b = (eval(p, bump(x, 1, h), {0, 0, 1}) - eval(p, bump(x, 1, -h), {0, 0, 1})) / (2 * h);
    CHECK(std::fabs(v - a) < 1e-8);
    CHECK(std::fabs(v - b) < 1e-8);
    GradientSession s(p);
    CHECK(std::fabs(s.eval(x, {0, 1, 1}).v - v) <= 1e-12 * std::max(1.0, std::fabs(v)));
    CHECK(std::fabs(s.eval(x, {1, 2, 1}).v - eval(p, x, {1, 2, 1})) < 1e-12);
  }
}

TEST_CASE("parameter gradient") {
  const MlpParams p0 = small_net(4);
  const Pt x{0.2, 0.5, -1.0};

  SUBCASE("vanishing value gives zero gradient") {
    MlpParams p = p0;
    p.theta.back() -= eval(p, x);
    const auto g = param_gradient(p, [&](GradientSession& s) { return ad::square(s.eval(x)); });
    double m = 0;
    for (double v : g) m = std::max(m, std::fabs(v));
    CHECK(m < 1e-15);
  }

  SUBCASE("directional derivative matches central differences") {
    std::mt19937_64 rng(9);
    const Pt y{0.7, -2.0, 2.5}, z{0.1, 3.0, 0.4};
    auto loss_of = [&](GradientSession& s) {
      const auto r = s.eval(x, {1, 0, 0}) + s.eval(y) * s.eval(y, {0, 1, 0}) + s.eval(z, {0, 2, 1});
      return ad::square(r) + ad::square(s.eval(z, {0, 0, 2}));
    };
    auto loss_at = [&](const std::vector<double>& th) {
      MlpParams q = p0;
      q.theta = th;
      const double r = eval(q, x, {1, 0, 0}) + eval(q, y) * eval(q, y, {0, 1, 0}) + eval(q, z, {0, 2, 1});
      const double w = eval(q, z, {0, 0, 2});
      return r * r + w * w;
    };
    double l = 0;
    const auto g = param_gradient(p0, loss_of, &l);
    CHECK(l == doctest::Approx(loss_at(p0.theta)).epsilon(1e-13));
    for (int trial = 0; trial < 3; ++trial) {
      std::vector<double> v(p0.num_params());
      for (double& e : v) e = uniform(rng, -1, 1);
      const double h = 1e-4;
      std::vector<double> tp = p0.theta, tm = p0.theta;
      double gv = 0;
      for (std::size_t i = 0; i < v.size(); ++i) {
        tp[i] += h * v[i];
        tm[i] -= h * v[i];
        gv += g[i] * v[i];
      }
      const double fd = (loss_at(tp) - loss_at(tm)) / (2 * h);
      CHECK(std::fabs(gv - fd) <= 1e-4 * std::fabs(fd));
    }
  }

  SUBCASE("duplicated point doubles the gradient") {
    auto one = param_gradient(p0, [&](GradientSession& s) { return ad::square(s.eval(x, {0, 1, 0})); });
    auto two = param_gradient(p0, [&](GradientSession& s) {
      return ad::square(s.eval(x, {0, 1, 0})) + ad::square(s.eval(x, {0, 1, 0}));
    });
    for (std::size_t i = 0; i < one.size(); ++i) {
      CHECK(std::fabs(two[i] - 2 * one[i]) <= 1e-15 * std::max(1.0, std::fabs(one[i])));
    }
  }
}

TEST_CASE("batched engine agrees with nested duals and the tape") {
  const MlpParams p = MlpParams::xavier({3, 16, 16, 1}, 11);
  std::mt19937_64 rng(12);
  const int B = 7;
  Eigen::Matrix3Xd pts(3, B);
  for (int b = 0; b < B; ++b) {
    const Pt x = random_point(rng);
    for (int c = 0; c < 3; ++c) pts(c, b) = x[std::size_t(c)];
  }
  BatchNet net(p);
  const BatchNet::Output out = net.forward(pts, true);
  const Eigen::VectorXd vals = net.values(pts);
  Eigen::RowVectorXd gv(B);
  Eigen::Matrix3Xd gd(3, B);
  for (int b = 0; b < B; ++b) {
    const Pt x{pts(0, b), pts(1, b), pts(2, b)};
    CHECK(out.value(b) == doctest::Approx(eval(p, x)).epsilon(1e-13));
    CHECK(vals(b) == doctest::Approx(eval(p, x)).epsilon(1e-13));
    for (int c = 0; c < 3; ++c) {
      CHECK(std::fabs(out.grad(c, b) - eval(p, x, plus({}, c))) < 1e-13);
      gd(c, b) = uniform(rng, -1, 1);
    }
    gv(b) = uniform(rng, -1, 1);
  }
  std::vector<double> g;
  net.backward(gv, gd, g);
  const auto ref = param_gradient(p, [&](GradientSession& s) {
    Var acc(0.0);
    for (int b = 0; b < B; ++b) {
      const Pt x{pts(0, b), pts(1, b), pts(2, b)};
      acc += gv(b) * s.eval(x);
      for (int c = 0; c < 3; ++c) acc += gd(c, b) * s.eval(x, plus({}, c));
    }
    return acc;
  });
  REQUIRE(g.size() == ref.size());
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::fabs(g[i] - ref[i]) < 1e-12);

  // value-only backward
  BatchNet net2(p);
  net2.forward(pts, false);
  std::vector<double> g2;
  net2.backward(gv, Eigen::Matrix3Xd(3, 0), g2);
  const auto ref2 = param_gradient(p, [&](GradientSession& s) {
    Var acc(0.0);
    for (int b = 0; b < B; ++b) acc += gv(b) * s.eval({pts(0, b), pts(1, b), pts(2, b)});
    return acc;
  });
  for (std::size_t i = 0; i < g2.size(); ++i) CHECK(std::fabs(g2[i] - ref2[i]) < 1e-12);
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves parameters and decays moments") {
    std::vector<double> th = {1.0, -2.0};
    AdamState st;
    st.m = {0.5, 0.5};
    st.v = {0.25, 0.25};
    const std::vector<double> zero = {0.0, 0.0};
    adam_step(th, zero, st);
    CHECK(st.m[0] == doctest::Approx(0.45));
    CHECK(st.v[0] == doctest::Approx(0.25 * 0.999));
    // the decayed first moment still moves theta; with zero moments it stays
    std::vector<double> th2 = {1.0, -2.0};
    AdamState fresh;
    adam_step(th2, zero, fresh);
    CHECK(th2 == std::vector<double>{1.0, -2.0});
  }
  SUBCASE("quadratic toy converges") {
    std::vector<double> th = {0.0};
    AdamState st;
    AdamConfig c;
    c.lr = 1e-2;
    for (int i = 0; i < 10000; ++i) {
      const std::vector<double> g = {2.0 * (th[0] - 3.0)};
      adam_step(th, g, st, c);
    }
    CHECK(std::fabs(th[0] - 3.0) < 1e-6);
  }
  SUBCASE("poisoned gradient is refused") {
    std::vector<double> th = {1.0, 2.0};
    AdamState st;
    const std::vector<double> bad = {0.1, std::nan("")};
    CHECK_THROWS_AS(adam_step(th, bad, st), PoisonError);
    CHECK(th == std::vector<double>{1.0, 2.0});
    CHECK(st.steps == 0);
  }
  SUBCASE("bitwise reproducible") {
    auto run = [] {
      MlpParams p = small_net(42);
      AdamState st;
      for (int i = 0; i < 3; ++i) {
        const auto g = param_gradient(p, [&](GradientSession& s) { return ad::square(s.eval({0.1, 0.2, 0.3})); });
        adam_step(p.theta, g, st);
      }
      return p.theta;
    };
    CHECK(run() == run());
  }
}
