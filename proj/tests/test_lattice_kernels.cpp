#include <cmath>
#include <random>

#include "doctest.h"
#include "sqg/lattice_kernels.hpp"

using namespace sqg;
using namespace sqg::lattice;

namespace {

// Unpaired brute-force lattice sums in long double, independent of the
// library's shell ordering.
long double brute_K(Vec2 y, int M) {
  const long double c = 1.0L / (2.0L * 3.14159265358979323846264338327950288L);
  long double s = 0;
  for (int k1 = -M; k1 <= M; ++k1)
    for (int k2 = -M; k2 <= M; ++k2) {
      const long double d1 = y.x1 - kTwoPi * k1, d2 = y.x2 - kTwoPi * k2;
      const long double r2 = d1 * d1 + d2 * d2;
      s += 1.0L / (r2 * std::sqrt(r2));
    }
  return c * s;
}

Vec2 brute_Rstar(Vec2 y, int M) {
  long double s1 = 0, s2 = 0;
  const long double tp = kTwoPi;
  for (int k1 = -M; k1 <= M; ++k1)
    for (int k2 = -M; k2 <= M; ++k2) {
      const long double p1 = y.x1 + tp * k1, p2 = y.x2 + tp * k2;
      const long double r2 = p1 * p1 + p2 * p2;
      const long double ir = 1.0L / (tp * r2 * std::sqrt(r2));
      s1 += p1 * ir;
      s2 += p2 * ir;
      if (k1 != 0 || k2 != 0) {
        const long double a1 = tp * k1, a2 = tp * k2;
        const long double ra = a1 * a1 + a2 * a2;
        const long double ia = 1.0L / (ra * std::sqrt(ra));
        s1 -= k1 * ia;
        s2 -= k2 * ia;
      }
    }
  return {double(s1), double(s2)};
}

// sum over 0 < |k|_inf <= M of |k|^{-p}, plain double loop
double brute_zeta(int M, double p) {
  double s = 0;
  for (int k1 = -M; k1 <= M; ++k1)
    for (int k2 = -M; k2 <= M; ++k2)
      if (k1 || k2) s += std::pow(double(k1) * k1 + double(k2) * k2, -0.5 * p);
  return s;
}

}  // namespace

TEST_CASE("normalization constant") {
  const double c = normalization_constant();
  // Gamma(3/2) = sqrt(pi)/2, Gamma(-1/2) = -2 sqrt(pi) by hand
  CHECK(c == doctest::Approx(1.0 / (2.0 * kPi)).epsilon(1e-15));
  CHECK(c > 0.0);
  CHECK(2.0 * kPi * c == doctest::Approx(1.0).epsilon(1e-15));
  // independent route through lgamma
  const double via_lgamma =
      2.0 * std::exp(std::lgamma(1.5)) / (std::exp(std::lgamma(-0.5)) * kPi);
  CHECK(c == doctest::Approx(via_lgamma).epsilon(1e-14));
}

TEST_CASE("lattice zeta constants match Richardson-extrapolated partial sums") {
  // The tail sum_{|k|_inf > M} |k|^{-p} has an expansion in powers of 1/M
  // starting at M^{2-p}; eliminate the first two terms.
  for (auto [p, ref] : {std::pair{3.0, kLatticeZeta3}, std::pair{5.0, kLatticeZeta5}}) {
    const double s1 = brute_zeta(250, p), s2 = brute_zeta(500, p), s4 = brute_zeta(1000, p);
    const double q = p - 2.0;
    const double f = std::pow(2.0, q);
    const double r1 = (f * s2 - s1) / (f - 1.0);
    const double r2 = (f * s4 - s2) / (f - 1.0);
    const double g = std::pow(2.0, q + 1.0);
    const double rich = (g * r2 - r1) / (g - 1.0);
    CHECK(rich == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("tail bounds are positive and nonincreasing in M") {
  double prev_k = 1e300, prev_r = 1e300;
  for (int M = 1; M <= 512; M *= 2) {
    const double bk = tail_bound_K(M), br = tail_bound_Rstar(M);
    CHECK(bk > 0.0);
    CHECK(br > 0.0);
    CHECK(bk <= prev_k);
    CHECK(br <= prev_r);
    prev_k = bk;
    prev_r = br;
  }
  const TruncatedKernel t = TruncatedKernel::make(KernelKind::VectorRStar, 64);
  CHECK(t.tail_bound == tail_bound_Rstar(64));
  CHECK_THROWS_AS(TruncatedKernel::make(KernelKind::ScalarK, 0), DomainError);
}

TEST_CASE("eval_K against brute force at larger M") {
  const Vec2 y{kPi / 2, 0.0};
  const double v200 = eval_K(y, 200);
  const double v2000 = double(brute_K(y, 2000));
  CHECK(std::fabs(v200 - v2000) <= tail_bound_K(200));
  // same check away from the axis
  const Vec2 z{1.1, -2.3};
  CHECK(std::fabs(eval_K(z, 200) - double(brute_K(z, 2000))) <= tail_bound_K(200));
}

TEST_CASE("eval_Rstar against brute force at larger M") {
  const Vec2 y{kPi / 2, 0.0};
  const Vec2 a = eval_Rstar(y, 200), b = brute_Rstar(y, 2000);
  CHECK(std::fabs(a.x1 - b.x1) <= tail_bound_Rstar(200));
  CHECK(std::fabs(a.x2 - b.x2) <= tail_bound_Rstar(200));
}

TEST_CASE("errors at the origin and outside the torus") {
  CHECK_THROWS_AS(eval_K({0.0, 0.0}, 8), SingularityError);
  CHECK_THROWS_AS(eval_Rstar({0.0, 0.0}, 8), SingularityError);
  CHECK_THROWS_AS(eval_K({3.2, 0.0}, 8), DomainError);
  CHECK_THROWS_AS(eval_Rstar({0.0, -3.5}, 8), DomainError);
  CHECK_THROWS_AS(eval_K({1.0, 0.0}, 0), DomainError);
  CHECK_THROWS_AS(eval_K({NAN, 0.0}, 4), DomainError);
  CHECK(std::isfinite(eval_K({kPi, kPi}, 8)));
}

TEST_CASE("symmetries under paired summation") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    const Vec2 y{uniform(rng, -kPi, kPi), uniform(rng, -kPi, kPi)};
    const int M = 4 + i % 13;
    CHECK(eval_K(y, M) == eval_K(-y, M));
    const Vec2 r = eval_Rstar(y, M), rm = eval_Rstar(-y, M);
    CHECK(rm.x1 == -r.x1);
    CHECK(rm.x2 == -r.x2);
    CHECK(eval_K({y.x2, y.x1}, M) == doctest::Approx(eval_K(y, M)).epsilon(1e-14));
  }
  const Vec2 d = eval_Rstar({kPi / 2, kPi / 2}, 64);
  CHECK(d.x1 == doctest::Approx(d.x2).epsilon(1e-13));
}

TEST_CASE("convergence in M is within the tail bound") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 10; ++i) {
    const Vec2 y{uniform(rng, -kPi, kPi), uniform(rng, -kPi, kPi)};
    for (int M = 8; M <= 64; M *= 2) {
      CHECK(std::fabs(eval_K(y, M) - eval_K(y, 2 * M)) <= tail_bound_K(M));
      const Vec2 a = eval_Rstar(y, M), b = eval_Rstar(y, 2 * M);
      CHECK(std::fabs(a.x1 - b.x1) <= tail_bound_Rstar(M));
      CHECK(std::fabs(a.x2 - b.x2) <= tail_bound_Rstar(M));
    }
  }
}

TEST_CASE("positivity and near-origin asymptotics") {
  const double c = normalization_constant();
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const Vec2 y{uniform(rng, -kPi, kPi), uniform(rng, -kPi, kPi)};
    const double r = y.norm();
    CHECK(eval_K(y, 16) > c / (r * r * r));
  }
  for (double rad : {1e-3, 1e-4}) {
    const Vec2 y{rad * std::cos(0.3), rad * std::sin(0.3)};
    const double r3 = rad * rad * rad;
    CHECK(std::fabs(r3 * eval_K(y, 64) / c - 1.0) < 1e-4);
    const Vec2 v = eval_Rstar(y, 64) * (kTwoPi * r3 / rad);
    CHECK(std::fabs(v.x1 - std::cos(0.3)) < 1e-4);
    CHECK(std::fabs(v.x2 - std::sin(0.3)) < 1e-4);
  }
}

TEST_CASE("tail-corrected lattice parts converge far faster than the raw sums") {
  const PeriodizedKernel k16(16), k512(512);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const Vec2 y{uniform(rng, -kPi, kPi), uniform(rng, -kPi, kPi)};
    CHECK(std::fabs(k16.lattice_K(y) - k512.lattice_K(y)) < 1e-9);
    const Vec2 a = k16.lattice_Rstar(y), b = k512.lattice_Rstar(y);
    CHECK(std::fabs(a.x1 - b.x1) < 2e-6);
    CHECK(std::fabs(a.x2 - b.x2) < 2e-6);
    double kk;
    Vec2 rr;
    k16.lattice_both(y, kk, rr);
    CHECK(kk == doctest::Approx(k16.lattice_K(y)).epsilon(1e-14));
    CHECK(rr.x1 == doctest::Approx(a.x1).epsilon(1e-12));
  }
  // the corrected kernel agrees with the brute-force sum to within its
  // (much larger) raw tail
  const Vec2 y{0.7, -1.9};
  CHECK(std::fabs(k512.K(y) - double(brute_K(y, 2000))) <= tail_bound_K(2000));
  // and the raw truncation is visibly worse than the correction at M = 16
  CHECK(std::fabs(eval_K(y, 16) - k512.K(y)) > 1e3 * std::fabs(k16.K(y) - k512.K(y)));
}
