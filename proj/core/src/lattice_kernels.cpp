#include "sqg/lattice_kernels.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace sqg::lattice {

namespace {

constexpr double kDomainSlack = 1e-12;

void check_point(Vec2 y, int truncation_radius) {
  if (truncation_radius < 1) {
    throw DomainError("lattice truncation radius must be >= 1, got " +
                      std::to_string(truncation_radius));
  }
  if (!std::isfinite(y.x1) || !std::isfinite(y.x2) ||
      y.norm_inf() > kPi * (1.0 + kDomainSlack)) {
    throw DomainError("kernel argument outside T^2");
  }
  if (y.x1 == 0.0 && y.x2 == 0.0) {
    throw SingularityError("kernel evaluated at the origin");
  }
}

double inv_cube(double r2) { return 1.0 / (r2 * std::sqrt(r2)); }

// sum over 0 < |k|_inf <= M of |k|^{-p}
double partial_lattice_sum(int M, double p) {
  double s = 0.0;
  for (int m = M; m >= 1; --m) {
    double shell = 0.0;
    for (int j = -m; j < m; ++j) {
      // four sides of the shell, each with 2m points
      const double r2 = double(m) * m + double(j) * j;
      shell += 4.0 * std::pow(r2, -0.5 * p);
    }
    s += shell;
  }
  return s;
}

// Visits one representative of each pair {k, -k} with 0 < |k|_inf <= M,
// outermost shell first so the small terms accumulate first.
template <class Acc, class Pair>
void for_each_pair(int M, Acc& acc, Pair&& pair) {
  for (int m = M; m >= 1; --m) {
    for (int j = m; j > -m; --j) pair(acc, m, j);
    for (int j = m - 1; j >= -m; --j) pair(acc, j, m);
  }
}

}  // namespace

double normalization_constant() {
  return 2.0 * std::tgamma(1.5) / (std::fabs(std::tgamma(-0.5)) * kPi);
}

double tail_bound_K(int truncation_radius) {
  const double c = normalization_constant();
  const double rho = (2.0 - std::numbers::sqrt2) * kPi;
  return c * 8.0 / (rho * rho * rho) / double(truncation_radius);
}

double tail_bound_Rstar(int truncation_radius) {
  const double rho = (2.0 - std::numbers::sqrt2) * kPi;
  return std::numbers::sqrt2 * 8.0 / (rho * rho * rho) / double(truncation_radius);
}

TruncatedKernel TruncatedKernel::make(KernelKind kind, int truncation_radius) {
  if (truncation_radius < 1) {
    throw DomainError("lattice truncation radius must be >= 1");
  }
  TruncatedKernel k;
  k.kind = kind;
  k.truncation_radius = truncation_radius;
  k.tail_bound = kind == KernelKind::ScalarK ? tail_bound_K(truncation_radius)
                                              : tail_bound_Rstar(truncation_radius);
  return k;
}

double eval_K(Vec2 y, int M) {
  check_point(y, M);
  double lat = 0.0;
  for_each_pair(M, lat, [&](double& acc, int k1, int k2) {
    const double a1 = kTwoPi * k1, a2 = kTwoPi * k2;
    const double dp1 = y.x1 - a1, dp2 = y.x2 - a2;
    const double dm1 = y.x1 + a1, dm2 = y.x2 + a2;
    acc += inv_cube(dp1 * dp1 + dp2 * dp2) + inv_cube(dm1 * dm1 + dm2 * dm2);
  });
  const double c = normalization_constant();
  return c * (inv_cube(y.x1 * y.x1 + y.x2 * y.x2) + lat);
}

Vec2 eval_Rstar(Vec2 y, int M) {
  check_point(y, M);
  Vec2 lat{};
  const double s = 1.0 / kTwoPi;
  for_each_pair(M, lat, [&](Vec2& acc, int k1, int k2) {
    const double a1 = kTwoPi * k1, a2 = kTwoPi * k2;
    const double p1 = y.x1 + a1, p2 = y.x2 + a2;
    const double q1 = y.x1 - a1, q2 = y.x2 - a2;
    const double ip = s * inv_cube(p1 * p1 + p2 * p2);
    const double iq = s * inv_cube(q1 * q1 + q2 * q2);
    // The corrections -k/|2 pi k|^3 of the pair cancel exactly.
    acc.x1 += p1 * ip + q1 * iq;
    acc.x2 += p2 * ip + q2 * iq;
  });
  const double ir = s * inv_cube(y.x1 * y.x1 + y.x2 * y.x2);
  return {y.x1 * ir + lat.x1, y.x2 * ir + lat.x2};
}

PeriodizedKernel::PeriodizedKernel(int truncation_radius)
    : truncation_radius_(truncation_radius), c_(normalization_constant()) {
  if (truncation_radius < 1) {
    throw DomainError("lattice truncation radius must be >= 1");
  }
  const double s3 = kLatticeZeta3 - partial_lattice_sum(truncation_radius, 3.0);
  const double s5 = kLatticeZeta5 - partial_lattice_sum(truncation_radius, 5.0);
  tail_s3_ = s3 / std::pow(kTwoPi, 3);
  tail_s5_ = s5 / std::pow(kTwoPi, 5);
}

double PeriodizedKernel::free_K(Vec2 y) const {
  return c_ * inv_cube(y.x1 * y.x1 + y.x2 * y.x2);
}

Vec2 PeriodizedKernel::free_Rstar(Vec2 y) const {
  const double ir = inv_cube(y.x1 * y.x1 + y.x2 * y.x2) / kTwoPi;
  return {y.x1 * ir, y.x2 * ir};
}

double PeriodizedKernel::lattice_K(Vec2 y) const {
  double lat = 0.0;
  for_each_pair(truncation_radius_, lat, [&](double& acc, int k1, int k2) {
    const double a1 = kTwoPi * k1, a2 = kTwoPi * k2;
    const double dp1 = y.x1 - a1, dp2 = y.x2 - a2;
    const double dm1 = y.x1 + a1, dm2 = y.x2 + a2;
    acc += inv_cube(dp1 * dp1 + dp2 * dp2) + inv_cube(dm1 * dm1 + dm2 * dm2);
  });
  const double r2 = y.x1 * y.x1 + y.x2 * y.x2;
  return c_ * (lat + tail_s3_ + 2.25 * r2 * tail_s5_);
}

Vec2 PeriodizedKernel::lattice_Rstar(Vec2 y) const {
  Vec2 lat{};
  const double s = 1.0 / kTwoPi;
  for_each_pair(truncation_radius_, lat, [&](Vec2& acc, int k1, int k2) {
    const double a1 = kTwoPi * k1, a2 = kTwoPi * k2;
    const double p1 = y.x1 + a1, p2 = y.x2 + a2;
    const double q1 = y.x1 - a1, q2 = y.x2 - a2;
    const double ip = s * inv_cube(p1 * p1 + p2 * p2);
    const double iq = s * inv_cube(q1 * q1 + q2 * q2);
    acc.x1 += p1 * ip + q1 * iq;
    acc.x2 += p2 * ip + q2 * iq;
  });
  const double tail = -tail_s3_ / (4.0 * kPi);
  return {lat.x1 + tail * y.x1, lat.x2 + tail * y.x2};
}

void PeriodizedKernel::lattice_both(Vec2 y, double& k, Vec2& rstar) const {
  struct Acc {
    double k = 0.0;
    Vec2 r{};
  } acc;
  const double s = 1.0 / kTwoPi;
  for_each_pair(truncation_radius_, acc, [&](Acc& a, int k1, int k2) {
    const double a1 = kTwoPi * k1, a2 = kTwoPi * k2;
    const double p1 = y.x1 + a1, p2 = y.x2 + a2;
    const double q1 = y.x1 - a1, q2 = y.x2 - a2;
    const double ip = inv_cube(p1 * p1 + p2 * p2);
    const double iq = inv_cube(q1 * q1 + q2 * q2);
    a.k += iq + ip;
    a.r.x1 += s * (p1 * ip + q1 * iq);
    a.r.x2 += s * (p2 * ip + q2 * iq);
  });
  const double r2 = y.x1 * y.x1 + y.x2 * y.x2;
  k = c_ * (acc.k + tail_s3_ + 2.25 * r2 * tail_s5_);
  const double tail = -tail_s3_ / (4.0 * kPi);
  rstar = {acc.r.x1 + tail * y.x1, acc.r.x2 + tail * y.x2};
}

}  // namespace sqg::lattice
