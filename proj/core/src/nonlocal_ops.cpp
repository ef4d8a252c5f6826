#include "sqg/nonlocal_ops.hpp"

#include <map>
#include <mutex>
#include <string>
#include <tuple>

#include "sqg/parallel.hpp"

namespace sqg::nonlocal {

namespace {

std::shared_ptr<const KernelTable> build_table(const PvQuadrature& quad, int M, bool tamper) {
  const lattice::PeriodizedKernel kernel(M);
  auto t = std::make_shared<KernelTable>();
  t->truncation_radius = M;
  t->tampered = tamper;
  const std::vector<quad::QuadNode> reps = quad.pair_representatives();
  const std::size_t n = reps.size();
  t->y.resize(n);
  t->w.resize(n);
  t->K.resize(n);
  t->Rstar.resize(n);
  t->coarse.resize(n);

  const std::size_t disk_reps = quad.disk_nodes().size() / 2;
  const int half_angles = quad.spec().angular_nodes / 2;
  const bool embedded = half_angles % 2 == 0;
  const double sign = tamper ? -1.0 : 1.0;

  parallel_for(n, [&](std::size_t i) {
    const Vec2 y = reps[i].y;
    double kl;
    Vec2 rl;
    kernel.lattice_both(y, kl, rl);
    t->y[i] = y;
    t->w[i] = reps[i].w;
    t->K[i] = sign * (kernel.free_K(y) + kl);
    t->Rstar[i] = (kernel.free_Rstar(y) + rl) * sign;
    if (i >= disk_reps) {
      t->coarse[i] = 1.0;
    } else if (!embedded) {
      t->coarse[i] = 1.0;
    } else {
      t->coarse[i] = ((i % half_angles) % 2 == 0) ? 2.0 : 0.0;
    }
  });
  return t;
}

void check_phi(const BoxFunction& phi, Vec2 x) {
  if (phi.max_derivative_order() < 1) {
    throw CapabilityError("nonlocal operators need derivative order >= 1");
  }
  if (!std::isfinite(x.x1) || !std::isfinite(x.x2)) throw DomainError("non-finite target");
  const int need = required_extent(x);
  if (phi.extent() < need) {
    throw DomainError("function box extent " + std::to_string(phi.extent()) +
                      " too small at target; need " + std::to_string(need));
  }
}

// Samples phi at x, x + y_i, x - y_i for every pair representative.
struct Samples {
  double center = 0.0;
  std::vector<double> plus;
  std::vector<double> minus;
};

Samples sample(const BoxFunction& phi, Vec2 x, const KernelTable& t) {
  const std::size_t n = t.size();
  std::vector<Vec2> pts(2 * n + 1);
  pts[0] = x;
  for (std::size_t i = 0; i < n; ++i) {
    pts[1 + i] = x + t.y[i];
    pts[1 + n + i] = x - t.y[i];
  }
  std::vector<double> v(pts.size());
  phi.values(pts, v);
  Samples s;
  s.center = v[0];
  s.plus.assign(v.begin() + 1, v.begin() + 1 + n);
  s.minus.assign(v.begin() + 1 + n, v.end());
  return s;
}

struct Sums {
  double lambda = 0.0;
  double lambda_coarse = 0.0;
  Vec2 riesz{};
};

Sums reduce(const Samples& s, const KernelTable& t) {
  Sums out;
  const double two_c = 2.0 * s.center;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double second = two_c - s.plus[i] - s.minus[i];
    const double odd = s.plus[i] - s.minus[i];
    const double lk = t.w[i] * second * t.K[i];
    out.lambda += lk;
    out.lambda_coarse += t.coarse[i] * lk;
    out.riesz = out.riesz + t.Rstar[i] * (t.w[i] * odd);
  }
  return out;
}

}  // namespace

std::shared_ptr<const KernelTable> kernel_table(const PvQuadrature& quad, int M, bool tamper) {
  if (M < 1) throw DomainError("lattice truncation radius must be >= 1");
  static std::mutex mu;
  static std::map<std::tuple<std::uint64_t, int, bool>, std::shared_ptr<const KernelTable>>
      cache;
  const auto key = std::make_tuple(quad.id(), M, tamper);
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto t = build_table(quad, M, tamper);
  cache.emplace(key, t);
  return t;
}

OperatorContext::OperatorContext(const QuadratureSpec& spec, int truncation_radius, bool tamper)
    : quad_(std::make_shared<const PvQuadrature>(spec)),
      table_(kernel_table(*quad_, truncation_radius, tamper)) {}

int required_extent(Vec2 x) {
  const double r = x.norm_inf() / kPi;
  return int(std::ceil(r - 1e-12)) + 1;
}

double apply_lambda_tilde(const BoxFunction& phi, Vec2 x, const OperatorContext& ctx) {
  return apply_lambda_tilde_estimate(phi, x, ctx).value;
}

double apply_lambda_tilde(const BoxFunction& phi, Vec2 x, const PvQuadrature& quad, int M) {
  check_phi(phi, x);
  const auto t = kernel_table(quad, M);
  return reduce(sample(phi, x, *t), *t).lambda;
}

Estimate apply_lambda_tilde_estimate(const BoxFunction& phi, Vec2 x,
                                     const OperatorContext& ctx) {
  check_phi(phi, x);
  const Sums s = reduce(sample(phi, x, ctx.table()), ctx.table());
  return {s.lambda, std::fabs(s.lambda - s.lambda_coarse)};
}

Vec2 apply_riesz_tilde(const BoxFunction& phi, Vec2 x, const OperatorContext& ctx) {
  check_phi(phi, x);
  return reduce(sample(phi, x, ctx.table()), ctx.table()).riesz;
}

Vec2 apply_riesz_tilde(const BoxFunction& phi, Vec2 x, const PvQuadrature& quad, int M) {
  check_phi(phi, x);
  const auto t = kernel_table(quad, M);
  return reduce(sample(phi, x, *t), *t).riesz;
}

std::vector<LambdaRiesz> apply_both_field(const BoxFunction& phi,
                                          std::span<const Vec2> targets,
                                          const OperatorContext& ctx) {
  for (const Vec2& x : targets) check_phi(phi, x);
  std::vector<LambdaRiesz> out(targets.size());
  parallel_for(targets.size(), [&](std::size_t i) {
    const Sums s = reduce(sample(phi, targets[i], ctx.table()), ctx.table());
    out[i] = {s.lambda, s.riesz};
  });
  return out;
}

std::vector<double> apply_lambda_tilde_field(const BoxFunction& phi,
                                             std::span<const Vec2> targets,
                                             const OperatorContext& ctx) {
  const auto both = apply_both_field(phi, targets, ctx);
  std::vector<double> out(both.size());
  for (std::size_t i = 0; i < both.size(); ++i) out[i] = both[i].lambda;
  return out;
}

std::vector<Vec2> apply_riesz_tilde_field(const BoxFunction& phi,
                                          std::span<const Vec2> targets,
                                          const OperatorContext& ctx) {
  const auto both = apply_both_field(phi, targets, ctx);
  std::vector<Vec2> out(both.size());
  for (std::size_t i = 0; i < both.size(); ++i) out[i] = both[i].riesz;
  return out;
}

namespace {

std::vector<quad::QuadNode> torus_grid(GridRule g) {
  if (g.panels < 1 || g.order < 1) throw ConfigError("grid rule needs panels, order >= 1");
  return quad::square_grid(kPi, g.panels, g.order);
}

}  // namespace

double coercivity_inner_product(const BoxFunction& phi, const OperatorContext& ctx,
                                GridRule grid) {
  if (phi.extent() < 2) throw DomainError("coercivity inner product needs extent >= 2");
  const auto nodes = torus_grid(grid);
  std::vector<Vec2> xs(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) xs[i] = nodes[i].y;
  const std::vector<double> lam = apply_lambda_tilde_field(phi, xs, ctx);
  std::vector<double> vals(xs.size());
  phi.values(xs, vals);
  double total = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) total += nodes[i].w * vals[i] * lam[i];
  return total;
}

double riesz_tilde_l2(const BoxFunction& phi, const OperatorContext& ctx, GridRule grid) {
  if (phi.extent() < 2) throw DomainError("R-tilde L2 norm needs extent >= 2");
  const auto nodes = torus_grid(grid);
  std::vector<Vec2> xs(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) xs[i] = nodes[i].y;
  const std::vector<Vec2> r = apply_riesz_tilde_field(phi, xs, ctx);
  double total = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) total += nodes[i].w * r[i].dot(r[i]);
  return std::sqrt(total);
}

// ------------------------------------------------------------ second bound

namespace {

// Samples on the node grid x_i = -L + i h, i = 0..count-1, of a square.
struct SquareSamples {
  int count = 0;
  double h = 0.0;
  std::vector<double> v;
  double at(int i, int j) const { return v[std::size_t(i) * count + j]; }
};

// ||g||_{H^1} on a square grid: trapezoid weights, central differences in the
// interior and second-order one-sided differences on the edges.
double h1_norm_grid(const SquareSamples& g) {
  const int n = g.count;
  const double h = g.h;
  auto d = [&](int i, int j, bool first) {
    auto f = [&](int a) { return first ? g.at(a, j) : g.at(i, a); };
    const int c = first ? i : j;
    if (c == 0) return (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h);
    if (c == n - 1) return (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3)) / (2.0 * h);
    return (f(c + 1) - f(c - 1)) / (2.0 * h);
  };
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double wi = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    for (int j = 0; j < n; ++j) {
      const double wj = (j == 0 || j == n - 1) ? 0.5 : 1.0;
      const double v = g.at(i, j), g1 = d(i, j, true), g2 = d(i, j, false);
      total += wi * wj * (v * v + g1 * g1 + g2 * g2);
    }
  }
  return std::sqrt(total * h * h);
}

}  // namespace

SecondBoundTerms secondbound_terms(const spectral::GridField& psi, const BoxFunction& psi_hat,
                                   int per_period) {
  if (psi_hat.extent() < 5) throw DomainError("second bound needs psi_hat extent >= 5");
  const int m = per_period > 0 ? per_period : psi.n();
  if (m < 4) throw DomainError("second bound sampling needs >= 4 nodes per period");
  const double h = kTwoPi / m;

  // psi_hat and psi on the 5T^2 node grid -5 pi + i h, i = 0..5m
  const int n5 = 5 * m + 1;
  std::vector<Vec2> pts(std::size_t(n5) * n5);
  for (int i = 0; i < n5; ++i)
    for (int j = 0; j < n5; ++j) pts[std::size_t(i) * n5 + j] = {-5 * kPi + i * h, -5 * kPi + j * h};
  std::vector<double> hat(pts.size());
  psi_hat.values(pts, hat);

  std::vector<double> per(pts.size());
  if (m == psi.n()) {
    // -5 pi + i h = -pi + (i - 2m) h, so the periodic index is i mod m
    for (int i = 0; i < n5; ++i)
      for (int j = 0; j < n5; ++j) per[std::size_t(i) * n5 + j] = psi(i % m, j % m);
  } else {
    const BoxFunction ip = spectral::to_box_function(psi, 5, 1);
    ip.values(pts, per);
  }

  SecondBoundTerms out;
  {
    double total = 0.0;
    for (int i = 0; i < n5; ++i) {
      const double wi = (i == 0 || i == n5 - 1) ? 0.5 : 1.0;
      for (int j = 0; j < n5; ++j) {
        const double wj = (j == 0 || j == n5 - 1) ? 0.5 : 1.0;
        const double d = per[std::size_t(i) * n5 + j] - hat[std::size_t(i) * n5 + j];
        total += wi * wj * d * d;
      }
    }
    out.l2_sq_5T = total * h * h;
  }

  // 2T^2 grid: -2 pi + i h = -5 pi + (i + 3m/2) h; needs m even
  if (m % 2 != 0) throw DomainError("second bound sampling needs an even node count");
  const int off = 3 * m / 2;
  const int n2 = 2 * m + 1;
  auto hat_at = [&](int i, int j) { return hat[std::size_t(i + off) * n5 + (j + off)]; };
  SquareSamples s1{n2, h, std::vector<double>(std::size_t(n2) * n2)};
  SquareSamples s2 = s1, q1 = s1, q2 = s1;
  for (int i = 0; i < n2; ++i)
    for (int j = 0; j < n2; ++j) {
      const double base = hat_at(i, j);
      const double a = hat_at(i + m, j), b = hat_at(i, j + m);
      const std::size_t k = std::size_t(i) * n2 + j;
      s1.v[k] = a - base;
      s2.v[k] = b - base;
      q1.v[k] = a * a - base * base;
      q2.v[k] = b * b - base * base;
    }
  out.shift_1 = h1_norm_grid(s1);
  out.shift_2 = h1_norm_grid(s2);
  out.sq_shift_1 = h1_norm_grid(q1);
  out.sq_shift_2 = h1_norm_grid(q2);

  out.sup_psi = psi.max_abs();
  const spectral::VectorField g = spectral::gradient(psi);
  for (std::size_t i = 0; i < psi.size(); ++i) {
    out.sup_grad_psi = std::max(out.sup_grad_psi, std::hypot(g.c1[i], g.c2[i]));
  }
  return out;
}

double secondbound_rhs(const spectral::GridField& psi, const BoxFunction& psi_hat,
                       double c_probe, int per_period) {
  return secondbound_terms(psi, psi_hat, per_period).rhs(c_probe);
}

}  // namespace sqg::nonlocal
