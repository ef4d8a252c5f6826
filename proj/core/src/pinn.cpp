#include "sqg/pinn.hpp"

#include <limits>

#include "sqg/net_batch.hpp"
#include "sqg/parallel.hpp"
#include "sqg/quadrature.hpp"

namespace sqg::pinn {

namespace {

constexpr double kArea = 4.0 * kPi * kPi;

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// index of spatial multi-index (d1, d2) in multi_indices_up_to order
std::size_t mi_index(int d1, int d2) {
  const int total = d1 + d2;
  return std::size_t(total * (total + 1) / 2 + (total - d1));
}

StMultiIndex spatial(MultiIndex a) { return {0, a.d1, a.d2}; }

std::vector<double> eval_many(const SpaceTimeFunction& f, std::span<const double> t,
                              std::span<const Vec2> x, StMultiIndex a) {
  std::vector<double> out(x.size());
  f.eval_batch(t, x, a, out);
  return out;
}

// Nodes of the N x N grid on T^2 (GridField layout).
std::vector<Vec2> grid_nodes(int n) {
  std::vector<Vec2> xs;
  xs.reserve(std::size_t(n) * n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) xs.push_back(GridField::node(n, j, k));
  return xs;
}

GridField sample_slice(const SpaceTimeFunction& f, double t, int n) {
  const std::vector<Vec2> xs = grid_nodes(n);
  const std::vector<double> ts(xs.size(), t);
  return GridField(n, eval_many(f, ts, xs, {}));
}

// Shifts 2 pi (p, q), p, q in -2..2, flattened as (p + 2) * 5 + (q + 2).
constexpr int kShiftCenter = 12;
constexpr int kShiftE1 = 17;
constexpr int kShiftE2 = 13;
Vec2 shift_of(int q) { return {kTwoPi * (q / 5 - 2), kTwoPi * (q % 5 - 2)}; }

// Periodicity residual from D^alpha psi at the 25 shifted points;
// D[alpha][q] with alpha indexed by mi_index, |alpha| <= s + 1.
double periodicity_from(const std::vector<std::array<double, 25>>& D, int s) {
  double block1 = 0.0, block2 = 0.0, block3 = 0.0;
  for (MultiIndex a : multi_indices_up_to(s)) {
    const auto& v = D[mi_index(a.d1, a.d2)];
    for (int q = 0; q < 25; ++q) {
      const double d = v[kShiftCenter] - v[std::size_t(q)];
      block1 += d * d;
    }
  }
  for (MultiIndex a : multi_indices_up_to(s + 1)) {
    const auto& v = D[mi_index(a.d1, a.d2)];
    const double d1 = v[kShiftCenter] - v[kShiftE1];
    const double d2 = v[kShiftCenter] - v[kShiftE2];
    block2 += d1 * d1 + d2 * d2;
  }
  for (MultiIndex a : multi_indices_up_to(s)) {
    const auto& g = D[mi_index(a.d1, a.d2)];
    const auto& g1 = D[mi_index(a.d1 + 1, a.d2)];
    const auto& g2 = D[mi_index(a.d1, a.d2 + 1)];
    // D^beta (g^2) for beta = 0, e1, e2
    auto sq = [&](int q, int beta) {
      const double v = g[std::size_t(q)];
      if (beta == 0) return v * v;
      return 2.0 * v * (beta == 1 ? g1 : g2)[std::size_t(q)];
    };
    for (int beta = 0; beta < 3; ++beta) {
      for (int e : {kShiftE1, kShiftE2}) {
        const double d = sq(e, beta) - sq(kShiftCenter, beta);
        block3 += d * d;
      }
    }
  }
  return block1 + block2 + block3;
}

}  // namespace

// ------------------------------------------------------------ space-time fns

void SpaceTimeFunction::eval_batch(std::span<const double> t, std::span<const Vec2> x,
                                   StMultiIndex a, std::span<double> out) const {
  if (t.size() != x.size() || out.size() != x.size()) throw DomainError("batch size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = eval(t[i], x[i], a);
}

BoxFunction SpaceTimeFunction::slice(double t, int extent) const {
  return BoxFunction(
      extent, max_order(),
      [this, t](Vec2 x, MultiIndex a) { return eval(t, x, spatial(a)); },
      [this, t](std::span<const Vec2> xs, std::span<double> out) {
        const std::vector<double> ts(xs.size(), t);
        eval_batch(ts, xs, {}, out);
      });
}

NetworkFunction::NetworkFunction(net::MlpParams p, int max_order)
    : p_(std::move(p)), max_order_(max_order) {}

double NetworkFunction::eval(double t, Vec2 x, StMultiIndex a) const {
  return net::eval(p_, {t, x.x1, x.x2}, a, max_order_);
}

void NetworkFunction::eval_batch(std::span<const double> t, std::span<const Vec2> x,
                                 StMultiIndex a, std::span<double> out) const {
  if (t.size() != x.size() || out.size() != x.size()) throw DomainError("batch size mismatch");
  if (a.order() > max_order_) {
    throw CapabilityError("derivative order exceeds network maximum");
  }
  if (a.order() > 1) {
    SpaceTimeFunction::eval_batch(t, x, a, out);
    return;
  }
  const std::size_t chunk = 2048;
  const std::size_t chunks = (x.size() + chunk - 1) / chunk;
  const int row = a.dt ? 0 : (a.d1 ? 1 : 2);
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t lo = c * chunk, hi = std::min(x.size(), lo + chunk);
    Eigen::Matrix3Xd pts(3, Eigen::Index(hi - lo));
    for (std::size_t i = lo; i < hi; ++i) pts.col(Eigen::Index(i - lo)) << t[i], x[i].x1, x[i].x2;
    net::BatchNet bn(p_);
    if (a.order() == 0) {
      const Eigen::VectorXd v = bn.values(pts);
      for (std::size_t i = lo; i < hi; ++i) out[i] = v(Eigen::Index(i - lo));
    } else {
      const auto o = bn.forward(pts, true);
      for (std::size_t i = lo; i < hi; ++i) out[i] = o.grad(row, Eigen::Index(i - lo));
    }
  });
}

double AnalyticFunction::eval(double t, Vec2 x, StMultiIndex a) const {
  if (a.order() > max_order_) throw CapabilityError("derivative order exceeds maximum");
  return f_(t, x, a);
}

ReferenceFunction::ReferenceFunction(const solver::Trajectory& traj, int extent, int max_order)
    : max_order_(max_order) {
  if (traj.snapshots.size() < 2) throw DomainError("reference needs at least two snapshots");
  for (const auto& snap : traj.snapshots) {
    if (!times_.empty() && !(snap.time > times_.back())) {
      throw DomainError("reference snapshot times must increase");
    }
    times_.push_back(snap.time);
    value_.push_back(spectral::to_box_function(snap.field, extent, max_order));
    rate_.push_back(spectral::to_box_function(solver::rhs(snap.field.remove_mean()), extent,
                                              max_order));
  }
}

double ReferenceFunction::eval(double t, Vec2 x, StMultiIndex a) const {
  if (a.dt > 1) throw CapabilityError("reference supports time derivatives of order <= 1");
  if (a.order() > max_order_) throw CapabilityError("derivative order exceeds maximum");
  const double span = times_.back() - times_.front();
  if (t < times_.front() - 1e-12 * span || t > times_.back() + 1e-12 * span) {
    throw DomainError("time outside the reference trajectory");
  }
  t = std::clamp(t, times_.front(), times_.back());
  std::size_t k = std::size_t(std::upper_bound(times_.begin(), times_.end(), t) - times_.begin());
  k = std::clamp<std::size_t>(k, 1, times_.size() - 1) - 1;
  const double h = times_[k + 1] - times_[k];
  const double s = (t - times_[k]) / h;
  const MultiIndex m{a.d1, a.d2};
  const double y0 = value_[k](x, m), y1 = value_[k + 1](x, m);
  const double m0 = rate_[k](x, m), m1 = rate_[k + 1](x, m);
  const double s2 = s * s, s3 = s2 * s;
  if (a.dt == 0) {
    return (2 * s3 - 3 * s2 + 1) * y0 + h * (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * y1 +
           h * (s3 - s2) * m1;
  }
  return ((6 * s2 - 6 * s) * y0 + (-6 * s2 + 6 * s) * y1) / h + (3 * s2 - 4 * s + 1) * m0 +
         (3 * s2 - 2 * s) * m1;
}

// ------------------------------------------------------------------- config

void ResidualConfig::validate() const {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (s < 0) throw ConfigError("s must be >= 0");
  if (!(T > 0.0)) throw ConfigError("T must be positive");
  for (int c : {interior_grid, interior_time_nodes, boundary_panels, boundary_order,
                boundary_time_nodes, periodicity_panels, periodicity_order,
                periodicity_time_nodes, penalty_grid}) {
    if (c < 1) throw ConfigError("collocation counts must be >= 1");
  }
  if (penalty_time_nodes < 2) throw ConfigError("penalty needs >= 2 time nodes");
  if (interior_grid % 2 || penalty_grid % 2) throw ConfigError("grid sizes must be even");
  if (truncation < 1) throw ConfigError("truncation radius must be >= 1");
  quadrature.validate();
}

void ErrorReport::assemble() {
  E_G = std::sqrt(E_G_i * E_G_i + E_G_t * E_G_t + E_G_b * E_G_b + E_G_per * E_G_per +
                  lambda * E_G_p * E_G_p);
}

// ---------------------------------------------------------------- residuals

std::vector<double> pde_residual(const SpaceTimeFunction& f, double t, std::span<const Vec2> xs,
                                 const OperatorContext& ctx) {
  int extent = 2;
  for (const Vec2& x : xs) extent = std::max(extent, nonlocal::required_extent(x));
  const BoxFunction phi = f.slice(t, extent);
  const auto both = nonlocal::apply_both_field(phi, xs, ctx);
  const std::vector<double> ts(xs.size(), t);
  const auto dt = eval_many(f, ts, xs, {1, 0, 0});
  const auto d1 = eval_many(f, ts, xs, {0, 1, 0});
  const auto d2 = eval_many(f, ts, xs, {0, 0, 1});
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Vec2 r = both[i].riesz;
    // R-tilde^perp = (-R2, R1)
    out[i] = dt[i] - r.x2 * d1[i] + r.x1 * d2[i] + both[i].lambda;
  }
  return out;
}

double pde_residual(const SpaceTimeFunction& f, double t, Vec2 x, const OperatorContext& ctx) {
  const Vec2 xs[1] = {x};
  return pde_residual(f, t, std::span<const Vec2>(xs, 1), ctx)[0];
}

double interior_error_sq(const SpaceTimeFunction& f, const ResidualConfig& cfg) {
  const OperatorContext ctx(cfg.quadrature, cfg.truncation);
  const quad::Rule1D tr = quad::gauss_legendre(cfg.interior_time_nodes, 0.0, cfg.T);
  const std::vector<Vec2> xs = grid_nodes(cfg.interior_grid);
  double total = 0.0;
  for (std::size_t i = 0; i < tr.x.size(); ++i) {
    const GridField r(cfg.interior_grid, pde_residual(f, tr.x[i], xs, ctx));
    const double n = spectral::sobolev_norm(r, cfg.s);
    total += tr.w[i] * n * n;
  }
  return total;
}

double initial_residual_norm(const SpaceTimeFunction& f, const GridField& psi0, int s) {
  const GridField g = sample_slice(f, 0.0, psi0.n());
  return spectral::sobolev_norm(g - psi0, s);
}

double boundary_residual(const SpaceTimeFunction& f, int s, double t, double x1, double x2) {
  double r = 0.0;
  for (MultiIndex a : multi_indices_up_to(s)) {
    const StMultiIndex st = spatial(a);
    const double d1 = f.eval(t, {x1, kPi}, st) - f.eval(t, {x1, -kPi}, st);
    const double d2 = f.eval(t, {kPi, x2}, st) - f.eval(t, {-kPi, x2}, st);
    r += d1 * d1 + d2 * d2;
  }
  return r;
}

double boundary_error_sq(const SpaceTimeFunction& f, const ResidualConfig& cfg) {
  const quad::Rule1D tr = quad::gauss_legendre(cfg.boundary_time_nodes, 0.0, cfg.T);
  const quad::Rule1D xr = quad::composite_gauss(cfg.boundary_panels, cfg.boundary_order, -kPi, kPi);
  const std::size_t nt = tr.x.size(), nx = xr.x.size(), n = nt * nx;
  std::vector<double> ts(4 * n);
  std::vector<Vec2> xs(4 * n);
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t j = 0; j < nx; ++j) {
      const std::size_t k = i * nx + j;
      const double c = xr.x[j];
      for (int m = 0; m < 4; ++m) ts[4 * k + m] = tr.x[i];
      xs[4 * k + 0] = {c, kPi};
      xs[4 * k + 1] = {c, -kPi};
      xs[4 * k + 2] = {kPi, c};
      xs[4 * k + 3] = {-kPi, c};
    }
  double total = 0.0;
  for (MultiIndex a : multi_indices_up_to(cfg.s)) {
    const auto v = eval_many(f, ts, xs, spatial(a));
    for (std::size_t i = 0; i < nt; ++i)
      for (std::size_t j = 0; j < nx; ++j) {
        const std::size_t k = i * nx + j;
        const double d1 = v[4 * k] - v[4 * k + 1], d2 = v[4 * k + 2] - v[4 * k + 3];
        total += tr.w[i] * xr.w[j] * (d1 * d1 + d2 * d2);
      }
  }
  return total;
}

double periodicity_residual(const SpaceTimeFunction& f, int s, double t, Vec2 x) {
  const auto mis = multi_indices_up_to(s + 1);
  std::vector<std::array<double, 25>> D(mis.size());
  for (std::size_t i = 0; i < mis.size(); ++i)
    for (int q = 0; q < 25; ++q) D[i][std::size_t(q)] = f.eval(t, x + shift_of(q), spatial(mis[i]));
  return periodicity_from(D, s);
}

double periodicity_error_sq(const SpaceTimeFunction& f, const ResidualConfig& cfg) {
  const quad::Rule1D tr = quad::gauss_legendre(cfg.periodicity_time_nodes, 0.0, cfg.T);
  const auto nodes = quad::square_grid(kTwoPi, cfg.periodicity_panels, cfg.periodicity_order);
  const std::size_t n = tr.x.size() * nodes.size();
  std::vector<double> ts(25 * n);
  std::vector<Vec2> xs(25 * n);
  for (std::size_t i = 0; i < tr.x.size(); ++i)
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      const std::size_t k = i * nodes.size() + j;
      for (int q = 0; q < 25; ++q) {
        ts[25 * k + std::size_t(q)] = tr.x[i];
        xs[25 * k + std::size_t(q)] = nodes[j].y + shift_of(q);
      }
    }
  const auto mis = multi_indices_up_to(cfg.s + 1);
  std::vector<std::vector<double>> vals(mis.size());
  for (std::size_t m = 0; m < mis.size(); ++m) vals[m] = eval_many(f, ts, xs, spatial(mis[m]));
  double total = 0.0;
  std::vector<std::array<double, 25>> D(mis.size());
  for (std::size_t i = 0; i < tr.x.size(); ++i)
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      const std::size_t k = i * nodes.size() + j;
      for (std::size_t m = 0; m < mis.size(); ++m)
        for (std::size_t q = 0; q < 25; ++q) D[m][q] = vals[m][25 * k + q];
      total += tr.w[i] * nodes[j].w * periodicity_from(D, cfg.s);
    }
  return total;
}

double penalty_term(const SpaceTimeFunction& f, const ResidualConfig& cfg) {
  const int nt = cfg.penalty_time_nodes;
  const double h = cfg.T / (nt - 1);
  double total = 0.0;
  for (int i = 0; i < nt; ++i) {
    const double w = (i == 0 || i == nt - 1) ? 0.5 * h : h;
    const double n = spectral::sobolev_norm(sample_slice(f, i * h, cfg.penalty_grid), cfg.s + 3);
    total += w * n * n;
  }
  return std::sqrt(total);
}

ErrorReport generalization_error(const SpaceTimeFunction& f, const GridField& psi0,
                                 const ResidualConfig& cfg) {
  cfg.validate();
  ErrorReport r;
  r.lambda = cfg.lambda;
  r.E_G_i = std::sqrt(interior_error_sq(f, cfg));
  r.E_G_t = initial_residual_norm(f, psi0, cfg.s);
  r.E_G_b = std::sqrt(boundary_error_sq(f, cfg));
  r.E_G_per = std::sqrt(periodicity_error_sq(f, cfg));
  r.E_G_p = penalty_term(f, cfg);
  r.E_total = -1.0;
  r.assemble();
  return r;
}

double total_error(const SpaceTimeFunction& f, const solver::Trajectory& reference, int s,
                   double T) {
  const auto& snaps = reference.snapshots;
  if (snaps.empty() || std::fabs(snaps.front().time) > 1e-12) {
    throw DomainError("reference must start at t = 0");
  }
  std::vector<double> times, vals;
  for (const auto& snap : snaps) {
    if (snap.time > T * (1 + 1e-12)) break;
    const GridField g = sample_slice(f, snap.time, snap.field.n());
    const double n = spectral::sobolev_norm(snap.field - g, s);
    times.push_back(snap.time);
    vals.push_back(n * n);
  }
  if (times.size() < 2 || std::fabs(times.back() - T) > 1e-9 * std::max(1.0, T)) {
    throw DomainError("reference snapshots do not cover [0, T] up to a snapshot at T");
  }
  double total = 0.0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    total += 0.5 * (times[i] - times[i - 1]) * (vals[i] + vals[i - 1]);
  }
  return std::sqrt(total);
}

// --------------------------------------------------------------------- bound

double bound_rhs(double E_G, double lambda, double C) {
  const double r = std::sqrt(lambda);
  return C * E_G * E_G * (1.0 + 1.0 / r) * std::exp(C + E_G / r);
}

BoundVerdict bound_check(double E, double E_G, double lambda, double C_fit) {
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
  if (E < 0.0 || E_G < 0.0) throw DomainError("errors must be nonnegative");
  BoundVerdict v;
  v.rhs = bound_rhs(E_G, lambda, C_fit);
  if (E == 0.0) {
    v.c_min = 0.0;
    v.holds = C_fit >= 0.0;
    return v;
  }
  if (E_G == 0.0) {
    v.violated = true;
    v.c_min = std::numeric_limits<double>::infinity();
    return v;
  }
  // compare logs: log C + C + log(E_G^2 (1 + 1/sqrt(lambda))) + E_G/sqrt(lambda) vs log E^2
  const double r = std::sqrt(lambda);
  const double offset = std::log(E_G * E_G * (1.0 + 1.0 / r)) + E_G / r;
  const double target = 2.0 * std::log(E);
  auto g = [&](double c) { return std::log(c) + c + offset - target; };
  double lo = 0.0, hi = 1.0;
  while (g(hi) < 0.0) hi *= 2.0;
  for (int it = 0; it < 400 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mid > 0.0 && g(mid) >= 0.0 ? hi : lo) = mid;
  }
  v.c_min = hi;
  v.holds = C_fit > 0.0 && g(C_fit) >= 0.0;
  return v;
}

BoundVerdict bound_check(const ErrorReport& report, double C_fit) {
  if (report.E_total < 0.0) throw DomainError("report carries no total error");
  return bound_check(report.E_total, report.E_G, report.lambda, C_fit);
}

// ------------------------------------------------------------------ training

void TrainConfig::validate() const {
  residual.validate();
  if (residual.s != 0) throw CapabilityError("training supports s = 0 only");
  for (int c : {interior_batch, boundary_batch, periodicity_batch, initial_grid, penalty_grid,
                penalty_times, validation_interior, validation_boundary,
                validation_periodicity}) {
    if (c < 1) throw ConfigError("training batch sizes must be >= 1");
  }
  if (initial_grid % 2 || penalty_grid % 2) throw ConfigError("training grids must be even");
  if (log_every < 1) throw ConfigError("log_every must be >= 1");
  if (!(adam.lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(lr_final_ratio > 0.0 && lr_final_ratio <= 1.0)) {
    throw ConfigError("lr_final_ratio must be in (0, 1]");
  }
  if (truncation < 1) throw ConfigError("truncation radius must be >= 1");
  quadrature.validate();
}

Collocation Collocation::sample(const TrainConfig& cfg, std::uint64_t seed, bool validation) {
  std::mt19937_64 rng(seed);
  const double T = cfg.residual.T;
  Collocation c;
  const int ni = validation ? cfg.validation_interior : cfg.interior_batch;
  const int nb = validation ? cfg.validation_boundary : cfg.boundary_batch;
  const int np = validation ? cfg.validation_periodicity : cfg.periodicity_batch;
  for (int i = 0; i < ni; ++i) {
    c.interior_t.push_back(uniform(rng, 0.0, T));
    c.interior_x.push_back({uniform(rng, -kPi, kPi), uniform(rng, -kPi, kPi)});
  }
  for (int i = 0; i < nb; ++i) {
    c.boundary_t.push_back(uniform(rng, 0.0, T));
    c.boundary_s.push_back(uniform(rng, -kPi, kPi));
  }
  for (int i = 0; i < np; ++i) {
    c.periodicity_t.push_back(uniform(rng, 0.0, T));
    c.periodicity_x.push_back({uniform(rng, -kTwoPi, kTwoPi), uniform(rng, -kTwoPi, kTwoPi)});
  }
  if (validation) {
    c.penalty_trapezoid = true;
    c.penalty_t = {0.0, 0.5 * T, T};
  } else {
    for (int i = 0; i < cfg.penalty_times; ++i) c.penalty_t.push_back(uniform(rng, 0.0, T));
  }
  return c;
}

TrainingLoss::TrainingLoss(const TrainConfig& cfg, const GridField& psi0)
    : cfg_(cfg), ctx_(cfg.quadrature, cfg.truncation) {
  cfg_.validate();
  const int n0 = cfg.initial_grid;
  if (psi0.n() % n0 == 0) {
    const int r = psi0.n() / n0;
    for (int j = 0; j < n0; ++j)
      for (int k = 0; k < n0; ++k) psi0_samples_.push_back(psi0(r * j, r * k));
  } else {
    const BoxFunction b = spectral::to_box_function(psi0, 1, 0);
    for (const Vec2& x : grid_nodes(n0)) psi0_samples_.push_back(b(x));
  }
}

double TrainingLoss::evaluate(const net::MlpParams& p, const Collocation& c,
                              std::vector<double>* grad, LossComponents* comps) const {
  const double T = cfg_.residual.T;
  const double lambda = cfg_.residual.lambda;
  const std::size_t np = p.num_params();
  if (grad) grad->assign(np, 0.0);
  LossComponents lc;
  using Eigen::Index;

  // PDE residual, chunked so the gradient merge order is fixed
  {
    const auto& tab = ctx_.table();
    const std::size_t R = tab.size();
    double sum2wk = 0.0;
    for (std::size_t r = 0; r < R; ++r) sum2wk += 2.0 * tab.w[r] * tab.K[r];
    const std::size_t B = c.interior_t.size();
    const double coef = T * kArea / double(B);
    const std::size_t chunk = 8;
    const std::size_t chunks = (B + chunk - 1) / chunk;
    std::vector<double> part_loss(chunks, 0.0);
    std::vector<std::vector<double>> part_grad(grad ? chunks : 0);
    parallel_for(chunks, [&](std::size_t ci) {
      const std::size_t lo = ci * chunk, hi = std::min(B, lo + chunk), nb = hi - lo;
      Eigen::Matrix3Xd pc(3, Index(nb)), ps(3, Index(2 * nb * R));
      for (std::size_t b = 0; b < nb; ++b) {
        const double t = c.interior_t[lo + b];
        const Vec2 x = c.interior_x[lo + b];
        pc.col(Index(b)) << t, x.x1, x.x2;
        for (std::size_t r = 0; r < R; ++r) {
          const Vec2 xp = x + tab.y[r], xm = x - tab.y[r];
          ps.col(Index(2 * (b * R + r))) << t, xp.x1, xp.x2;
          ps.col(Index(2 * (b * R + r) + 1)) << t, xm.x1, xm.x2;
        }
      }
      net::BatchNet center(p), shifted(p);
      const auto oc = center.forward(pc, true);
      const auto os = shifted.forward(ps, false);
      Eigen::RowVectorXd gvc(static_cast<Index>(nb)), gvs(static_cast<Index>(2 * nb * R));
      Eigen::Matrix3Xd gd(3, static_cast<Index>(nb));
      double loss = 0.0;
      for (std::size_t b = 0; b < nb; ++b) {
        const double v = oc.value(Index(b));
        const double pt = oc.grad(0, Index(b)), p1 = oc.grad(1, Index(b)), p2 = oc.grad(2, Index(b));
        double lam = 0.0;
        Vec2 rz{};
        for (std::size_t r = 0; r < R; ++r) {
          const double vp = os.value(Index(2 * (b * R + r)));
          const double vm = os.value(Index(2 * (b * R + r) + 1));
          lam += tab.w[r] * (2.0 * v - vp - vm) * tab.K[r];
          rz = rz + tab.Rstar[r] * (tab.w[r] * (vp - vm));
        }
        const double u1 = -rz.x2, u2 = rz.x1;
        const double res = pt + u1 * p1 + u2 * p2 + lam;
        loss += coef * res * res;
        const double g = 2.0 * coef * res;
        gvc(Index(b)) = g * sum2wk;
        gd(0, Index(b)) = g;
        gd(1, Index(b)) = g * u1;
        gd(2, Index(b)) = g * u2;
        for (std::size_t r = 0; r < R; ++r) {
          const double a = -tab.w[r] * tab.K[r];
          const double o = tab.w[r] * (-tab.Rstar[r].x2 * p1 + tab.Rstar[r].x1 * p2);
          gvs(Index(2 * (b * R + r))) = g * (a + o);
          gvs(Index(2 * (b * R + r) + 1)) = g * (a - o);
        }
      }
      part_loss[ci] = loss;
      if (grad && cfg_.w_interior != 0.0) {
        center.backward(gvc, gd, part_grad[ci]);
        shifted.backward(gvs, Eigen::Matrix3Xd(3, 0), part_grad[ci]);
      }
    });
    for (std::size_t ci = 0; ci < chunks; ++ci) {
      lc.interior += part_loss[ci];
      if (grad && cfg_.w_interior != 0.0) {
        for (std::size_t i = 0; i < np; ++i) (*grad)[i] += cfg_.w_interior * part_grad[ci][i];
      }
    }
  }

  std::vector<double> g_local;
  auto add_grad = [&](double w) {
    if (!grad) return;
    for (std::size_t i = 0; i < np; ++i) (*grad)[i] += w * g_local[i];
  };

  // initial residual on the grid at t = 0
  {
    const int n0 = cfg_.initial_grid;
    const std::vector<Vec2> xs = grid_nodes(n0);
    Eigen::Matrix3Xd pts(3, Index(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) pts.col(Index(i)) << 0.0, xs[i].x1, xs[i].x2;
    net::BatchNet bn(p);
    const auto o = bn.forward(pts, false);
    const double coef = kArea / double(n0 * n0);
    Eigen::RowVectorXd gv(Index(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double d = o.value(Index(i)) - psi0_samples_[i];
      lc.initial += coef * d * d;
      gv(Index(i)) = 2.0 * coef * d;
    }
    if (grad && cfg_.w_initial != 0.0) {
      g_local.assign(np, 0.0);
      bn.backward(gv, Eigen::Matrix3Xd(3, 0), g_local);
      add_grad(cfg_.w_initial);
    }
  }

  // boundary faces
  {
    const std::size_t B = c.boundary_t.size();
    Eigen::Matrix3Xd pts(3, Index(4 * B));
    for (std::size_t b = 0; b < B; ++b) {
      const double t = c.boundary_t[b], s = c.boundary_s[b];
      pts.col(Index(4 * b)) << t, s, kPi;
      pts.col(Index(4 * b + 1)) << t, s, -kPi;
      pts.col(Index(4 * b + 2)) << t, kPi, s;
      pts.col(Index(4 * b + 3)) << t, -kPi, s;
    }
    net::BatchNet bn(p);
    const auto o = bn.forward(pts, false);
    const double coef = T * kTwoPi / double(B);
    Eigen::RowVectorXd gv(Index(4 * B));
    for (std::size_t b = 0; b < B; ++b) {
      const double d1 = o.value(Index(4 * b)) - o.value(Index(4 * b + 1));
      const double d2 = o.value(Index(4 * b + 2)) - o.value(Index(4 * b + 3));
      lc.boundary += coef * (d1 * d1 + d2 * d2);
      gv(Index(4 * b)) = 2 * coef * d1;
      gv(Index(4 * b + 1)) = -2 * coef * d1;
      gv(Index(4 * b + 2)) = 2 * coef * d2;
      gv(Index(4 * b + 3)) = -2 * coef * d2;
    }
    if (grad && cfg_.w_boundary != 0.0) {
      g_local.assign(np, 0.0);
      bn.backward(gv, Eigen::Matrix3Xd(3, 0), g_local);
      add_grad(cfg_.w_boundary);
    }
  }

  // periodicity over 2T^2, 25 shifted copies with first derivatives
  {
    const std::size_t B = c.periodicity_t.size();
    Eigen::Matrix3Xd pts(3, Index(25 * B));
    for (std::size_t b = 0; b < B; ++b)
      for (int q = 0; q < 25; ++q) {
        const Vec2 x = c.periodicity_x[b] + shift_of(q);
        pts.col(Index(25 * b + std::size_t(q))) << c.periodicity_t[b], x.x1, x.x2;
      }
    net::BatchNet bn(p);
    const auto o = bn.forward(pts, true);
    const double coef = T * 4.0 * kArea / double(B);
    Eigen::RowVectorXd gv = Eigen::RowVectorXd::Zero(Index(25 * B));
    Eigen::Matrix3Xd gd = Eigen::Matrix3Xd::Zero(3, Index(25 * B));
    for (std::size_t b = 0; b < B; ++b) {
      const Index base = Index(25 * b);
      // A[0] values, A[1] d/dx1, A[2] d/dx2 at shift q
      auto A = [&](int k, int q) {
        return k == 0 ? o.value(base + q) : o.grad(k, base + q);
      };
      auto G = [&](int k, int q) -> double& {
        return k == 0 ? gv(base + q) : gd(k, base + q);
      };
      double res = 0.0;
      const int C = kShiftCenter;
      for (int q = 0; q < 25; ++q) {
        const double d = A(0, C) - A(0, q);
        res += d * d;
        G(0, C) += 2 * coef * d;
        G(0, q) -= 2 * coef * d;
      }
      for (int k = 0; k < 3; ++k)
        for (int e : {kShiftE1, kShiftE2}) {
          const double d = A(k, C) - A(k, e);
          res += d * d;
          G(k, C) += 2 * coef * d;
          G(k, e) -= 2 * coef * d;
        }
      for (int e : {kShiftE1, kShiftE2}) {
        {
          const double d = A(0, e) * A(0, e) - A(0, C) * A(0, C);
          res += d * d;
          G(0, e) += 2 * coef * d * 2 * A(0, e);
          G(0, C) -= 2 * coef * d * 2 * A(0, C);
        }
        for (int k = 1; k <= 2; ++k) {
          const double d = 2 * A(0, e) * A(k, e) - 2 * A(0, C) * A(k, C);
          res += d * d;
          G(0, e) += 2 * coef * d * 2 * A(k, e);
          G(k, e) += 2 * coef * d * 2 * A(0, e);
          G(0, C) -= 2 * coef * d * 2 * A(k, C);
          G(k, C) -= 2 * coef * d * 2 * A(0, C);
        }
      }
      lc.periodicity += coef * res;
    }
    if (grad && cfg_.w_periodicity != 0.0) {
      g_local.assign(np, 0.0);
      bn.backward(gv, gd, g_local);
      add_grad(cfg_.w_periodicity);
    }
  }

  // H^{s+3} penalty of grid samples
  {
    const int n = cfg_.penalty_grid;
    const int k = cfg_.residual.s + 3;
    const std::size_t nt = c.penalty_t.size();
    const std::vector<Vec2> xs = grid_nodes(n);
    for (std::size_t i = 0; i < nt; ++i) {
      double w = T / double(nt);
      if (c.penalty_trapezoid) {
        const double h = T / double(nt - 1);
        w = (i == 0 || i + 1 == nt) ? 0.5 * h : h;
      }
      Eigen::Matrix3Xd pts(3, Index(xs.size()));
      for (std::size_t j = 0; j < xs.size(); ++j) pts.col(Index(j)) << c.penalty_t[i], xs[j].x1, xs[j].x2;
      net::BatchNet bn(p);
      const auto o = bn.forward(pts, false);
      const GridField g(n, std::vector<double>(o.value.data(), o.value.data() + o.value.size()));
      const double norm = spectral::sobolev_norm(g, k);
      lc.penalty += w * norm * norm;
      if (grad && cfg_.w_penalty != 0.0) {
        spectral::Spectrum sp = spectral::forward(g);
        spectral::apply_multiplier(sp, [k](double n1, double n2) {
          double m = 0.0;
          for (MultiIndex a : multi_indices_up_to(k)) {
            m += std::pow(n1, 2 * a.d1) * std::pow(n2, 2 * a.d2);
          }
          return std::complex<double>(m, 0.0);
        });
        const GridField ag = spectral::inverse(sp);
        const double coef = w * 2.0 * kArea / double(n * n);
        Eigen::RowVectorXd gv(Index(xs.size()));
        for (std::size_t j = 0; j < xs.size(); ++j) gv(Index(j)) = coef * ag[j];
        g_local.assign(np, 0.0);
        bn.backward(gv, Eigen::Matrix3Xd(3, 0), g_local);
        add_grad(cfg_.w_penalty * lambda);
      }
    }
  }

  if (comps) *comps = lc;
  return cfg_.w_interior * lc.interior + cfg_.w_initial * lc.initial +
         cfg_.w_boundary * lc.boundary + cfg_.w_periodicity * lc.periodicity +
         cfg_.w_penalty * lambda * lc.penalty;
}

TrainResult train(const net::MlpParams& theta0, const GridField& psi0, const TrainConfig& cfg,
                  const std::vector<std::size_t>& checkpoint_steps,
                  const std::function<void(const HistoryRow&)>& progress) {
  cfg.validate();
  const TrainingLoss loss(cfg, psi0);
  const Collocation validation = Collocation::sample(cfg, mix(cfg.seed, 0xffffffffULL), true);

  TrainResult out;
  net::MlpParams p = theta0;
  net::AdamState state;
  out.best = p;
  out.best_validation = std::numeric_limits<double>::infinity();

  auto validate_at = [&](std::size_t step, double batch_loss) {
    HistoryRow row;
    row.step = step;
    row.loss = batch_loss;
    // switched-off components do not count toward the selection either
    row.validation_E_G = std::sqrt(loss.evaluate(p, validation, nullptr, &row.validation));
    if (!std::isfinite(row.validation_E_G)) {
      throw PoisonError("validation error is not finite at step " + std::to_string(step));
    }
    if (row.validation_E_G < out.best_validation) {
      out.best_validation = row.validation_E_G;
      out.best = p;
      out.best_step = step;
    }
    row.best_E_G = out.best_validation;
    out.history.push_back(row);
    if (progress) progress(row);
  };

  validate_at(0, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> g;
  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    const Collocation batch = Collocation::sample(cfg, mix(cfg.seed, step), false);
    const double l = loss.evaluate(p, batch, &g);
    if (!std::isfinite(l)) {
      throw PoisonError("training loss diverged at step " + std::to_string(step));
    }
    if (step == 1) out.first_loss = l;
    net::AdamConfig adam = cfg.adam;
    if (cfg.lr_final_ratio != 1.0) {
      adam.lr *= std::pow(cfg.lr_final_ratio, static_cast<double>(step - 1) / cfg.steps);
    }
    net::adam_step(p.theta, g, state, adam);
    if (step % cfg.log_every == 0 || step == cfg.steps) validate_at(step, l);
    if (std::find(checkpoint_steps.begin(), checkpoint_steps.end(), step) !=
        checkpoint_steps.end()) {
      out.checkpoints.emplace_back(step, out.best);
    }
  }
  out.last = p;
  return out;
}

}  // namespace sqg::pinn
