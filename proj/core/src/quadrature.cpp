#include "sqg/quadrature.hpp"

#include <cstring>
#include <string>

namespace sqg::quad {

Rule1D gauss_legendre(int n) {
  if (n < 1) throw DomainError("Gauss-Legendre order must be >= 1");
  Rule1D r;
  r.x.assign(n, 0.0);
  r.w.assign(n, 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-16) break;
    }
    // recompute the derivative at the converged node for the weight
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    if (2 * i + 1 == n) x = 0.0;
    r.x[n - 1 - i] = x;
    r.x[i] = -x;
    r.w[n - 1 - i] = w;
    r.w[i] = w;
  }
  return r;
}

Rule1D gauss_legendre(int n, double a, double b) {
  Rule1D r = gauss_legendre(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    r.x[i] = mid + half * r.x[i];
    r.w[i] *= half;
  }
  return r;
}

Rule1D composite_gauss(int panels, int order, double a, double b) {
  if (panels < 1) throw DomainError("panel count must be >= 1");
  Rule1D out;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const Rule1D r = gauss_legendre(order, a + p * h, a + (p + 1) * h);
    out.x.insert(out.x.end(), r.x.begin(), r.x.end());
    out.w.insert(out.w.end(), r.w.begin(), r.w.end());
  }
  return out;
}

// ------------------------------------------------------------------- presets

QuadratureSpec QuadratureSpec::oracle() { return QuadratureSpec{}; }

QuadratureSpec QuadratureSpec::reporting() {
  QuadratureSpec s;
  s.ring_ratio = 2.0;
  s.max_ring_width = 0.6;
  s.radial_order = 8;
  s.core_order = 3;
  s.angular_nodes = 40;
  s.corner_theta_order = 10;
  s.corner_radial_order = 10;
  s.corner_panels = 1;
  return s;
}

QuadratureSpec QuadratureSpec::training() {
  QuadratureSpec s;
  s.inner_cutoff = 1e-3;
  s.ring_ratio = std::pow(kPi / s.inner_cutoff, 1.0 / 8.0);
  s.max_ring_width = 10.0;
  s.radial_order = 2;
  s.core_order = 1;
  s.angular_nodes = 16;
  s.corner_theta_order = 3;
  s.corner_radial_order = 3;
  s.corner_panels = 1;
  return s;
}

QuadratureSpec QuadratureSpec::refined() const {
  QuadratureSpec s = *this;
  s.ring_ratio = std::sqrt(ring_ratio);
  s.max_ring_width = 0.5 * max_ring_width;
  s.angular_nodes = 2 * angular_nodes;
  s.core_order = core_order + 2;
  s.corner_panels = 2 * corner_panels;
  return s;
}

void QuadratureSpec::validate() const {
  auto bad = [](const std::string& m) { throw ConfigError("quadrature: " + m); };
  if (!(inner_cutoff > 0.0 && inner_cutoff < kPi)) bad("inner_cutoff must lie in (0, pi)");
  if (!(ring_ratio > 1.0)) bad("ring_ratio must exceed 1");
  if (!(max_ring_width > 0.0)) bad("max_ring_width must be positive");
  if (radial_order < 1 || core_order < 1) bad("radial orders must be >= 1");
  if (angular_nodes < 2 || angular_nodes % 2 != 0) bad("angular_nodes must be even and >= 2");
  if (corner_theta_order < 1 || corner_radial_order < 1 || corner_panels < 1) {
    bad("corner orders must be >= 1");
  }
}

std::uint64_t QuadratureSpec::hash() const {
  std::uint64_t h = fnv1a("PvQuadrature/1");
  auto mix = [&h](const auto& v) { h = fnv1a(&v, sizeof(v), h); };
  mix(inner_cutoff);
  mix(ring_ratio);
  mix(max_ring_width);
  mix(radial_order);
  mix(core_order);
  mix(angular_nodes);
  mix(corner_theta_order);
  mix(corner_radial_order);
  mix(corner_panels);
  return h;
}

// ---------------------------------------------------------------- PvQuadrature

namespace {

// Adds the nodes of one annulus with the given radial rule (weights already
// include the polar Jacobian). Second half of the angles is the exact negation
// of the first.
void add_annulus(const Rule1D& radial, int angular, std::vector<QuadNode>& out) {
  const double dtheta = kTwoPi / angular;
  for (std::size_t i = 0; i < radial.x.size(); ++i) {
    const double r = radial.x[i];
    const double w = radial.w[i] * r * dtheta;
    for (int m = 0; m < angular / 2; ++m) {
      const double th = dtheta * (m + 0.5);
      const Vec2 y{r * std::cos(th), r * std::sin(th)};
      out.push_back({y, w});
      out.push_back({-y, w});
    }
  }
}

}  // namespace

PvQuadrature::PvQuadrature(const QuadratureSpec& spec) : spec_(spec), id_(spec.hash()) {
  spec_.validate();

  edges_.push_back(spec_.inner_cutoff);
  while (edges_.back() < kPi) {
    const double r = edges_.back();
    double next = std::min(r * spec_.ring_ratio, r + spec_.max_ring_width);
    if (next >= kPi * (1.0 - 1e-9)) next = kPi;
    edges_.push_back(next);
  }

  // The subtracted integrand times r is smooth down to r = 0, so the core
  // disk is integrated with its own Gauss ring instead of being dropped.
  add_annulus(gauss_legendre(spec_.core_order, 0.0, spec_.inner_cutoff),
              spec_.angular_nodes, disk_);
  for (std::size_t i = 0; i + 1 < edges_.size(); ++i) {
    add_annulus(gauss_legendre(spec_.radial_order, edges_[i], edges_[i + 1]),
                spec_.angular_nodes, disk_);
  }

  // Corner wedge 0 <= theta <= pi/4, pi <= r <= pi / cos(theta), then its
  // seven images under the symmetries of the square, in +- pairs.
  const Rule1D th = composite_gauss(spec_.corner_panels, spec_.corner_theta_order, 0.0,
                                    0.25 * kPi);
  for (std::size_t i = 0; i < th.x.size(); ++i) {
    const double c = std::cos(th.x[i]), s = std::sin(th.x[i]);
    const Rule1D rr = composite_gauss(spec_.corner_panels, spec_.corner_radial_order, kPi,
                                      kPi / c);
    for (std::size_t k = 0; k < rr.x.size(); ++k) {
      const double r = rr.x[k];
      const double w = th.w[i] * rr.w[k] * r;
      const double a = r * c, b = r * s;
      for (Vec2 y : {Vec2{a, b}, Vec2{b, a}, Vec2{-a, b}, Vec2{-b, a}}) {
        corner_.push_back({y, w});
        corner_.push_back({-y, w});
      }
    }
  }
}

std::vector<QuadNode> PvQuadrature::pair_representatives() const {
  std::vector<QuadNode> reps;
  reps.reserve(size() / 2);
  for (std::size_t i = 0; i < disk_.size(); i += 2) reps.push_back(disk_[i]);
  for (std::size_t i = 0; i < corner_.size(); i += 2) reps.push_back(corner_[i]);
  return reps;
}

double PvQuadrature::pv_moment() const {
  // pair contributions are added before accumulating, so they cancel exactly
  Vec2 m{};
  for (std::size_t i = 0; i < disk_.size(); i += 2) {
    const QuadNode& a = disk_[i];
    const QuadNode& b = disk_[i + 1];
    const double ra = a.y.norm(), rb = b.y.norm();
    m = m + (a.y * (a.w / (ra * ra * ra)) + b.y * (b.w / (rb * rb * rb)));
  }
  return m.norm();
}

std::vector<QuadNode> square_grid(double half_width, int panels, int order) {
  const Rule1D r = composite_gauss(panels, order, -half_width, half_width);
  std::vector<QuadNode> out;
  out.reserve(r.x.size() * r.x.size());
  for (std::size_t i = 0; i < r.x.size(); ++i)
    for (std::size_t j = 0; j < r.x.size(); ++j) out.push_back({{r.x[i], r.x[j]}, r.w[i] * r.w[j]});
  return out;
}

}  // namespace sqg::quad
