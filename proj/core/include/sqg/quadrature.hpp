#ifndef SQG_QUADRATURE_HPP
#define SQG_QUADRATURE_HPP

#include <cstdint>
#include <vector>

#include "sqg/common.hpp"

namespace sqg::quad {

struct Rule1D {
  std::vector<double> x;
  std::vector<double> w;
};

/// n-point Gauss-Legendre rule on [-1, 1] (Newton on the three-term
/// recurrence). Nodes ascending, symmetric to the last bit.
Rule1D gauss_legendre(int n);

/// Gauss-Legendre rule mapped to [a, b].
Rule1D gauss_legendre(int n, double a, double b);

/// Composite rule: `panels` equal panels of an `order`-point Gauss rule.
Rule1D composite_gauss(int panels, int order, double a, double b);

/// Parameters of the principal-value quadrature on T^2.
struct QuadratureSpec {
  double inner_cutoff = 1e-4;  // radius of the core disk
  double ring_ratio = 1.5;     // geometric grading of ring radii
  double max_ring_width = 0.35;
  int radial_order = 10;   // Gauss nodes per ring
  int core_order = 4;      // Gauss nodes on [0, inner_cutoff]
  int angular_nodes = 72;  // per ring, even
  int corner_theta_order = 12;
  int corner_radial_order = 12;
  int corner_panels = 2;  // panels per direction in each corner wedge

  /// Preset used as the oracle-grade default.
  static QuadratureSpec oracle();
  /// Cheaper preset for reporting and property sweeps.
  static QuadratureSpec reporting();
  /// 8 rings x 16 angles, used inside training loops.
  static QuadratureSpec training();

  /// Doubles ring count (ratio -> sqrt(ratio), width halved) and angular nodes.
  QuadratureSpec refined() const;

  void validate() const;
  std::uint64_t hash() const;
};

struct QuadNode {
  Vec2 y;
  double w;
};

/// Product quadrature on T^2 = disk |y| <= pi (polar, graded rings plus a
/// core ring) and the four corners (8 wedges, tensor Gauss in (theta, r)).
/// Nodes come in reflection pairs (y, -y) with identical weights, stored
/// adjacently; pair_representatives() returns the first of each pair.
class PvQuadrature {
 public:
  explicit PvQuadrature(const QuadratureSpec& spec = QuadratureSpec::oracle());

  const QuadratureSpec& spec() const { return spec_; }
  std::uint64_t id() const { return id_; }

  /// Ring edges: first is inner_cutoff, last is pi.
  const std::vector<double>& ring_edges() const { return edges_; }
  const std::vector<QuadNode>& disk_nodes() const { return disk_; }
  const std::vector<QuadNode>& corner_nodes() const { return corner_; }
  std::size_t size() const { return disk_.size() + corner_.size(); }

  /// One node of each (y, -y) pair over disk and corners.
  std::vector<QuadNode> pair_representatives() const;

  /// |sum_disk w y / |y|^3|, the discrete principal-value moment (zero by
  /// pairing).
  double pv_moment() const;

 private:
  QuadratureSpec spec_;
  std::uint64_t id_;
  std::vector<double> edges_;
  std::vector<QuadNode> disk_;
  std::vector<QuadNode> corner_;
};

/// Tensor composite Gauss grid on the square [-a, a]^2.
std::vector<QuadNode> square_grid(double half_width, int panels, int order);

}  // namespace sqg::quad

#endif  // SQG_QUADRATURE_HPP
