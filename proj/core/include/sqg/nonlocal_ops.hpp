#ifndef SQG_NONLOCAL_OPS_HPP
#define SQG_NONLOCAL_OPS_HPP

#include <memory>
#include <span>
#include <vector>

#include "sqg/box_function.hpp"
#include "sqg/lattice_kernels.hpp"
#include "sqg/quadrature.hpp"
#include "sqg/spectral.hpp"

namespace sqg::nonlocal {

using quad::PvQuadrature;
using quad::QuadratureSpec;

/// Kernel values at one node of each (y, -y) pair of a quadrature.
struct KernelTable {
  int truncation_radius = 0;
  bool tampered = false;
  std::vector<Vec2> y;
  std::vector<double> w;
  std::vector<double> K;
  std::vector<Vec2> Rstar;
  // Weight multiplier of the embedded half-angle rule (2 or 0 on the disk,
  // 1 on the corners), used for the error estimate.
  std::vector<double> coarse;

  std::size_t size() const { return y.size(); }
};

/// Cached table for (quadrature, M, tamper). Built once, then shared
/// read-only.
std::shared_ptr<const KernelTable> kernel_table(const PvQuadrature& quad, int truncation_radius,
                                                bool tamper = false);

/// Quadrature, truncation radius and kernel table bundled for repeated use.
/// `tamper` flips the sign of both kernels (negative control only).
class OperatorContext {
 public:
  explicit OperatorContext(const QuadratureSpec& spec = QuadratureSpec::oracle(),
                           int truncation_radius = lattice::kDefaultTruncation,
                           bool tamper = false);

  const PvQuadrature& quadrature() const { return *quad_; }
  int truncation_radius() const { return table_->truncation_radius; }
  bool tampered() const { return table_->tampered; }
  const KernelTable& table() const { return *table_; }

 private:
  std::shared_ptr<const PvQuadrature> quad_;
  std::shared_ptr<const KernelTable> table_;
};

/// Box extent needed to apply the operators at x: ceil(|x|_inf / pi) + 1.
int required_extent(Vec2 x);

struct Estimate {
  double value = 0.0;
  double error = 0.0;  // |full - embedded half-angle rule|
};

/// Lambda-tilde phi(x) = int_{T^2} (phi(x) - phi(x+y)) K(y) dy. Reflection
/// pairs turn the free-space part into the second difference
/// 2 phi(x) - phi(x+y) - phi(x-y), which is what the gradient subtraction
/// reduces to once sum w y/|y|^3 = 0 holds exactly.
double apply_lambda_tilde(const BoxFunction& phi, Vec2 x, const OperatorContext& ctx);
double apply_lambda_tilde(const BoxFunction& phi, Vec2 x, const PvQuadrature& quad, int M);
Estimate apply_lambda_tilde_estimate(const BoxFunction& phi, Vec2 x,
                                     const OperatorContext& ctx);

/// R-tilde phi(x) = int_{T^2} phi(x+y) R*(y) dy, evaluated pairwise as
/// (phi(x+y) - phi(x-y)) R*(y).
Vec2 apply_riesz_tilde(const BoxFunction& phi, Vec2 x, const OperatorContext& ctx);
Vec2 apply_riesz_tilde(const BoxFunction& phi, Vec2 x, const PvQuadrature& quad, int M);

std::vector<double> apply_lambda_tilde_field(const BoxFunction& phi,
                                             std::span<const Vec2> targets,
                                             const OperatorContext& ctx);
std::vector<Vec2> apply_riesz_tilde_field(const BoxFunction& phi,
                                          std::span<const Vec2> targets,
                                          const OperatorContext& ctx);

/// Both operators at once (they share every phi evaluation).
struct LambdaRiesz {
  double lambda = 0.0;
  Vec2 riesz{};
};
std::vector<LambdaRiesz> apply_both_field(const BoxFunction& phi,
                                          std::span<const Vec2> targets,
                                          const OperatorContext& ctx);

/// Tensor composite Gauss grid on T^2 used for inner products.
struct GridRule {
  int panels = 4;
  int order = 6;
};

/// int_{T^2} phi Lambda-tilde phi dx by the Gauss grid.
double coercivity_inner_product(const BoxFunction& phi, const OperatorContext& ctx,
                                GridRule grid = {});

/// ||R-tilde phi||_{L^2(T^2)} by the Gauss grid.
double riesz_tilde_l2(const BoxFunction& phi, const OperatorContext& ctx, GridRule grid = {});

/// The individual norms of the second coercivity bound. Sampling grid has
/// `per_period` nodes per 2 pi, aligned with the grid of psi; H^1 norms use
/// second-order differences and trapezoid weights.
struct SecondBoundTerms {
  double l2_sq_5T = 0.0;      // ||psi - psi_hat||^2_{L^2(5T^2)}
  double sq_shift_1 = 0.0;    // ||psi_hat^2(. + 2 pi e1) - psi_hat^2||_{H^1(2T^2)}
  double sq_shift_2 = 0.0;
  double shift_1 = 0.0;       // ||psi_hat(. + 2 pi e1) - psi_hat||_{H^1(2T^2)}
  double shift_2 = 0.0;
  double sup_psi = 0.0;
  double sup_grad_psi = 0.0;

  double bracket() const {
    return l2_sq_5T + sq_shift_1 + sq_shift_2 + (sup_psi + sup_grad_psi) * (shift_1 + shift_2);
  }
  double rhs(double c_probe) const { return c_probe * bracket(); }
};

SecondBoundTerms secondbound_terms(const spectral::GridField& psi, const BoxFunction& psi_hat,
                                   int per_period = 0);

double secondbound_rhs(const spectral::GridField& psi, const BoxFunction& psi_hat,
                       double c_probe, int per_period = 0);

}  // namespace sqg::nonlocal

#endif  // SQG_NONLOCAL_OPS_HPP
