#ifndef SQG_LATTICE_KERNELS_HPP
#define SQG_LATTICE_KERNELS_HPP

#include "sqg/common.hpp"

namespace sqg::lattice {

/// Normalization constant of the first-order fractional Laplacian kernel on
/// the plane, c = 2 Gamma(3/2) / (|Gamma(-1/2)| pi) = 1/(2 pi).
double normalization_constant();

/// Sum over k in Z^2 \ {0} of |k|^{-3}, and of |k|^{-5}.
inline constexpr double kLatticeZeta3 = 9.03362168310095030573051527932;
inline constexpr double kLatticeZeta5 = 5.09025823366548294565740153194;

inline constexpr int kDefaultTruncation = 64;

enum class KernelKind { ScalarK, VectorRStar };

/// Descriptor of a truncated lattice sum: shells |k|_inf <= M, k != 0, with
/// k and -k summed together.
struct TruncatedKernel {
  KernelKind kind = KernelKind::ScalarK;
  int truncation_radius = kDefaultTruncation;
  /// Certified bound on the omitted part of the sum, uniform over y in T^2.
  double tail_bound = 0.0;

  static TruncatedKernel make(KernelKind kind, int truncation_radius);
};

/// Bound on c * sum_{|k|_inf > M} |y - 2 pi k|^{-3} for y in T^2, from
/// |y - 2 pi k| >= (2 - sqrt 2) pi |k| and sum_{m > M} m^{-2} < 1/M.
double tail_bound_K(int truncation_radius);

/// Bound on |sum_{|k|_inf > M} (f_k(y) - f_k(0))| for y in T^2 where
/// f_k(y) = (y + 2 pi k) / (2 pi |y + 2 pi k|^3); mean-value bound with
/// |grad f_k| <= 1 / (pi |y + 2 pi k|^3) and |y| <= sqrt(2) pi.
double tail_bound_Rstar(int truncation_radius);

/// Raw truncated kernel K(y) = c (|y|^{-3} + sum_{0<|k|_inf<=M} |y-2 pi k|^{-3}).
/// Throws SingularityError for y = 0 and DomainError outside T^2.
double eval_K(Vec2 y, int truncation_radius);

/// Raw truncated kernel
/// R*(y) = y/(2 pi |y|^3) + sum_{0<|k|_inf<=M} [(y+2 pi k)/(2 pi |y+2 pi k|^3) - k/|2 pi k|^3].
Vec2 eval_Rstar(Vec2 y, int truncation_radius);

/// Lattice parts of K and R* (everything except the free-space term) with the
/// asymptotic tail of the omitted shells added back. The omitted shells are a
/// smooth function of y; their Taylor expansion, summed over full
/// square-symmetric shells, is
///   K:  c [S3 + (9/4) |y|^2 S5] + O(|y|^4 / M^5)
///   R*: -y S3 / (4 pi)          + O(|y|^3 / M^3)
/// with S_p = sum_{|k|_inf > M} |2 pi k|^{-p}. Used by the operator quadrature,
/// where the raw 1/M tail would dominate every other error.
class PeriodizedKernel {
 public:
  explicit PeriodizedKernel(int truncation_radius = kDefaultTruncation);

  int truncation_radius() const { return truncation_radius_; }

  double lattice_K(Vec2 y) const;
  Vec2 lattice_Rstar(Vec2 y) const;

  /// Both lattice parts in one pass over the lattice.
  void lattice_both(Vec2 y, double& k, Vec2& rstar) const;

  double free_K(Vec2 y) const;
  Vec2 free_Rstar(Vec2 y) const;

  double K(Vec2 y) const { return free_K(y) + lattice_K(y); }
  Vec2 Rstar(Vec2 y) const { return free_Rstar(y) + lattice_Rstar(y); }

 private:
  int truncation_radius_;
  double c_;
  double tail_s3_;  // sum_{|k|_inf > M} |2 pi k|^{-3}
  double tail_s5_;  // sum_{|k|_inf > M} |2 pi k|^{-5}
};

}  // namespace sqg::lattice

#endif  // SQG_LATTICE_KERNELS_HPP
