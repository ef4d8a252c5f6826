#ifndef SQG_SPECTRAL_HPP
#define SQG_SPECTRAL_HPP

#include <complex>
#include <functional>
#include <vector>

#include "sqg/box_function.hpp"
#include "sqg/common.hpp"

namespace sqg::spectral {

/// Real scalar field on the uniform N x N grid x_{jk} = (-pi + 2 pi j/N,
/// -pi + 2 pi k/N) of T^2. Storage is row-major with x2 fastest:
/// values[j * N + k].
class GridField {
 public:
  GridField() = default;
  GridField(int n, std::vector<double> values, bool mean_zero = false);

  static GridField zeros(int n);
  static GridField sample(int n, const std::function<double(Vec2)>& f);
  static Vec2 node(int n, int j, int k);

  int n() const { return n_; }
  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  double operator()(int j, int k) const { return values_[std::size_t(j) * n_ + k]; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool mean_zero() const { return mean_zero_; }
  double mean() const;
  double max_abs() const;

  /// Grid quadrature of f over T^2 (periodic trapezoid rule).
  double integral() const;

  /// Flags the field mean-zero after checking |mean| <= 1e-12 max|f|.
  GridField as_mean_zero() const;
  /// Subtracts the mean and sets the flag.
  GridField remove_mean() const;

  GridField operator+(const GridField& o) const;
  GridField operator-(const GridField& o) const;
  GridField operator*(double s) const;
  /// Pointwise product (no dealiasing).
  GridField pointwise(const GridField& o) const;

 private:
  int n_ = 0;
  std::vector<double> values_;
  bool mean_zero_ = false;
};

struct VectorField {
  GridField c1;
  GridField c2;
};

/// Fourier companion of a GridField: r2c half spectrum, N x (N/2+1),
/// normalized so that f(x_{jk}) = sum_n coeff_n exp(i 2 pi (n1 j + n2 k)/N).
struct Spectrum {
  int n = 0;
  std::vector<std::complex<double>> coeff;

  int half() const { return n / 2 + 1; }
  std::complex<double>& at(int j, int k) { return coeff[std::size_t(j) * half() + k]; }
  const std::complex<double>& at(int j, int k) const {
    return coeff[std::size_t(j) * half() + k];
  }
  /// Signed wavenumber of row j in {-N/2, ..., N/2-1}.
  int wavenumber(int j) const { return j < n / 2 ? j : j - n; }
};

Spectrum forward(const GridField& f);
GridField inverse(const Spectrum& s, bool mean_zero = false);

/// Multiplies the spectrum by m(n1, n2). At Nyquist indices the multiplier is
/// averaged over the aliased pair +-N/2, which zeroes odd symbols there and
/// keeps the result real.
void apply_multiplier(Spectrum& s,
                      const std::function<std::complex<double>(double, double)>& m);

/// Zeroes every mode with |n1| > N/3 or |n2| > N/3.
void dealias(Spectrum& s);

/// Lambda^s: multiplier |n|^s, zero mode mapped to zero.
GridField lambda_pow(const GridField& f, double s);

/// R = grad Lambda^{-1}; multiplier i n/|n|.
VectorField riesz(const GridField& f);
/// R^perp f = (-R_2 f, R_1 f).
VectorField riesz_perp(const GridField& f);

VectorField gradient(const GridField& f);
GridField derivative(const GridField& f, MultiIndex alpha);
GridField divergence(const VectorField& v);

/// H^s(T^2) norm. Integer s >= 0 uses the derivative sum
/// sum_{|alpha|<=s} ||D^alpha f||^2; other s use the Bessel multiplier
/// (1+|n|^2)^s.
double sobolev_norm(const GridField& f, double s);
/// ||Lambda^s f||_{L^2(T^2)}.
double homogeneous_norm(const GridField& f, double s);
/// L^2(T^2) inner product by grid quadrature.
double inner(const GridField& a, const GridField& b);

/// sum over the full spectrum of w(n) |coeff_n|^2, times |T^2| = 4 pi^2.
double weighted_energy(const Spectrum& s, const std::function<double(double, double)>& w);

/// Trigonometric interpolant of f on extent*T^2, periodic by construction;
/// derivatives by differentiating the series.
BoxFunction to_box_function(const GridField& f, int extent, int max_derivative_order = 4);

/// Band-limited random mean-zero field with modes 1 <= |n|_inf <= max_mode and
/// amplitudes decaying like |n|^{-decay}, rescaled to the given H^1 norm.
GridField random_field(int n, int max_mode, double decay, double h1_norm, std::uint64_t seed);

}  // namespace sqg::spectral

#endif  // SQG_SPECTRAL_HPP
