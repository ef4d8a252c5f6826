#include "sqg/spectral.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <string>

namespace sqg::spectral {

namespace {

using cplx = std::complex<double>;

// FFTW planning is not thread safe; execution on new arrays is. Plans are
// created once per N with FFTW_ESTIMATE so results do not depend on timing.
struct PlanPair {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

PlanPair plans_for(int n) {
  static std::mutex mu;
  static std::map<int, PlanPair> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> real(std::size_t(n) * n);
  std::vector<cplx> spec(std::size_t(n) * (n / 2 + 1));
  auto* cp = reinterpret_cast<fftw_complex*>(spec.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair p;
  p.r2c = fftw_plan_dft_r2c_2d(n, n, real.data(), cp, flags);
  p.c2r = fftw_plan_dft_c2r_2d(n, n, cp, real.data(), flags | FFTW_DESTROY_INPUT);
  if (!p.r2c || !p.c2r) throw Error("FFTW planning failed for N=" + std::to_string(n));
  cache.emplace(n, p);
  return p;
}

void check_grid(int n) {
  if (n < 2 || n % 2 != 0) throw DomainError("grid size must be even and >= 2");
}

void check_same(const GridField& a, const GridField& b) {
  if (a.n() != b.n()) throw DomainError("grid size mismatch");
}

void require_mean_zero(const GridField& f, const char* what) {
  const double m = f.mean();
  if (std::fabs(m) > 1e-12 * std::max(1.0, f.max_abs())) {
    throw InvertibilityError(std::string(what) + ": input has nonzero mean " +
                             std::to_string(m));
  }
}

// Half-spectrum multiplicity of column k.
double column_weight(int n, int k) { return (k == 0 || k == n / 2) ? 1.0 : 2.0; }

}  // namespace

// ---------------------------------------------------------------- GridField

GridField::GridField(int n, std::vector<double> values, bool mean_zero)
    : n_(n), values_(std::move(values)), mean_zero_(mean_zero) {
  check_grid(n);
  if (values_.size() != std::size_t(n) * n) throw DomainError("grid value count mismatch");
}

GridField GridField::zeros(int n) {
  return GridField(n, std::vector<double>(std::size_t(n) * n, 0.0), true);
}

Vec2 GridField::node(int n, int j, int k) {
  const double h = kTwoPi / n;
  return {-kPi + h * j, -kPi + h * k};
}

GridField GridField::sample(int n, const std::function<double(Vec2)>& f) {
  check_grid(n);
  std::vector<double> v(std::size_t(n) * n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) v[std::size_t(j) * n + k] = f(node(n, j, k));
  return GridField(n, std::move(v));
}

double GridField::mean() const {
  // pairwise-ish: sum rows separately to keep the error small for large N
  double total = 0.0;
  for (int j = 0; j < n_; ++j) {
    double row = 0.0;
    for (int k = 0; k < n_; ++k) row += values_[std::size_t(j) * n_ + k];
    total += row;
  }
  return total / double(values_.size());
}

double GridField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::fabs(v));
  return m;
}

double GridField::integral() const { return mean() * 4.0 * kPi * kPi; }

GridField GridField::as_mean_zero() const {
  require_mean_zero(*this, "as_mean_zero");
  return GridField(n_, values_, true);
}

GridField GridField::remove_mean() const {
  const double m = mean();
  std::vector<double> v(values_);
  for (double& x : v) x -= m;
  return GridField(n_, std::move(v), true);
}

GridField GridField::operator+(const GridField& o) const {
  check_same(*this, o);
  std::vector<double> v(values_);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += o.values_[i];
  return GridField(n_, std::move(v), mean_zero_ && o.mean_zero_);
}

GridField GridField::operator-(const GridField& o) const {
  check_same(*this, o);
  std::vector<double> v(values_);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= o.values_[i];
  return GridField(n_, std::move(v), mean_zero_ && o.mean_zero_);
}

GridField GridField::operator*(double s) const {
  std::vector<double> v(values_);
  for (double& x : v) x *= s;
  return GridField(n_, std::move(v), mean_zero_);
}

GridField GridField::pointwise(const GridField& o) const {
  check_same(*this, o);
  std::vector<double> v(values_);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= o.values_[i];
  return GridField(n_, std::move(v));
}

// ----------------------------------------------------------------- transforms

Spectrum forward(const GridField& f) {
  const int n = f.n();
  PlanPair p = plans_for(n);
  Spectrum s;
  s.n = n;
  s.coeff.assign(std::size_t(n) * (n / 2 + 1), cplx{});
  std::vector<double> in(f.values());
  fftw_execute_dft_r2c(p.r2c, in.data(), reinterpret_cast<fftw_complex*>(s.coeff.data()));
  const double scale = 1.0 / (double(n) * n);
  for (cplx& c : s.coeff) c *= scale;
  return s;
}

GridField inverse(const Spectrum& s, bool mean_zero) {
  const int n = s.n;
  PlanPair p = plans_for(n);
  std::vector<cplx> tmp(s.coeff);
  std::vector<double> out(std::size_t(n) * n);
  fftw_execute_dft_c2r(p.c2r, reinterpret_cast<fftw_complex*>(tmp.data()), out.data());
  return GridField(n, std::move(out), mean_zero);
}

void apply_multiplier(Spectrum& s, const std::function<cplx(double, double)>& m) {
  const int n = s.n;
  const int nyq = n / 2;
  for (int j = 0; j < n; ++j) {
    const double n1 = s.wavenumber(j);
    const bool ny1 = (j == nyq);
    for (int k = 0; k <= nyq; ++k) {
      const double n2 = k;
      const bool ny2 = (k == nyq);
      cplx factor;
      if (!ny1 && !ny2) {
        factor = m(n1, n2);
      } else if (ny1 && !ny2) {
        factor = 0.5 * (m(n1, n2) + m(-n1, n2));
      } else if (!ny1 && ny2) {
        factor = 0.5 * (m(n1, n2) + m(n1, -n2));
      } else {
        factor = 0.25 * (m(n1, n2) + m(-n1, n2) + m(n1, -n2) + m(-n1, -n2));
      }
      s.at(j, k) *= factor;
    }
  }
}

void dealias(Spectrum& s) {
  const int n = s.n;
  const int cut = n / 3;
  for (int j = 0; j < n; ++j) {
    const int n1 = std::abs(s.wavenumber(j));
    for (int k = 0; k <= n / 2; ++k) {
      if (n1 > cut || k > cut) s.at(j, k) = 0.0;
    }
  }
}

// ------------------------------------------------------------------ operators

GridField lambda_pow(const GridField& f, double s) {
  if (s < 0) require_mean_zero(f, "lambda_pow");
  Spectrum sp = forward(f);
  apply_multiplier(sp, [s](double n1, double n2) -> cplx {
    const double r2 = n1 * n1 + n2 * n2;
    if (r2 == 0.0) return 0.0;
    return std::pow(r2, 0.5 * s);
  });
  return inverse(sp, true);
}

VectorField riesz(const GridField& f) {
  require_mean_zero(f, "riesz");
  const Spectrum sp = forward(f);
  Spectrum s1 = sp, s2 = sp;
  apply_multiplier(s1, [](double n1, double n2) -> cplx {
    const double r = std::hypot(n1, n2);
    return r == 0.0 ? cplx{} : cplx(0.0, n1 / r);
  });
  apply_multiplier(s2, [](double n1, double n2) -> cplx {
    const double r = std::hypot(n1, n2);
    return r == 0.0 ? cplx{} : cplx(0.0, n2 / r);
  });
  return {inverse(s1, true), inverse(s2, true)};
}

VectorField riesz_perp(const GridField& f) {
  VectorField r = riesz(f);
  return {r.c2 * -1.0, r.c1};
}

GridField derivative(const GridField& f, MultiIndex alpha) {
  if (alpha.d1 < 0 || alpha.d2 < 0) throw CapabilityError("negative multi-index");
  if (alpha.order() == 0) return f;
  Spectrum sp = forward(f);
  apply_multiplier(sp, [alpha](double n1, double n2) -> cplx {
    return std::pow(cplx(0.0, n1), alpha.d1) * std::pow(cplx(0.0, n2), alpha.d2);
  });
  return inverse(sp, true);
}

VectorField gradient(const GridField& f) {
  return {derivative(f, {1, 0}), derivative(f, {0, 1})};
}

GridField divergence(const VectorField& v) {
  return derivative(v.c1, {1, 0}) + derivative(v.c2, {0, 1});
}

double weighted_energy(const Spectrum& s, const std::function<double(double, double)>& w) {
  const int n = s.n;
  double total = 0.0;
  for (int j = 0; j < n; ++j) {
    const double n1 = s.wavenumber(j);
    for (int k = 0; k <= n / 2; ++k) {
      const double wk = w(n1, double(k));
      if (wk == 0.0) continue;
      total += column_weight(n, k) * wk * std::norm(s.at(j, k));
    }
  }
  return 4.0 * kPi * kPi * total;
}

double sobolev_norm(const GridField& f, double s) {
  const Spectrum sp = forward(f);
  const bool integer = s >= 0 && s == std::floor(s) && s <= 64;
  if (integer) {
    const int order = int(s);
    return std::sqrt(weighted_energy(sp, [order](double n1, double n2) {
      // sum over |alpha| <= order of n1^{2 a1} n2^{2 a2}
      const double a = n1 * n1, b = n2 * n2;
      double total = 0.0, pa = 1.0;
      for (int a1 = 0; a1 <= order; ++a1) {
        double pb = 1.0;
        for (int a2 = 0; a1 + a2 <= order; ++a2) {
          total += pa * pb;
          pb *= b;
        }
        pa *= a;
      }
      return total;
    }));
  }
  return std::sqrt(weighted_energy(
      sp, [s](double n1, double n2) { return std::pow(1.0 + n1 * n1 + n2 * n2, s); }));
}

double homogeneous_norm(const GridField& f, double s) {
  const Spectrum sp = forward(f);
  return std::sqrt(weighted_energy(sp, [s](double n1, double n2) {
    const double r2 = n1 * n1 + n2 * n2;
    return r2 == 0.0 ? 0.0 : std::pow(r2, s);
  }));
}

double inner(const GridField& a, const GridField& b) {
  check_same(a, b);
  const int n = a.n();
  double total = 0.0;
  for (int j = 0; j < n; ++j) {
    double row = 0.0;
    for (int k = 0; k < n; ++k) row += a(j, k) * b(j, k);
    total += row;
  }
  return total * (kTwoPi / n) * (kTwoPi / n);
}

// --------------------------------------------------------------- interpolant

namespace {

struct Term {
  int j;
  int k;
  cplx c;  // coefficient times half-spectrum multiplicity
};

// Trig interpolant in the shifted variable xi = x + pi, so grid nodes sit at
// xi = 2 pi j / N. Nyquist modes use the cosine form cos(N xi / 2).
class TrigInterpolant {
 public:
  explicit TrigInterpolant(const GridField& f) : n_(f.n()) {
    const Spectrum sp = forward(f);
    double cmax = 0.0;
    for (const cplx& c : sp.coeff) cmax = std::max(cmax, std::abs(c));
    const double drop = 1e-15 * cmax;
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k <= n_ / 2; ++k) {
        const cplx c = sp.at(j, k);
        if (std::abs(c) <= drop) continue;
        terms_.push_back({j, k, c * column_weight(n_, k)});
      }
  }

  double eval(Vec2 x, MultiIndex alpha) const {
    std::vector<cplx> e1(n_), e2(n_ / 2 + 1);
    basis(x.x1, alpha.d1, /*full=*/true, e1);
    basis(x.x2, alpha.d2, /*full=*/false, e2);
    double total = 0.0;
    for (const Term& t : terms_) total += (t.c * e1[t.j] * e2[t.k]).real();
    return total;
  }

 private:
  // d^a/dxi^a of the basis function for each index; rows (full) use signed
  // wavenumbers, columns use k = 0..N/2.
  void basis(double x, int a, bool full, std::vector<cplx>& out) const {
    const double xi = std::remainder(x + kPi, kTwoPi);
    const int nyq = n_ / 2;
    const int count = full ? n_ : nyq + 1;
    // e^{i m xi} for m = 0..nyq by recurrence from an exact seed
    std::vector<cplx> pw(nyq + 1);
    pw[0] = 1.0;
    const cplx step = std::polar(1.0, xi);
    for (int m = 1; m <= nyq; ++m) {
      pw[m] = (m % 16 == 0) ? std::polar(1.0, m * xi) : pw[m - 1] * step;
    }
    auto dfac = [a](double m) { return std::pow(cplx(0.0, m), a); };
    for (int idx = 0; idx < count; ++idx) {
      const int m = full ? (idx < nyq ? idx : idx - n_) : idx;
      if (std::abs(m) == nyq) {
        const cplx ep = pw[nyq], em = std::conj(pw[nyq]);
        out[idx] = 0.5 * (dfac(nyq) * ep + dfac(-nyq) * em);
      } else if (m >= 0) {
        out[idx] = dfac(m) * pw[m];
      } else {
        out[idx] = dfac(m) * std::conj(pw[-m]);
      }
    }
  }

  int n_;
  std::vector<Term> terms_;
};

}  // namespace

BoxFunction to_box_function(const GridField& f, int extent, int max_derivative_order) {
  auto interp = std::make_shared<const TrigInterpolant>(f);
  return BoxFunction(extent, max_derivative_order,
                     [interp](Vec2 x, MultiIndex a) { return interp->eval(x, a); });
}

GridField random_field(int n, int max_mode, double decay, double h1_norm,
                       std::uint64_t seed) {
  if (max_mode < 1 || max_mode >= n / 3) {
    throw DomainError("random_field: max_mode must lie in [1, N/3)");
  }
  std::mt19937_64 rng(seed);
  struct Mode {
    int n1, n2;
    double a, b;
  };
  std::vector<Mode> modes;
  // one representative per {n, -n}
  for (int n1 = 0; n1 <= max_mode; ++n1)
    for (int n2 = -max_mode; n2 <= max_mode; ++n2) {
      if (n1 == 0 && n2 <= 0) continue;
      const double amp = std::pow(std::hypot(double(n1), double(n2)), -decay);
      const double a = amp * uniform(rng, -1.0, 1.0);
      const double b = amp * uniform(rng, -1.0, 1.0);
      modes.push_back({n1, n2, a, b});
    }
  GridField g = GridField::sample(n, [&](Vec2 x) {
    double v = 0.0;
    for (const Mode& m : modes) {
      const double ph = m.n1 * x.x1 + m.n2 * x.x2;
      v += m.a * std::cos(ph) + m.b * std::sin(ph);
    }
    return v;
  });
  g = g.remove_mean();
  const double h1 = sobolev_norm(g, 1.0);
  return g * (h1_norm / h1);
}

}  // namespace sqg::spectral
