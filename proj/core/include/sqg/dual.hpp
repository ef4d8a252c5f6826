#ifndef SQG_DUAL_HPP
#define SQG_DUAL_HPP

#include <cmath>
#include <type_traits>

namespace sqg::ad {

// Forward-mode dual number; nest Dual<Dual<...>> for mixed higher derivatives.
// The innermost scalar can be double or a tape variable.
template <class T>
struct Dual;

template <class S>
struct BaseOf {
  using type = S;
};
template <class T>
struct BaseOf<Dual<T>> {
  using type = typename BaseOf<T>::type;
};
template <class S>
using base_t = typename BaseOf<S>::type;

template <class T>
struct Dual {
  T v{};
  T d{};

  Dual() : v(base_t<T>(0.0)), d(base_t<T>(0.0)) {}
  Dual(T value, T deriv) : v(std::move(value)), d(std::move(deriv)) {}
  // constant with vanishing derivative parts
  Dual(const base_t<T>& c) : v(c), d(base_t<T>(0.0)) {}
  template <class U = base_t<T>>
    requires(!std::is_same_v<U, double>)
  Dual(double c) : v(base_t<T>(c)), d(base_t<T>(0.0)) {}
};

template <class T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) { return {a.v + b.v, a.d + b.d}; }
template <class T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) { return {a.v - b.v, a.d - b.d}; }
template <class T>
Dual<T> operator-(const Dual<T>& a) { return {-a.v, -a.d}; }
template <class T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) { return {a.v * b.v, a.v * b.d + a.d * b.v}; }

// scaling by the innermost scalar (network weights) skips the dual product
template <class T>
Dual<T> operator*(const Dual<T>& a, const base_t<T>& c) { return {a.v * c, a.d * c}; }
template <class T>
Dual<T> operator*(const base_t<T>& c, const Dual<T>& a) { return {a.v * c, a.d * c}; }
template <class T>
Dual<T> operator+(const Dual<T>& a, const base_t<T>& c) { return {a.v + c, a.d}; }
template <class T>
Dual<T> operator-(double c, const Dual<T>& a) { return {c - a.v, -a.d}; }

template <class T>
Dual<T> tanh(const Dual<T>& a) {
  using std::tanh;
  const T th = tanh(a.v);
  return {th, (1.0 - th * th) * a.d};
}

template <class T>
Dual<T>& operator+=(Dual<T>& a, const Dual<T>& b) {
  a = a + b;
  return a;
}

}  // namespace sqg::ad

#endif  // SQG_DUAL_HPP
