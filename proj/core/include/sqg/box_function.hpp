#ifndef SQG_BOX_FUNCTION_HPP
#define SQG_BOX_FUNCTION_HPP

#include <functional>
#include <span>

#include "sqg/common.hpp"

namespace sqg {

/// A function on the box nT^2 = [-n pi, n pi]^2 that can be queried for
/// partial derivatives up to a declared order. Evaluation outside the box or
/// beyond the declared order is an error.
class BoxFunction {
 public:
  using PointEval = std::function<double(Vec2, MultiIndex)>;
  using BatchEval = std::function<void(std::span<const Vec2>, std::span<double>)>;

  BoxFunction(int extent, int max_derivative_order, PointEval eval,
              BatchEval batch_values = {});

  int extent() const { return extent_; }
  int max_derivative_order() const { return max_order_; }

  double operator()(Vec2 x, MultiIndex alpha = {}) const;
  Vec2 gradient(Vec2 x) const;

  /// Values at many points; uses the batched evaluator when one was supplied.
  void values(std::span<const Vec2> xs, std::span<double> out) const;

  bool contains(Vec2 x) const;

  /// Same function, re-declared on a different box (the evaluator must be
  /// valid there).
  BoxFunction with_extent(int extent) const;

 private:
  void check(Vec2 x) const;

  int extent_;
  int max_order_;
  PointEval eval_;
  BatchEval batch_;
};

/// Pointwise difference a - b on the smaller of the two boxes.
BoxFunction difference(const BoxFunction& a, const BoxFunction& b);

/// D^alpha f as a BoxFunction of order max_order - |alpha|.
BoxFunction derivative_of(const BoxFunction& f, MultiIndex alpha);

/// Translate f(. + shift); the result lives on the largest box it fits in.
BoxFunction shifted(const BoxFunction& f, Vec2 shift, int extent);

}  // namespace sqg

#endif  // SQG_BOX_FUNCTION_HPP
