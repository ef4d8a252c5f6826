#include "sqg/box_function.hpp"

#include <memory>
#include <string>
#include <vector>

namespace sqg {

namespace {
constexpr double kBoxSlack = 1e-12;
}

BoxFunction::BoxFunction(int extent, int max_derivative_order, PointEval eval,
                         BatchEval batch_values)
    : extent_(extent),
      max_order_(max_derivative_order),
      eval_(std::move(eval)),
      batch_(std::move(batch_values)) {
  if (extent_ < 1) throw DomainError("box extent must be >= 1");
  if (max_order_ < 0) throw CapabilityError("negative derivative order");
  if (!eval_) throw Error("box function without evaluator");
}

bool BoxFunction::contains(Vec2 x) const {
  return std::isfinite(x.x1) && std::isfinite(x.x2) &&
         x.norm_inf() <= extent_ * kPi * (1.0 + kBoxSlack);
}

void BoxFunction::check(Vec2 x) const {
  if (!contains(x)) {
    throw DomainError("point (" + std::to_string(x.x1) + ", " + std::to_string(x.x2) +
                      ") outside " + std::to_string(extent_) + "T^2");
  }
}

double BoxFunction::operator()(Vec2 x, MultiIndex alpha) const {
  if (alpha.d1 < 0 || alpha.d2 < 0) throw CapabilityError("negative multi-index");
  if (alpha.order() > max_order_) {
    throw CapabilityError("derivative order " + std::to_string(alpha.order()) +
                          " exceeds declared maximum " + std::to_string(max_order_));
  }
  check(x);
  return eval_(x, alpha);
}

Vec2 BoxFunction::gradient(Vec2 x) const {
  return {(*this)(x, {1, 0}), (*this)(x, {0, 1})};
}

void BoxFunction::values(std::span<const Vec2> xs, std::span<double> out) const {
  if (xs.size() != out.size()) throw Error("values: size mismatch");
  for (const Vec2& x : xs) check(x);
  if (batch_) {
    batch_(xs, out);
    return;
  }
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = eval_(xs[i], {});
}

BoxFunction BoxFunction::with_extent(int extent) const {
  return BoxFunction(extent, max_order_, eval_, batch_);
}

BoxFunction difference(const BoxFunction& a, const BoxFunction& b) {
  const int extent = std::min(a.extent(), b.extent());
  const int order = std::min(a.max_derivative_order(), b.max_derivative_order());
  auto pa = std::make_shared<BoxFunction>(a);
  auto pb = std::make_shared<BoxFunction>(b);
  return BoxFunction(
      extent, order,
      [pa, pb](Vec2 x, MultiIndex al) { return (*pa)(x, al) - (*pb)(x, al); },
      [pa, pb](std::span<const Vec2> xs, std::span<double> out) {
        std::vector<double> tmp(xs.size());
        pa->values(xs, out);
        pb->values(xs, tmp);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] -= tmp[i];
      });
}

BoxFunction derivative_of(const BoxFunction& f, MultiIndex alpha) {
  if (alpha.d1 < 0 || alpha.d2 < 0) throw CapabilityError("negative multi-index");
  if (alpha.order() > f.max_derivative_order()) {
    throw CapabilityError("derivative order exceeds declared maximum");
  }
  if (alpha.order() == 0) return f;
  auto pf = std::make_shared<BoxFunction>(f);
  return BoxFunction(f.extent(), f.max_derivative_order() - alpha.order(),
                     [pf, alpha](Vec2 x, MultiIndex b) {
                       return (*pf)(x, {alpha.d1 + b.d1, alpha.d2 + b.d2});
                     });
}

BoxFunction shifted(const BoxFunction& f, Vec2 shift, int extent) {
  auto pf = std::make_shared<BoxFunction>(f);
  return BoxFunction(
      extent, f.max_derivative_order(),
      [pf, shift](Vec2 x, MultiIndex a) { return (*pf)(x + shift, a); },
      [pf, shift](std::span<const Vec2> xs, std::span<double> out) {
        std::vector<Vec2> moved(xs.begin(), xs.end());
        for (Vec2& x : moved) x = x + shift;
        pf->values(moved, out);
      });
}

}  // namespace sqg
