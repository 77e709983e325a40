#pragma once

#include <concepts>

#include "geometry.hpp"

namespace pathdens {

struct FieldSample {
  double value{0.0};
  Vec2 gradient{};
};

/// A C^2 scalar field with evaluable value, gradient and Hessian. Implemented
/// by the kernel density estimate and by the generative filament model.
/// Implementations must be safe to evaluate concurrently (const, no caches).
template <class F>
concept ScalarFieldSource = requires(const F& f, const Vec2& x) {
  { f.value(x) } -> std::convertible_to<double>;
  { f.gradient(x) } -> std::convertible_to<Vec2>;
  { f.hessian(x) } -> std::convertible_to<SymMat2>;
};

/// Value and gradient in one pass when the field offers it.
template <ScalarFieldSource F>
FieldSample evaluate(const F& field, const Vec2& x) {
  if constexpr (requires { { field.value_and_gradient(x) } -> std::convertible_to<FieldSample>; }) {
    return field.value_and_gradient(x);
  } else {
    return {field.value(x), field.gradient(x)};
  }
}

/// g(x) = c - a/2 |x - m|^2; closed-form flow x(t) = m + (x0 - m) e^{-a t}.
struct QuadraticBowl {
  Vec2 center{};
  double curvature{1.0};
  double peak{0.0};

  double value(const Vec2& x) const { return peak - 0.5 * curvature * norm2(x - center); }
  Vec2 gradient(const Vec2& x) const { return (center - x) * curvature; }
  SymMat2 hessian(const Vec2&) const { return SymMat2::diagonal(-curvature, -curvature); }
};

}  // namespace pathdens
