#pragma once

#include <cmath>

#include "gvoco/errors.hpp"

namespace gvoco {

// Floor added to every curvature link so values stay strictly positive.
inline constexpr double kLinkEpsilon = 1e-6;

// Nondecreasing map u = ||grad f(x)|| -> bound on ||hess f(x)||. Three
// closed forms cover all shipped loss families:
//   Constant:   c0
//   Affine:     c0 + c1 * u
//   PowerShift: c0 + c1 * (u + c2)^p        (0 < p <= 1 keeps it concave)
struct LinkFunction {
  enum class Form { Constant, Affine, PowerShift };

  Form form = Form::Constant;
  double c0 = kLinkEpsilon;
  double c1 = 0.0;
  double c2 = 0.0;
  double p = 1.0;

  static LinkFunction constant(double value) {
    return {Form::Constant, value, 0.0, 0.0, 1.0};
  }
  static LinkFunction affine(double intercept, double slope) {
    return {Form::Affine, intercept, slope, 0.0, 1.0};
  }
  static LinkFunction power_shift(double intercept, double scale, double shift,
                                  double exponent) {
    return {Form::PowerShift, intercept, scale, shift, exponent};
  }

  double operator()(double u) const {
    if (!(u >= 0.0)) throw ConfigError("link queried at negative gradient norm");
    switch (form) {
      case Form::Constant: return c0;
      case Form::Affine: return c0 + c1 * u;
      case Form::PowerShift: return c0 + c1 * std::pow(u + c2, p);
    }
    throw ConfigError("unknown link form");
  }
};

}  // namespace gvoco
