#pragma once

#include <cmath>

#include "equipart/errors.hpp"

namespace equipart {

/// Characteristic exponent of a spherical eigenvalue in ambient dimension N:
/// the degree gamma such that |x|^gamma * phi(x/|x|) is harmonic when phi has
/// Laplace-Beltrami eigenvalue t. Strictly increasing and concave on t >= 0,
/// with gamma(0) = 0 and the inverse relation gamma * (gamma + N - 2) = t.
inline double gamma_exponent(int ambient_dim, double t) {
  if (t < 0.0) throw NegativeInput("gamma_exponent: t must be nonnegative");
  const double a = 0.5 * (ambient_dim - 2);
  if (a == 0.0) return std::sqrt(t);
  // sqrt(a^2+t)-a, written to avoid cancellation for t << a^2.
  return t / (std::sqrt(a * a + t) + a);
}

/// d/dt of gamma_exponent at fixed N.
inline double gamma_exponent_derivative(int ambient_dim, double t) {
  if (t < 0.0) throw NegativeInput("gamma_exponent_derivative: t must be nonnegative");
  const double a = 0.5 * (ambient_dim - 2);
  return 0.5 / std::sqrt(a * a + t);
}

/// Inverse map: the eigenvalue whose exponent is d, i.e. d * (d + N - 2).
inline double eigenvalue_of_exponent(int ambient_dim, double d) {
  return d * (d + ambient_dim - 2);
}

}  // namespace equipart
