#pragma once

#include <algorithm>

#include "codel/rng.hpp"

namespace codel {

/// Opposite point a + b - x. Inputs outside [a, b] are clamped first.
inline double opposite(double x, double a, double b) {
  return a + b - std::clamp(x, a, b);
}

/// Quasi-opposite point: uniform between the interval centre and the opposite
/// point, whichever order those two fall in.
inline double quasi_opposite(double x, double a, double b, Rng& rng) {
  const double mid = 0.5 * (a + b);
  const double opp = opposite(x, a, b);
  return rng.uniform(std::min(mid, opp), std::max(mid, opp));
}

}  // namespace codel
