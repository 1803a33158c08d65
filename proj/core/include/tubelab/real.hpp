#pragma once

#include <cmath>
#include <limits>

namespace tubelab {

// Extended precision is load-bearing: deep tube nests shrink feature sizes by
// roughly a factor of 10 per stage, so double runs out of mantissa near stage
// 15 while x86 long double keeps ~18 significant digits.
using real = long double;

inline constexpr real kPi = 3.14159265358979323846264338327950288L;

inline real sqr(real x) { return x * x; }

inline constexpr real kEps = std::numeric_limits<real>::epsilon();

}  // namespace tubelab
