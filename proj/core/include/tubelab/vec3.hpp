#pragma once

#include <cmath>

#include "tubelab/real.hpp"

namespace tubelab {

struct Vec3 {
  real x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(real s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(real s) const { return {x / s, y / s, z / s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  Vec3& operator*=(real s) {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }
  bool operator==(const Vec3& o) const = default;
};

inline Vec3 operator*(real s, const Vec3& v) { return v * s; }

inline real dot(const Vec3& a, const Vec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline real norm2(const Vec3& v) { return dot(v, v); }

inline real norm(const Vec3& v) { return std::sqrt(norm2(v)); }

inline Vec3 normalized(const Vec3& v) { return v / norm(v); }

inline real dist(const Vec3& a, const Vec3& b) { return norm(a - b); }

// Oriented triangle; the normal follows the right hand around a, b, c.
struct Triangle {
  Vec3 a, b, c;
};

// Any unit vector orthogonal to v; stable for all directions.
inline Vec3 any_orthogonal(const Vec3& v) {
  const Vec3 u = normalized(v);
  if (std::fabs(u.x) <= std::fabs(u.y) && std::fabs(u.x) <= std::fabs(u.z))
    return normalized(cross(u, Vec3{1, 0, 0}));
  if (std::fabs(u.y) <= std::fabs(u.z))
    return normalized(cross(u, Vec3{0, 1, 0}));
  return normalized(cross(u, Vec3{0, 0, 1}));
}

}  // namespace tubelab
