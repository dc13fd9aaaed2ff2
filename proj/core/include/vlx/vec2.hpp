#pragma once

#include <cmath>
#include <complex>

namespace vlx {

/// Plane vector.  Throughout the library perp() is the +90 degree rotation
/// perp((x, y)) = (-y, x); for a positively oriented (counterclockwise)
/// closed curve, perp of the unit tangent points into the enclosed region.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
constexpr Vec2 operator*(double c, Vec2 v) { return {c * v.x, c * v.y}; }
constexpr Vec2 operator*(Vec2 v, double c) { return c * v; }
constexpr Vec2 operator/(Vec2 v, double c) { return {v.x / c, v.y / c}; }
constexpr Vec2& operator+=(Vec2& a, Vec2 b) { a = a + b; return a; }
constexpr Vec2& operator-=(Vec2& a, Vec2 b) { a = a - b; return a; }

constexpr Vec2 perp(Vec2 v) { return {-v.y, v.x}; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double norm_sq(Vec2 v) { return dot(v, v); }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

/// Componentwise complexification of Vec2, used when curve parameters are
/// continued off the real line (s -> s + i*beta).  The Euclidean bilinear
/// form extends holomorphically; see complexified_modulus / complex_dot.
struct ComplexVec2 {
  std::complex<double> x{0.0, 0.0};
  std::complex<double> y{0.0, 0.0};
};

inline ComplexVec2 operator+(const ComplexVec2& a, const ComplexVec2& b) {
  return {a.x + b.x, a.y + b.y};
}
inline ComplexVec2 operator-(const ComplexVec2& a, const ComplexVec2& b) {
  return {a.x - b.x, a.y - b.y};
}
inline ComplexVec2 operator*(const std::complex<double>& c, const ComplexVec2& v) {
  return {c * v.x, c * v.y};
}
inline ComplexVec2 perp(const ComplexVec2& v) { return {-v.y, v.x}; }

}  // namespace vlx
