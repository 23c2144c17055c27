#pragma once

#include <cmath>
#include <numbers>

namespace layermp {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

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
  friend Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
  friend Vec3 operator*(double s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double transverse_norm(const Vec3& a) { return std::hypot(a.x, a.y); }

//! Mirror image through the xy-plane.
inline Vec3 reflect_z(const Vec3& a) { return {a.x, a.y, -a.z}; }

//! Azimuth in [0, 2pi); zero for points on the z-axis.
inline double azimuth(double x, double y) {
  if (x == 0.0 && y == 0.0) return 0.0;
  double phi = std::atan2(y, x);
  if (phi < 0.0) phi += 2.0 * std::numbers::pi;
  if (phi >= 2.0 * std::numbers::pi) phi = 0.0;
  return phi;
}

struct SphericalCoord {
  double r = 0.0;
  double theta = 0.0;
  double phi = 0.0;
};

inline SphericalCoord to_spherical(const Vec3& v) {
  const double rho = transverse_norm(v);
  const double r = std::hypot(rho, v.z);
  if (r == 0.0) return {};
  return {r, std::atan2(rho, v.z), azimuth(v.x, v.y)};
}

inline Vec3 to_cartesian(const SphericalCoord& s) {
  const double st = std::sin(s.theta);
  return {s.r * st * std::cos(s.phi), s.r * st * std::sin(s.phi), s.r * std::cos(s.theta)};
}

}  // namespace layermp
