#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace vmlab {

/// Cartesian 3-vector. Used for positions, momenta, velocities and field values.
struct Vec3 {
  std::array<double, 3> c{0.0, 0.0, 0.0};

  constexpr double& operator[](std::size_t i) { return c[i]; }
  constexpr double operator[](std::size_t i) const { return c[i]; }

  constexpr Vec3& operator+=(const Vec3& o) {
    c[0] += o.c[0];
    c[1] += o.c[1];
    c[2] += o.c[2];
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    c[0] -= o.c[0];
    c[1] -= o.c[1];
    c[2] -= o.c[2];
    return *this;
  }
  constexpr Vec3& operator*=(double s) {
    c[0] *= s;
    c[1] *= s;
    c[2] *= s;
    return *this;
  }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator-(const Vec3& a) { return Vec3{{-a[0], -a[1], -a[2]}}; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
constexpr Vec3 operator/(Vec3 a, double s) { return a *= (1.0 / s); }

constexpr double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return Vec3{{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
               a[0] * b[1] - a[1] * b[0]}};
}
inline double norm2(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double max_abs(const Vec3& a) {
  return std::fmax(std::fabs(a[0]), std::fmax(std::fabs(a[1]), std::fabs(a[2])));
}
inline bool is_finite(const Vec3& a) {
  return std::isfinite(a[0]) && std::isfinite(a[1]) && std::isfinite(a[2]);
}

using Mat3 = std::array<std::array<double, 3>, 3>;
using Mat4 = std::array<std::array<double, 4>, 4>;

constexpr Mat3 identity3() {
  return Mat3{{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};
}
constexpr Mat4 identity4() {
  Mat4 m{};
  for (std::size_t i = 0; i < 4; ++i) m[i][i] = 1.0;
  return m;
}

constexpr Vec3 operator*(const Mat3& m, const Vec3& v) {
  Vec3 r;
  for (std::size_t i = 0; i < 3; ++i)
    r[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
  return r;
}

template <std::size_t N>
constexpr std::array<std::array<double, N>, N> matmul(
    const std::array<std::array<double, N>, N>& a,
    const std::array<std::array<double, N>, N>& b) {
  std::array<std::array<double, N>, N> r{};
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t k = 0; k < N; ++k)
      for (std::size_t j = 0; j < N; ++j) r[i][j] += a[i][k] * b[k][j];
  return r;
}

template <std::size_t N>
constexpr std::array<std::array<double, N>, N> transpose(
    const std::array<std::array<double, N>, N>& a) {
  std::array<std::array<double, N>, N> r{};
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) r[i][j] = a[j][i];
  return r;
}

template <std::size_t N>
double max_abs_diff(const std::array<std::array<double, N>, N>& a,
                    const std::array<std::array<double, N>, N>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) m = std::fmax(m, std::fabs(a[i][j] - b[i][j]));
  return m;
}

template <std::size_t N>
double max_abs(const std::array<std::array<double, N>, N>& a) {
  double m = 0.0;
  for (const auto& row : a)
    for (double x : row) m = std::fmax(m, std::fabs(x));
  return m;
}

inline double det3(const Mat3& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

double det4(const Mat4& m);

}  // namespace vmlab
