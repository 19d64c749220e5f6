#pragma once

#include <functional>
#include <vector>

#include "vmlab/vec3.hpp"

namespace vmlab::quad {

struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss–Legendre rule on [-1, 1] (Newton iteration on P_n).
Rule1D gauss_legendre(int n);

/// Gauss–Legendre rule mapped to [a, b].
Rule1D gauss_legendre(int n, double a, double b);

/// Points and weights on the unit sphere, weights summing to 4π.
struct SphereRule {
  std::vector<Vec3> nodes;
  std::vector<double> weights;
};

/// Product rule: Gauss–Legendre in cos θ (n_theta points) times the
/// trapezoid rule in azimuth (n_phi points). Exact for spherical harmonics
/// of degree < min(2 n_theta, n_phi).
SphereRule product_sphere(int n_theta, int n_phi);

/// ∮_{|x| = r} g(x) dμ.
double sphere_integral(const std::function<double(const Vec3&)>& g, double r, const SphereRule& rule);

/// ∫_{|x| < r} g(x) dx using radial Gauss–Legendre times the sphere rule.
double ball_integral(const std::function<double(const Vec3&)>& g, double r, const Rule1D& radial_unit,
                     const SphereRule& rule);

}  // namespace vmlab::quad
