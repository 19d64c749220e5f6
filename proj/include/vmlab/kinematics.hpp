#pragma once

#include <string>

#include "vmlab/vec3.hpp"

namespace vmlab {

/// A particle species. Invariants: mass > 0, charge != 0.
struct Species {
  double mass = 1.0;
  double charge = 1.0;
  std::string label;

  /// Validating constructor; throws ValidationError naming the bad field.
  static Species make(double mass, double charge, std::string label);
};

namespace kin {

/// Speeds at or beyond this are rejected by check().
inline constexpr double kLightConeGuard = 1e-12;

/// sqrt(m^2 + |v|^2).
double energy(const Vec3& v, double mass);
inline double energy(const Vec3& v, const Species& s) { return energy(v, s.mass); }

/// Unit-mass energy <v> = sqrt(1 + |v|^2).
inline double bracket(const Vec3& v) { return energy(v, 1.0); }

/// Relativistic velocity v / sqrt(m^2 + |v|^2); always subluminal.
Vec3 hat(const Vec3& v, double mass);
inline Vec3 hat(const Vec3& v, const Species& s) { return hat(v, s.mass); }

/// Inverse of hat at unit mass: u / sqrt(1 - |u|^2). Throws DomainError for
/// |u| >= 1 - kLightConeGuard.
Vec3 check(const Vec3& u);

/// Jacobian of hat at momentum v: (I - v̂ v̂ᵀ) / v⁰.
Mat3 hat_jacobian(const Vec3& v, double mass);

}  // namespace kin
}  // namespace vmlab
