#include "vmlab/kinematics.hpp"

#include <cmath>
#include <sstream>

#include "vmlab/error.hpp"

namespace vmlab {

Species Species::make(double mass, double charge, std::string label) {
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    std::ostringstream os;
    os << "species '" << label << "': mass must be positive and finite (got " << mass << ")";
    throw ValidationError("kinematics", "Species", os.str());
  }
  if (charge == 0.0 || !std::isfinite(charge)) {
    std::ostringstream os;
    os << "species '" << label << "': charge must be nonzero and finite (got " << charge << ")";
    throw ValidationError("kinematics", "Species", os.str());
  }
  return Species{mass, charge, std::move(label)};
}

namespace kin {

double energy(const Vec3& v, double mass) {
  return std::sqrt(mass * mass + norm2(v));
}

Vec3 hat(const Vec3& v, double mass) { return v / energy(v, mass); }

Vec3 check(const Vec3& u) {
  const double u2 = norm2(u);
  if (!(std::sqrt(u2) < 1.0 - kLightConeGuard)) {
    std::ostringstream os;
    os << "check: |u| = " << std::sqrt(u2) << " is not subluminal";
    throw DomainError("kinematics", "check", os.str());
  }
  // 1 - |u|^2 computed as (1-|u|)(1+|u|) loses less near the light cone.
  const double r = std::sqrt(u2);
  return u / std::sqrt((1.0 - r) * (1.0 + r));
}

Mat3 hat_jacobian(const Vec3& v, double mass) {
  const double v0 = energy(v, mass);
  const Vec3 vh = v / v0;
  Mat3 j{};
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      j[a][b] = ((a == b ? 1.0 : 0.0) - vh[a] * vh[b]) / v0;
  return j;
}

}  // namespace kin
}  // namespace vmlab
