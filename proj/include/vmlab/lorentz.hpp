#pragma once

#include "vmlab/vec3.hpp"

namespace vmlab {

/// Spacetime point or energy-momentum vector (t, x) with signature (-,+,+,+).
struct FourVector {
  double t = 0.0;
  Vec3 x;

  friend constexpr bool operator==(const FourVector&, const FourVector&) = default;
};

namespace lorentz {

/// Minkowski product eta(a, b) = -a.t b.t + a.x . b.x
inline double eta(const FourVector& a, const FourVector& b) { return -a.t * b.t + dot(a.x, b.x); }

enum class TransformKind { boost_x, rotation, general };

/// Element of the restricted Lorentz group SO0(3,1), stored as a 4x4 matrix
/// acting on column vectors (t, x1, x2, x3).
class LorentzTransform {
 public:
  LorentzTransform() : m_(identity4()), kind_(TransformKind::rotation) {}

  /// Validates mᵀηm = η, m00 >= 1 and det m = 1 (relative tolerance `tol`).
  static LorentzTransform from_matrix(const Mat4& m, double tol = 1e-10);

  const Mat4& matrix() const { return m_; }
  TransformKind kind() const { return kind_; }
  /// Rapidity for kind() == boost_x, 0 otherwise.
  double rapidity() const { return phi_; }

  /// Algebraic inverse η mᵀ η.
  LorentzTransform inverse() const;

  FourVector operator()(const FourVector& X) const;

  /// Lower-right 3x3 block; for embedded rotations this is the rotation.
  Mat3 spatial_block() const;

  friend LorentzTransform operator*(const LorentzTransform& a, const LorentzTransform& b);

  /// ‖mᵀηm − η‖∞ / max(1, ‖m‖∞²).
  double metric_defect() const;

 private:
  LorentzTransform(const Mat4& m, TransformKind kind, double phi) : m_(m), kind_(kind), phi_(phi) {}
  friend LorentzTransform boost_x(double phi);
  friend LorentzTransform embed_rotation(const Mat3& r, double tol);

  Mat4 m_;
  TransformKind kind_;
  double phi_ = 0.0;
};

/// Boost A_φ along the first spatial axis. Throws DomainError if |φ| > 700.
LorentzTransform boost_x(double phi);

/// Block-diagonal embedding of a proper rotation; validates rᵀr = I, det r = 1.
LorentzTransform embed_rotation(const Mat3& r, double tol = 1e-10);

/// Matrix-vector product, split as (A⁰(X), Aˢ(X)).
FourVector apply(const LorentzTransform& a, const FourVector& X);

/// a = r1 · boost_x(phi) · r2 with phi >= 0 and r1, r2 embedded rotations.
struct Decomposition {
  LorentzTransform r1;
  double phi = 0.0;
  LorentzTransform r2;

  LorentzTransform reconstruct() const { return r1 * boost_x(phi) * r2; }
};

Decomposition decompose(const LorentzTransform& a);

/// A with A(τ, 0, 0, 0) = p, τ = sqrt(t² − |x|²); p must be future timelike.
LorentzTransform boost_to_rest(const FourVector& p);

/// Earliest new-frame time T_A = |sinh φ| k at which the transformed solution
/// is defined everywhere (0 for rotations).
double onset_time(const LorentzTransform& a, double support_k);

/// Rotation by `angle` about `axis` (Rodrigues).
Mat3 axis_angle(const Vec3& axis, double angle);

/// Proper rotation mapping e1 onto the unit vector n.
Mat3 rotation_e1_to(const Vec3& n);

}  // namespace lorentz
}  // namespace vmlab
