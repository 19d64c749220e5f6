#pragma once

#include <array>

#include "vmlab/lorentz.hpp"
#include "vmlab/vec3.hpp"

namespace vmlab {

/// Electromagnetic field (E, B) at a spacetime point.
struct EMField {
  Vec3 e;
  Vec3 b;

  friend constexpr bool operator==(const EMField&, const EMField&) = default;
};

namespace faraday {

/// Antisymmetric 4x4 field tensor. Only the strict upper triangle is stored,
/// so f + fᵀ = 0 holds exactly.
///
/// Layout (rows/columns t, x1, x2, x3):
///
///        0    E1   E2   E3
///      -E1    0    B3  -B2
///      -E2  -B3    0    B1
///      -E3   B2  -B1    0
class FaradayTensor {
 public:
  FaradayTensor() = default;

  /// Builds from a full matrix; throws ValidationError unless
  /// |f_ij + f_ji| <= tol·max(1, ‖f‖∞) for all i, j.
  static FaradayTensor from_matrix(const Mat4& f, double tol = 1e-12);

  Mat4 matrix() const;
  double operator()(std::size_t i, std::size_t j) const;

  friend bool operator==(const FaradayTensor&, const FaradayTensor&) = default;

 private:
  // (01, 02, 03, 12, 13, 23)
  std::array<double, 6> upper_{};
  friend FaradayTensor to_tensor(const EMField& em);
};

FaradayTensor to_tensor(const EMField& em);
EMField from_tensor(const FaradayTensor& f);
/// Validating overload for a raw matrix.
EMField from_tensor(const Mat4& f);

/// Field tensor seen in the frame related by `a`: A⁻¹ F A⁻ᵀ. Coincides with
/// A⁻¹ F A⁻¹ whenever A is symmetric (every boost).
FaradayTensor transform(const FaradayTensor& f, const lorentz::LorentzTransform& a);
/// Full matrix product A⁻¹ F A⁻ᵀ before antisymmetric projection, for
/// checking that the transformation law keeps antisymmetry.
Mat4 transform_matrix(const Mat4& f, const lorentz::LorentzTransform& a);

EMField transform(const EMField& em, const lorentz::LorentzTransform& a);

/// Lorentz-invariant |B|² − |E|².
inline double invariant_b2_minus_e2(const EMField& em) { return norm2(em.b) - norm2(em.e); }
/// Lorentz-invariant E · B.
inline double invariant_e_dot_b(const EMField& em) { return dot(em.e, em.b); }

}  // namespace faraday
}  // namespace vmlab
