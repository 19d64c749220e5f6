#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vmlab/faraday.hpp"
#include "vmlab/lorentz.hpp"
#include "vmlab/vec3.hpp"

namespace vmlab::fields {

/// A prescribed spacetime field. Implementations are immutable and
/// evaluate() must be a pure function of (t, x).
class FieldModel {
 public:
  virtual ~FieldModel() = default;
  virtual EMField evaluate(double t, const Vec3& x) const = 0;
  /// Support constant k of the decay bound.
  virtual double support_k() const { return 1.0; }
  /// Analytic C0 with |(E,B)| <= C0 / ((t+|x|+2k)(t-|x|+2k)), if the model decays.
  virtual std::optional<double> decay_bound() const { return std::nullopt; }
  virtual std::string name() const = 0;
  /// Times at which the field may jump; integrators stop exactly there.
  virtual std::vector<double> breakpoints() const { return {}; }
};

class ZeroField final : public FieldModel {
 public:
  EMField evaluate(double, const Vec3&) const override { return {}; }
  std::optional<double> decay_bound() const override { return 0.0; }
  std::string name() const override { return "zero"; }
};

/// Constant (E, B); does not decay.
class UniformField final : public FieldModel {
 public:
  UniformField(const Vec3& e, const Vec3& b) : em_{e, b} {}
  EMField evaluate(double, const Vec3&) const override { return em_; }
  std::string name() const override { return "uniform"; }

 private:
  EMField em_;
};

enum class ProfileKind { zero, linear, coulomb };

/// Asymptotic field profiles 𝔼, 𝔹 on unit-mass momentum space.
///
/// linear:  𝔼(v) = χ(|v|/β) (a_radial v + e_uniform), χ(s) = (1 - s²)³ on s < 1.
/// coulomb: 𝔼 is the radial field whose Gauss flux matches the bump
///          Q∞(v) = q (1 - |v|²/β²)³; it is tapered to zero between the
///          support edge and |x|/t = 0.95.
/// Both:    𝔹 = ω × 𝔼.
struct SelfSimilarProfile {
  ProfileKind kind = ProfileKind::zero;
  double beta_max = 1.0;
  double t_on = 1.0;
  double a_radial = 0.0;
  Vec3 e_uniform;
  double q = 0.0;
  Vec3 omega;

  Vec3 ebb(const Vec3& v) const;
  Vec3 bbb(const Vec3& v) const { return cross(omega, ebb(v)); }
  /// 𝕃(v) = 𝔼(v) + v̂ × 𝔹(v).
  Vec3 lbb(const Vec3& v) const;

  /// 𝔼 evaluated at the check of a velocity u, |u| < 1; no check() call is
  /// made outside the profile support.
  Vec3 ebb_at_speed(const Vec3& u) const;
  Vec3 bbb_at_speed(const Vec3& u) const { return cross(omega, ebb_at_speed(u)); }

  /// Largest |x|/t at which the field can be nonzero.
  double max_speed() const;
  /// Analytic bound on sup |(𝔼, 𝔹)|.
  double sup_bound() const;
};

/// Q∞(v) = q (1 - |v|²/s_max²)³ for |v| < s_max, zero outside.
struct RadialBump {
  double q = 0.0;
  double s_max = 1.0;

  double value(const Vec3& v) const;
  /// M(p) = ∫_0^p s² Q(s) ds.
  double enclosed(double p) const;
};

/// Self-similar field E = 𝔼(ǔ)/t², B = 𝔹(ǔ)/t² with u = x/t.
/// Throws DomainError for t < profile.t_on.
EMField self_similar_field(const SelfSimilarProfile& p, double t, const Vec3& x);

struct CoulombPair {
  SelfSimilarProfile profile;
  RadialBump charge;
};

/// Analytically consistent (Q∞, 𝔼) pair with support edge speed `delta`
/// (0 < delta < 1). Throws DomainError otherwise.
CoulombPair coulomb_pair(double q, double delta);

/// Charge density implied by Gauss's law on a profile:
/// div_u[𝔼(ǔ)] / (4π <v>⁵) evaluated at u = v̂ by central differences.
double implied_charge(const SelfSimilarProfile& p, const Vec3& v, double h = 1e-5);

/// FieldModel wrapper of a self-similar profile, extended by zero for t < t_on.
class SelfSimilarField final : public FieldModel {
 public:
  SelfSimilarField(SelfSimilarProfile profile, double support_k);
  EMField evaluate(double t, const Vec3& x) const override;
  double support_k() const override { return k_; }
  std::optional<double> decay_bound() const override;
  std::string name() const override { return "self_similar"; }
  std::vector<double> breakpoints() const override { return {profile_.t_on}; }
  const SelfSimilarProfile& profile() const { return profile_; }

 private:
  SelfSimilarProfile profile_;
  double k_;
};

/// The field of `base` seen in the frame of rotation `r`:
/// E^R(t, x) = R̃ᵀ E(t, R̃x), same for B.
class RotatedField final : public FieldModel {
 public:
  RotatedField(std::shared_ptr<const FieldModel> base, const Mat3& r);
  EMField evaluate(double t, const Vec3& x) const override;
  double support_k() const override { return base_->support_k(); }
  std::optional<double> decay_bound() const override { return base_->decay_bound(); }
  std::string name() const override { return "rotated_" + base_->name(); }
  std::vector<double> breakpoints() const override { return base_->breakpoints(); }

 private:
  std::shared_ptr<const FieldModel> base_;
  Mat3 r_;
};

/// sup over a sampling set of (t+|x|+2k)(t-|x|+2k)|(E,B)(t,x)| for
/// t in [t_min, t_max] (geometric) and |x| < t + k.
double empirical_decay_constant(const FieldModel& field, double t_min, double t_max, int n_times = 24,
                                int n_radii = 24, int n_dirs = 26);

}  // namespace vmlab::fields
