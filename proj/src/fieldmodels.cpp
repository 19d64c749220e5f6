#include "vmlab/fieldmodels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "vmlab/error.hpp"
#include "vmlab/kinematics.hpp"

namespace vmlab::fields {
namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;
// Outer edge (in |x|/t) of the taper applied to the coulomb profile.
constexpr double kCoulombTaperEnd = 0.95;

double bump(double s) {
  if (s >= 1.0) return 0.0;
  const double w = 1.0 - s * s;
  return w * w * w;
}

// C¹ step from 1 (tau <= 0) to 0 (tau >= 1).
double taper(double tau) {
  if (tau <= 0.0) return 1.0;
  if (tau >= 1.0) return 0.0;
  return 1.0 - tau * tau * (3.0 - 2.0 * tau);
}

double speed_of(double p) { return p / std::sqrt(1.0 + p * p); }

}  // namespace

double RadialBump::value(const Vec3& v) const { return q * bump(norm(v) / s_max); }

double RadialBump::enclosed(double p) const {
  const double P = std::min(std::fabs(p), s_max);
  const double S2 = s_max * s_max;
  const double P2 = P * P;
  const double P3 = P2 * P;
  return q * P3 * (1.0 / 3.0 - 3.0 * P2 / (5.0 * S2) + 3.0 * P2 * P2 / (7.0 * S2 * S2) -
                   P2 * P2 * P2 / (9.0 * S2 * S2 * S2));
}

Vec3 SelfSimilarProfile::ebb(const Vec3& v) const {
  switch (kind) {
    case ProfileKind::zero:
      return {};
    case ProfileKind::linear: {
      const double chi = bump(norm(v) / beta_max);
      if (chi == 0.0) return {};
      return chi * (a_radial * v + e_uniform);
    }
    case ProfileKind::coulomb:
      return ebb_at_speed(kin::hat(v, 1.0));
  }
  return {};
}

Vec3 SelfSimilarProfile::ebb_at_speed(const Vec3& u) const {
  const double r = norm(u);
  switch (kind) {
    case ProfileKind::zero:
      return {};
    case ProfileKind::linear:
      if (r >= speed_of(beta_max)) return {};
      return ebb(kin::check(u));
    case ProfileKind::coulomb: {
      if (r == 0.0 || r >= kCoulombTaperEnd) return {};
      const double edge = speed_of(beta_max);
      const double m = (r < edge) ? RadialBump{q, beta_max}.enclosed(r / std::sqrt((1.0 - r) * (1.0 + r)))
                                  : RadialBump{q, beta_max}.enclosed(beta_max);
      const double start = edge + 0.5 * (kCoulombTaperEnd - edge);
      const double factor = taper((r - start) / (kCoulombTaperEnd - start));
      return (kFourPi * m * factor / (r * r * r)) * u;
    }
  }
  return {};
}

Vec3 SelfSimilarProfile::lbb(const Vec3& v) const { return ebb(v) + cross(kin::hat(v, 1.0), bbb(v)); }

double SelfSimilarProfile::max_speed() const {
  switch (kind) {
    case ProfileKind::zero: return 0.0;
    case ProfileKind::linear: return speed_of(beta_max);
    case ProfileKind::coulomb: return kCoulombTaperEnd;
  }
  return 0.0;
}

double SelfSimilarProfile::sup_bound() const {
  double e = 0.0;
  switch (kind) {
    case ProfileKind::zero: return 0.0;
    // max_s s (1 - s²)³ < 0.25
    case ProfileKind::linear: e = 0.25 * std::fabs(a_radial) * beta_max + norm(e_uniform); break;
    case ProfileKind::coulomb: e = kFourPi * std::fabs(q) * beta_max * (1.0 + beta_max * beta_max) / 3.0; break;
  }
  return e * std::sqrt(1.0 + norm2(omega));
}

EMField self_similar_field(const SelfSimilarProfile& p, double t, const Vec3& x) {
  if (!(t >= p.t_on)) {
    std::ostringstream os;
    os << "self_similar_field: t = " << t << " precedes activation time " << p.t_on;
    throw DomainError("fieldmodels", "self_similar_field", os.str());
  }
  const Vec3 u = x / t;
  if (norm(u) >= p.max_speed()) return {};
  const double inv_t2 = 1.0 / (t * t);
  const Vec3 e = p.ebb_at_speed(u);
  return EMField{inv_t2 * e, inv_t2 * cross(p.omega, e)};
}

CoulombPair coulomb_pair(double q, double delta) {
  if (!(delta > 0.0) || !(delta <= 0.9)) {
    std::ostringstream os;
    os << "coulomb_pair: support speed " << delta << " outside (0, 0.9]";
    throw DomainError("fieldmodels", "coulomb_pair", os.str());
  }
  const double s_max = delta / std::sqrt((1.0 - delta) * (1.0 + delta));
  CoulombPair pair;
  pair.profile.kind = ProfileKind::coulomb;
  pair.profile.beta_max = s_max;
  pair.profile.q = q;
  pair.charge = RadialBump{q, s_max};
  return pair;
}

double implied_charge(const SelfSimilarProfile& p, const Vec3& v, double h) {
  const Vec3 u0 = kin::hat(v, 1.0);
  double div = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    Vec3 up = u0;
    Vec3 um = u0;
    up[i] += h;
    um[i] -= h;
    div += (p.ebb_at_speed(up)[i] - p.ebb_at_speed(um)[i]) / (2.0 * h);
  }
  const double b = kin::bracket(v);
  return div / (kFourPi * std::pow(b, 5));
}

SelfSimilarField::SelfSimilarField(SelfSimilarProfile profile, double support_k)
    : profile_(profile), k_(support_k) {
  if (!(support_k > 0.0)) throw ValidationError("fieldmodels", "SelfSimilarField", "support_k must be positive");
  if (!(profile.t_on > 0.0)) throw ValidationError("fieldmodels", "SelfSimilarField", "t_on must be positive");
  if (!(profile.beta_max > 0.0)) throw ValidationError("fieldmodels", "SelfSimilarField", "beta_max must be positive");
}

EMField SelfSimilarField::evaluate(double t, const Vec3& x) const {
  if (t < profile_.t_on) return {};
  return self_similar_field(profile_, t, x);
}

std::optional<double> SelfSimilarField::decay_bound() const {
  const double t0 = profile_.t_on;
  const double u = profile_.max_speed();
  return profile_.sup_bound() * (1.0 + u + 2.0 * k_ / t0) * (1.0 + 2.0 * k_ / t0);
}

RotatedField::RotatedField(std::shared_ptr<const FieldModel> base, const Mat3& r) : base_(std::move(base)), r_(r) {
  (void)lorentz::embed_rotation(r);
}

EMField RotatedField::evaluate(double t, const Vec3& x) const {
  const EMField em = base_->evaluate(t, r_ * x);
  const Mat3 rt = transpose(r_);
  return EMField{rt * em.e, rt * em.b};
}

double empirical_decay_constant(const FieldModel& field, double t_min, double t_max, int n_times, int n_radii,
                                int n_dirs) {
  const double k = field.support_k();
  std::vector<Vec3> dirs;
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b)
      for (int c = -1; c <= 1; ++c)
        if (a != 0 || b != 0 || c != 0) dirs.push_back(Vec3{{double(a), double(b), double(c)}});
  dirs.resize(std::min<std::size_t>(dirs.size(), static_cast<std::size_t>(n_dirs)));
  for (auto& d : dirs) d = d / norm(d);

  double sup = 0.0;
  const double ratio = (n_times > 1) ? std::pow(t_max / t_min, 1.0 / (n_times - 1)) : 1.0;
  double t = t_min;
  for (int it = 0; it < n_times; ++it, t *= ratio) {
    for (int ir = 0; ir < n_radii; ++ir) {
      const double r = (t + k) * ir / n_radii;
      for (const auto& d : dirs) {
        const EMField em = field.evaluate(t, r * d);
        const double mag = std::sqrt(norm2(em.e) + norm2(em.b));
        sup = std::max(sup, (t + r + 2.0 * k) * (t - r + 2.0 * k) * mag);
      }
    }
  }
  return sup;
}

}  // namespace vmlab::fields
