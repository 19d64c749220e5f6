#pragma once

#include <cstddef>
#include <vector>

#include "vmlab/faraday.hpp"
#include "vmlab/fieldmodels.hpp"
#include "vmlab/kinematics.hpp"
#include "vmlab/lorentz.hpp"
#include "vmlab/vec3.hpp"

namespace vmlab::transport {

/// One weighted marker of f_α. Invariants: finite, w >= 0.
struct ParticleState {
  Vec3 x;
  Vec3 v;
  double w = 0.0;
};

struct WorldlineSample {
  double t = 0.0;
  Vec3 x;
  Vec3 v;
};

using Worldline = std::vector<WorldlineSample>;

struct ParticleEnsemble {
  Species species;
  std::vector<ParticleState> particles;
  double time = 0.0;
  /// Either empty or one entry per tracked particle; worldline_ids[i] is the
  /// index into `particles` of worldlines[i].
  std::vector<Worldline> worldlines;
  std::vector<std::size_t> worldline_ids;
  /// Support constant k of the initial data.
  double support_k = 1.0;
  /// Largest |v| seen so far (the recorded β).
  double beta_recorded = 0.0;
  /// Bound on the error of linear interpolation between stored samples.
  double interp_error_bound = 0.0;

  double total_weight() const;
  bool has_full_worldlines() const { return !particles.empty() && worldlines.size() == particles.size(); }
  /// Starts a worldline for every particle at the current time.
  void track_all();
};

enum class IntegratorKind { adaptive_rk78, boris };

/// Where worldline samples are stored: every `linear_dt` up to `t_switch`,
/// then at times growing by `ratio`.
struct SamplingPolicy {
  bool store = true;
  double linear_dt = 0.5;
  double t_switch = 10.0;
  double ratio = 1.05;

  /// Sample times in (t0, t1], always ending with t1.
  std::vector<double> times(double t0, double t1) const;
};

struct IntegratorOptions {
  IntegratorKind kind = IntegratorKind::adaptive_rk78;
  double rtol = 1e-12;
  double atol = 1e-12;
  /// Fixed step of the Boris scheme.
  double dt = 1e-2;
  /// Initial step hint of the adaptive scheme.
  double dt_initial = 1e-3;
  /// Upper bound on adaptive steps; 0 disables the bound.
  std::size_t max_steps = 50'000'000;
  int workers = 1;
};

/// One relativistic Boris momentum update (half E kick, rotation, half E kick)
/// over dt with the field held fixed.
Vec3 boris_kick(const Vec3& v, const Species& s, const EMField& em, double dt);

/// Right-hand side of the characteristic system: (v̂_α, e_α(E + v̂_α × B)).
std::pair<Vec3, Vec3> characteristic_rhs(const Species& s, const EMField& em, const Vec3& v);

/// Advances the whole ensemble by dt > 0. Weights are unchanged; worldline
/// samples follow `sampling` when worldlines are tracked.
ParticleEnsemble push(const ParticleEnsemble& ens, const fields::FieldModel& field, double dt,
                      const IntegratorOptions& opts = {}, const SamplingPolicy& sampling = {});

/// push() up to an absolute time t_final > ens.time.
ParticleEnsemble evolve(const ParticleEnsemble& ens, const fields::FieldModel& field, double t_final,
                        const IntegratorOptions& opts = {}, const SamplingPolicy& sampling = {});

/// Single-characteristic integration from t0 to t1 (t1 may be < t0 for the
/// reversible scheme). Returns the final state; appends samples to `out` if given.
WorldlineSample integrate_characteristic(const Species& s, const fields::FieldModel& field,
                                         const WorldlineSample& start, double t1, const IntegratorOptions& opts,
                                         const SamplingPolicy& sampling, Worldline* out);

struct AsymptoticMomentum {
  /// v at the last stored time.
  Vec3 v_final;
  /// sup_{t >= t_min} |v(t) − v_final| over stored samples.
  double cauchy = 0.0;
  /// Richardson estimate assuming v(t) = v∞ + c/t.
  Vec3 v_extrapolated;
  double t_final = 0.0;
};

/// Throws PreconditionError unless at least two samples lie at t >= t_min.
AsymptoticMomentum asymptotic_momentum(const Worldline& wl, double t_min);

struct DriftFit {
  Vec3 a;
  Vec3 b;
  /// RMS of |x(t) − t v̂ − a − b log t| over the window samples.
  double residual = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  std::size_t samples = 0;
};

/// Least-squares fit of x(t) − t·v̂_α(v_inf) ≈ a + b log t on the stored samples
/// in [t_lo, t_hi]. Throws PreconditionError if t_lo < 10 or the window leaves
/// the worldline, RuntimeFailure if the normal equations are singular.
DriftFit drift_fit(const Worldline& wl, const Species& s, const Vec3& v_inf, double t_lo, double t_hi);

/// Closed-form log-slope for a self-similar profile:
/// b = −(e_α/v⁰_α)(𝕃 − v̂_α(v̂_α·𝕃)) with 𝕃 evaluated at v_inf/m_α.
Vec3 predicted_drift(const fields::SelfSimilarProfile& p, const Species& s, const Vec3& v_inf);

/// The ensemble seen on the slice {t' = t_new} of the frame related by `a`:
/// events are mapped by a⁻¹ and momenta by (a⁻¹(v⁰_α, v))ˢ; weights are kept.
/// Requires worldlines for every particle. Throws DomainError if
/// t_new < onset_time(a, k), PreconditionError if a worldline misses the slice.
ParticleEnsemble boosted_slice(const ParticleEnsemble& ens, const lorentz::LorentzTransform& a, double t_new);

/// Support constant of the transformed data: max(T + k(cosh φ + |sinh φ|),
/// sqrt(1 + β²)(cosh φ + |sinh φ|)) with T = |sinh φ| k.
double boosted_support_constant(const lorentz::LorentzTransform& a, double k, double beta);

struct SupportReport {
  double max_speed = 0.0;
  /// max over particles of |x| − β̂ t; the support bound asks this to stay <= k.
  double max_cone_excess = 0.0;
};

SupportReport support_report(const ParticleEnsemble& ens, double beta_hat_max);

}  // namespace vmlab::transport
