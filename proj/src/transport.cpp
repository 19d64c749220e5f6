#include "vmlab/transport.hpp"

#include <algorithm>
#include <array>
#include <boost/numeric/odeint/stepper/controlled_runge_kutta.hpp>
#include <boost/numeric/odeint/stepper/generation.hpp>
#include <boost/numeric/odeint/stepper/runge_kutta_fehlberg78.hpp>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "vmlab/error.hpp"

namespace vmlab::transport {
namespace odeint = boost::numeric::odeint;

namespace {

using State = std::array<double, 6>;

Vec3 pos_of(const State& s) { return Vec3{{s[0], s[1], s[2]}}; }
Vec3 mom_of(const State& s) { return Vec3{{s[3], s[4], s[5]}}; }

// Stop times strictly after t0 up to t1 (inclusive), merging field breakpoints.
std::vector<double> stop_times(double t0, double t1, const SamplingPolicy& sampling,
                               const fields::FieldModel& field) {
  std::vector<double> stops;
  if (t1 > t0) {
    if (sampling.store) stops = sampling.times(t0, t1);
    for (double b : field.breakpoints())
      if (b > t0 && b < t1) stops.push_back(b);
  } else {
    for (double b : field.breakpoints())
      if (b < t0 && b > t1) stops.push_back(b);
    std::sort(stops.begin(), stops.end(), std::greater<>());
  }
  stops.push_back(t1);
  if (t1 > t0) std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
  return stops;
}

bool is_breakpoint(double t, const std::vector<double>& bps) {
  return std::find(bps.begin(), bps.end(), t) != bps.end();
}

struct Rhs {
  const Species* species;
  const fields::FieldModel* field;
  // Field evaluation is clamped to [lo, hi] so no stage sees the far side of a jump.
  double lo;
  double hi;

  void operator()(const State& s, State& ds, double t) const {
    const double te = std::clamp(t, lo, hi);
    const Vec3 v = mom_of(s);
    const EMField em = field->evaluate(te, pos_of(s));
    const auto [dx, dv] = characteristic_rhs(*species, em, v);
    for (std::size_t i = 0; i < 3; ++i) {
      ds[i] = dx[i];
      ds[i + 3] = dv[i];
    }
  }
};

void integrate_rk78(const Species& s, const fields::FieldModel& field, State& y, double t0, double t1,
                    double& dt_hint, const IntegratorOptions& opts, std::size_t& steps,
                    const std::vector<double>& bps) {
  if (t1 == t0) return;
  const double dir = (t1 > t0) ? 1.0 : -1.0;
  const double lo = std::min(t0, t1);
  const double hi = std::max(t0, t1);
  Rhs rhs{&s, &field, is_breakpoint(lo, bps) && dir < 0 ? std::nextafter(lo, hi) : lo,
          is_breakpoint(hi, bps) && dir > 0 ? std::nextafter(hi, lo) : hi};
  auto stepper = odeint::make_controlled(opts.atol, opts.rtol, odeint::runge_kutta_fehlberg78<State>());
  double t = t0;
  while (dir * (t1 - t) > 0.0) {
    const double remaining = t1 - t;
    const bool clamped = std::fabs(dt_hint) >= std::fabs(remaining);
    double dt = clamped ? remaining : dir * std::fabs(dt_hint);
    const double hint_before = std::fabs(dt_hint);
    const auto result = stepper.try_step(rhs, y, t, dt);
    if (result == odeint::success) {
      if (clamped) {
        t = t1;
        dt_hint = std::max(hint_before, std::fabs(dt));
      } else {
        dt_hint = std::fabs(dt);
      }
      if (opts.max_steps > 0 && ++steps > opts.max_steps)
        throw RuntimeFailure("transport", "push", "adaptive integrator exceeded its step budget");
    } else {
      dt_hint = std::fabs(dt);
    }
    if (!(dt_hint > 0.0) || !std::isfinite(dt_hint))
      throw RuntimeFailure("transport", "push", "adaptive step size collapsed");
  }
}

void boris_step(const Species& s, const fields::FieldModel& field, Vec3& x, Vec3& v, double t, double dt) {
  const Vec3 xh = x + (0.5 * dt) * kin::hat(v, s.mass);
  const EMField em = field.evaluate(t + 0.5 * dt, xh);
  v = boris_kick(v, s, em, dt);
  x = xh + (0.5 * dt) * kin::hat(v, s.mass);
}

void integrate_boris(const Species& s, const fields::FieldModel& field, Vec3& x, Vec3& v, double t0, double t1,
                     double h) {
  const double span = t1 - t0;
  if (span == 0.0) return;
  const auto n = static_cast<long long>(std::ceil(std::fabs(span) / h - 1e-9));
  const double dt = span / static_cast<double>(std::max(1LL, n));
  for (long long i = 0; i < std::max(1LL, n); ++i) boris_step(s, field, x, v, t0 + i * dt, dt);
}

double segment_interp_error(const WorldlineSample& a, const WorldlineSample& b, double mass) {
  const double dt = std::fabs(b.t - a.t);
  return dt * norm(kin::hat(b.v, mass) - kin::hat(a.v, mass)) / 8.0;
}

}  // namespace

double ParticleEnsemble::total_weight() const {
  double sum = 0.0;
  for (const auto& p : particles) sum += p.w;
  return sum;
}

void ParticleEnsemble::track_all() {
  worldlines.assign(particles.size(), {});
  worldline_ids.resize(particles.size());
  for (std::size_t i = 0; i < particles.size(); ++i) {
    worldline_ids[i] = i;
    worldlines[i].push_back(WorldlineSample{time, particles[i].x, particles[i].v});
  }
}

std::vector<double> SamplingPolicy::times(double t0, double t1) const {
  std::vector<double> out;
  if (!(t1 > t0)) return out;
  if (!(linear_dt > 0.0) || !(ratio > 1.0))
    throw ValidationError("transport", "SamplingPolicy", "linear_dt must be > 0 and ratio > 1");
  double t = t0;
  while (true) {
    const double next = (t < t_switch) ? std::min(t + linear_dt, t_switch) : t * ratio;
    if (next >= t1 * (1.0 - 1e-14)) break;
    out.push_back(next);
    t = next;
  }
  out.push_back(t1);
  return out;
}

std::pair<Vec3, Vec3> characteristic_rhs(const Species& s, const EMField& em, const Vec3& v) {
  const Vec3 vh = kin::hat(v, s.mass);
  return {vh, s.charge * (em.e + cross(vh, em.b))};
}

Vec3 boris_kick(const Vec3& v, const Species& s, const EMField& em, double dt) {
  const double h = 0.5 * s.charge * dt;
  const Vec3 vm = v + h * em.e;
  const Vec3 tv = (h / kin::energy(vm, s.mass)) * em.b;
  const Vec3 sv = (2.0 / (1.0 + norm2(tv))) * tv;
  const Vec3 vp = vm + cross(vm + cross(vm, tv), sv);
  return vp + h * em.e;
}

WorldlineSample integrate_characteristic(const Species& s, const fields::FieldModel& field,
                                         const WorldlineSample& start, double t1, const IntegratorOptions& opts,
                                         const SamplingPolicy& sampling, Worldline* out) {
  SamplingPolicy pol = sampling;
  pol.store = sampling.store && out != nullptr;
  const std::vector<double> stops = stop_times(start.t, t1, pol, field);
  const std::vector<double> bps = field.breakpoints();

  WorldlineSample cur = start;
  State y{cur.x[0], cur.x[1], cur.x[2], cur.v[0], cur.v[1], cur.v[2]};
  double dt_hint = opts.dt_initial;
  std::size_t steps = 0;
  for (double stop : stops) {
    if (opts.kind == IntegratorKind::adaptive_rk78) {
      integrate_rk78(s, field, y, cur.t, stop, dt_hint, opts, steps, bps);
      cur = WorldlineSample{stop, pos_of(y), mom_of(y)};
    } else {
      integrate_boris(s, field, cur.x, cur.v, cur.t, stop, opts.dt);
      cur.t = stop;
    }
    if (!is_finite(cur.x) || !is_finite(cur.v))
      throw RuntimeFailure("transport", "push", "characteristic became non-finite");
    if (pol.store && out) out->push_back(cur);
  }
  if (out && !pol.store) out->push_back(cur);
  return cur;
}

ParticleEnsemble evolve(const ParticleEnsemble& ens, const fields::FieldModel& field, double t_final,
                        const IntegratorOptions& opts, const SamplingPolicy& sampling) {
  if (!(t_final > ens.time)) {
    std::ostringstream os;
    os << "evolve: target time " << t_final << " does not exceed ensemble time " << ens.time;
    throw PreconditionError("transport", "push", os.str());
  }
  ParticleEnsemble out = ens;
  std::vector<long> track(ens.particles.size(), -1);
  for (std::size_t i = 0; i < ens.worldline_ids.size(); ++i) track[ens.worldline_ids[i]] = static_cast<long>(i);

  std::vector<double> seg_err(ens.particles.size(), 0.0);
  std::vector<double> speed(ens.particles.size(), 0.0);
  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const ParticleState& p = ens.particles[i];
      const WorldlineSample start{ens.time, p.x, p.v};
      Worldline* wl = (track[i] >= 0) ? &out.worldlines[static_cast<std::size_t>(track[i])] : nullptr;
      const std::size_t before = wl ? wl->size() : 0;
      const WorldlineSample end = integrate_characteristic(ens.species, field, start, t_final, opts, sampling, wl);
      out.particles[i].x = end.x;
      out.particles[i].v = end.v;
      speed[i] = norm(end.v);
      if (wl) {
        for (std::size_t k = (before > 0 ? before - 1 : 0); k + 1 < wl->size(); ++k) {
          seg_err[i] = std::max(seg_err[i], segment_interp_error((*wl)[k], (*wl)[k + 1], ens.species.mass));
          speed[i] = std::max(speed[i], norm((*wl)[k + 1].v));
        }
      }
    }
  };
  const std::size_t n = ens.particles.size();
  const auto workers = static_cast<std::size_t>(std::max(1, opts.workers));
  if (workers == 1 || n < 2) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t lo = w * chunk;
      const std::size_t hi = std::min(n, lo + chunk);
      if (lo < hi) pool.emplace_back(work, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  out.time = t_final;
  for (std::size_t i = 0; i < n; ++i) {
    out.beta_recorded = std::max(out.beta_recorded, speed[i]);
    out.interp_error_bound = std::max(out.interp_error_bound, seg_err[i]);
  }
  return out;
}

ParticleEnsemble push(const ParticleEnsemble& ens, const fields::FieldModel& field, double dt,
                      const IntegratorOptions& opts, const SamplingPolicy& sampling) {
  if (!(dt > 0.0)) throw PreconditionError("transport", "push", "dt must be positive");
  return evolve(ens, field, ens.time + dt, opts, sampling);
}

AsymptoticMomentum asymptotic_momentum(const Worldline& wl, double t_min) {
  std::size_t first = wl.size();
  for (std::size_t i = 0; i < wl.size(); ++i)
    if (wl[i].t >= t_min) {
      first = i;
      break;
    }
  if (wl.size() < 2 || first + 1 >= wl.size()) {
    std::ostringstream os;
    os << "asymptotic_momentum: worldline needs at least two samples past t_min = " << t_min;
    throw PreconditionError("transport", "asymptotic_momentum", os.str());
  }
  AsymptoticMomentum r;
  const WorldlineSample& last = wl.back();
  r.v_final = last.v;
  r.t_final = last.t;
  for (std::size_t i = first; i < wl.size(); ++i) r.cauchy = std::max(r.cauchy, norm(wl[i].v - last.v));

  std::size_t mid = first;
  for (std::size_t i = first; i + 1 < wl.size(); ++i)
    if (std::fabs(wl[i].t - 0.5 * last.t) < std::fabs(wl[mid].t - 0.5 * last.t)) mid = i;
  const WorldlineSample& m = wl[mid];
  r.v_extrapolated = (last.t * last.v - m.t * m.v) / (last.t - m.t);
  return r;
}

DriftFit drift_fit(const Worldline& wl, const Species& s, const Vec3& v_inf, double t_lo, double t_hi) {
  if (!(t_lo >= 10.0)) throw PreconditionError("transport", "drift_fit", "window must start at t >= 10");
  if (!(t_hi > t_lo)) throw PreconditionError("transport", "drift_fit", "window is empty (t_hi <= t_lo)");
  if (wl.empty() || wl.front().t > t_lo || wl.back().t < t_hi * (1.0 - 1e-12)) {
    std::ostringstream os;
    os << "drift_fit: window [" << t_lo << ", " << t_hi << "] is not covered by the worldline";
    throw PreconditionError("transport", "drift_fit", os.str());
  }
  const Vec3 vh = kin::hat(v_inf, s.mass);
  std::vector<double> logs;
  std::vector<Vec3> ys;
  for (const auto& smp : wl) {
    if (smp.t < t_lo * (1.0 - 1e-12) || smp.t > t_hi * (1.0 + 1e-12)) continue;
    logs.push_back(std::log(smp.t));
    ys.push_back(smp.x - smp.t * vh);
  }
  const auto n = static_cast<double>(logs.size());
  double mean = 0.0;
  for (double l : logs) mean += l;
  mean /= std::max(1.0, n);
  double sxx = 0.0;
  for (double l : logs) sxx += (l - mean) * (l - mean);
  if (logs.size() < 2 || !(sxx > 1e-12 * std::max(1.0, mean * mean))) {
    throw RuntimeFailure("transport", "drift_fit", "normal equations are singular; widen the window");
  }
  Vec3 ybar;
  for (const auto& y : ys) ybar += y;
  ybar = ybar / n;
  Vec3 sxy;
  for (std::size_t i = 0; i < ys.size(); ++i) sxy += (logs[i] - mean) * (ys[i] - ybar);

  DriftFit fit;
  fit.b = sxy / sxx;
  fit.a = ybar - mean * fit.b;
  double ss = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) ss += norm2(ys[i] - fit.a - logs[i] * fit.b);
  fit.residual = std::sqrt(ss / n);
  fit.t_lo = t_lo;
  fit.t_hi = t_hi;
  fit.samples = ys.size();
  return fit;
}

Vec3 predicted_drift(const fields::SelfSimilarProfile& p, const Species& s, const Vec3& v_inf) {
  const Vec3 vh = kin::hat(v_inf, s.mass);
  const Vec3 l = p.lbb(v_inf / s.mass);
  return (-s.charge / kin::energy(v_inf, s.mass)) * (l - dot(vh, l) * vh);
}

double boosted_support_constant(const lorentz::LorentzTransform& a, double k, double beta) {
  const double phi = (a.kind() == lorentz::TransformKind::rotation)  ? 0.0
                     : (a.kind() == lorentz::TransformKind::boost_x) ? a.rapidity()
                                                                     : lorentz::decompose(a).phi;
  const double spread = std::cosh(phi) + std::fabs(std::sinh(phi));
  const double t_phi = std::fabs(std::sinh(phi)) * k;
  return std::max(t_phi + k * spread, std::sqrt(1.0 + beta * beta) * spread);
}

ParticleEnsemble boosted_slice(const ParticleEnsemble& ens, const lorentz::LorentzTransform& a, double t_new) {
  if (!ens.particles.empty() && !ens.has_full_worldlines())
    throw PreconditionError("transport", "boosted_slice",
                            "ensemble has no stored worldlines; rerun with worldline storage enabled");
  const double t_onset = lorentz::onset_time(a, ens.support_k);
  if (t_new < t_onset) {
    std::ostringstream os;
    os << "boosted_slice: t_new = " << t_new << " is below the onset time " << t_onset
       << "; the slice intersects the unextended region";
    throw DomainError("transport", "boosted_slice", os.str());
  }
  const lorentz::LorentzTransform inv = a.inverse();
  const double m = ens.species.mass;
  auto new_time = [&](const WorldlineSample& s) { return inv(FourVector{s.t, s.x}).t - t_new; };

  ParticleEnsemble out;
  out.species = ens.species;
  out.time = t_new;
  out.particles.resize(ens.particles.size());
  out.worldlines.resize(ens.worldlines.size());
  out.worldline_ids = ens.worldline_ids;
  out.interp_error_bound = ens.interp_error_bound;
  for (std::size_t k = 0; k < ens.worldlines.size(); ++k) {
    const Worldline& wl = ens.worldlines[k];
    const std::size_t pid = ens.worldline_ids[k];
    if (wl.empty() || new_time(wl.front()) > 0.0 || new_time(wl.back()) < 0.0) {
      std::ostringstream os;
      os << "boosted_slice: worldline " << k << " does not reach the slice t' = " << t_new;
      throw PreconditionError("transport", "boosted_slice", os.str());
    }
    std::size_t lo = 0;
    std::size_t hi = wl.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (new_time(wl[mid]) <= 0.0)
        lo = mid;
      else
        hi = mid;
    }
    WorldlineSample hit;
    const double g0 = new_time(wl[lo]);
    const double g1 = new_time(wl[hi]);
    if (lo == hi || g1 == g0) {
      hit = (g0 == 0.0) ? wl[lo] : wl[hi];
    } else {
      const double s = -g0 / (g1 - g0);
      hit.t = wl[lo].t + s * (wl[hi].t - wl[lo].t);
      hit.x = wl[lo].x + s * (wl[hi].x - wl[lo].x);
      hit.v = wl[lo].v + s * (wl[hi].v - wl[lo].v);
    }
    ParticleState& p = out.particles[pid];
    p.x = inv(FourVector{hit.t, hit.x}).x;
    p.v = inv(FourVector{kin::energy(hit.v, m), hit.v}).x;
    p.w = ens.particles[pid].w;

    Worldline& nw = out.worldlines[k];
    nw.reserve(wl.size());
    for (const auto& smp : wl) {
      const FourVector ev = inv(FourVector{smp.t, smp.x});
      nw.push_back(WorldlineSample{ev.t, ev.x, inv(FourVector{kin::energy(smp.v, m), smp.v}).x});
    }
    out.beta_recorded = std::max(out.beta_recorded, norm(p.v));
  }
  out.support_k = boosted_support_constant(a, ens.support_k, ens.beta_recorded);
  return out;
}

SupportReport support_report(const ParticleEnsemble& ens, double beta_hat_max) {
  SupportReport r;
  r.max_cone_excess = -std::numeric_limits<double>::infinity();
  for (const auto& p : ens.particles) {
    r.max_speed = std::max(r.max_speed, norm(p.v));
    r.max_cone_excess = std::max(r.max_cone_excess, norm(p.x) - beta_hat_max * ens.time);
  }
  if (ens.particles.empty()) r.max_cone_excess = 0.0;
  return r;
}

}  // namespace vmlab::transport
