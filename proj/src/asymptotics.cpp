#include "vmlab/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "vmlab/error.hpp"
#include "vmlab/kinematics.hpp"

namespace vmlab::asymptotics {
namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

// Trilinear interpolation of a Vec3 field without copying whole components.
std::optional<Vec3> interpolate_vec(const VelocityGrid& g, const std::vector<Vec3>& values, const Vec3& v) {
  const double h = g.h();
  std::array<int, 3> i0{};
  std::array<double, 3> f{};
  for (std::size_t d = 0; d < 3; ++d) {
    const double p = (v[d] + g.radius) / h;
    if (p < 0.0 || p > g.n - 1) return std::nullopt;
    i0[d] = std::min(static_cast<int>(std::floor(p)), g.n - 2);
    f[d] = p - i0[d];
  }
  Vec3 out;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) {
        const double w = (a ? f[0] : 1.0 - f[0]) * (b ? f[1] : 1.0 - f[1]) * (c ? f[2] : 1.0 - f[2]);
        if (w != 0.0) out += w * values[g.index(i0[0] + a, i0[1] + b, i0[2] + c)];
      }
  return out;
}

GaussSides integrate_sides(const std::function<double(const Vec3&)>& q_total,
                           const std::function<Vec3(const Vec3&)>& ebb, double delta, const GaussQuadrature& quad) {
  if (!(delta > 0.0) || !(delta < 1.0)) {
    std::ostringstream os;
    os << "gauss_identity: delta = " << delta << " must lie in (0, 1)";
    throw DomainError("asymptotics", "gauss_identity", os.str());
  }
  const quad::Rule1D radial = quad::gauss_legendre(quad.radial);
  const quad::SphereRule sphere = quad::product_sphere(quad.n_theta, quad.n_phi);
  GaussSides s;
  s.lhs = kFourPi * quad::ball_integral(
                        [&](const Vec3& x) {
                          const Vec3 xc = kin::check(x);
                          return std::pow(kin::bracket(xc), 5) * q_total(xc);
                        },
                        delta, radial, sphere);
  s.rhs = quad::sphere_integral([&](const Vec3& w) { return dot(ebb(kin::check(w)), w / norm(w)); }, delta, sphere);
  return s;
}

std::function<double(const Vec3&)> q_total_function(const QProfile& q) {
  return [&q](const Vec3& v) {
    if (norm(v) > q.support_radius) return 0.0;
    const auto val = q.grid.interpolate(q.total, v);
    if (!val) throw DomainError("asymptotics", "gauss_identity", "momentum leaves the Q grid");
    return *val;
  };
}

void require_ball_in_grid(const VelocityGrid& g, double delta, const char* what) {
  if (!(delta > 0.0) || !(delta < 1.0))
    throw DomainError("asymptotics", "gauss_identity", "delta must lie in (0, 1)");
  if (kin::check(Vec3{{delta, 0.0, 0.0}})[0] > g.radius) {
    std::ostringstream os;
    os << "gauss_identity: delta = " << delta << " exceeds the " << what << " grid support";
    throw DomainError("asymptotics", "gauss_identity", os.str());
  }
}

}  // namespace

Vec3 VelocityGrid::node(int i, int j, int k) const {
  const double s = h();
  return Vec3{{-radius + i * s, -radius + j * s, -radius + k * s}};
}

Vec3 VelocityGrid::node(std::size_t flat) const {
  const auto nn = static_cast<std::size_t>(n);
  return node(static_cast<int>(flat / (nn * nn)), static_cast<int>((flat / nn) % nn), static_cast<int>(flat % nn));
}

std::optional<double> VelocityGrid::interpolate(const std::vector<double>& values, const Vec3& v) const {
  const double s = h();
  std::array<int, 3> i0{};
  std::array<double, 3> f{};
  for (std::size_t d = 0; d < 3; ++d) {
    const double p = (v[d] + radius) / s;
    if (p < 0.0 || p > n - 1) return std::nullopt;
    i0[d] = std::min(static_cast<int>(std::floor(p)), n - 2);
    f[d] = p - i0[d];
  }
  double out = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) {
        const double w = (a ? f[0] : 1.0 - f[0]) * (b ? f[1] : 1.0 - f[1]) * (c ? f[2] : 1.0 - f[2]);
        if (w != 0.0) out += w * values[index(i0[0] + a, i0[1] + b, i0[2] + c)];
      }
  return out;
}

double QProfile::max_abs_total() const {
  double m = 0.0;
  for (double v : total) m = std::max(m, std::fabs(v));
  return m;
}

void QProfile::recompute_total() {
  total.assign(grid.size(), 0.0);
  for (const auto& s : species) {
    const double c = s.charge * s.mass * s.mass * s.mass;
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += c * s.values[i];
  }
}

QProfile extract_q(const std::vector<transport::ParticleEnsemble>& ensembles, const VelocityGrid& grid) {
  if (grid.n < 2 || !(grid.radius > 0.0))
    throw ValidationError("asymptotics", "extract_q", "velocity grid needs n >= 2 and radius > 0");
  QProfile q;
  q.grid = grid;
  const double h = grid.h();
  std::vector<double> var_total(grid.size(), 0.0);
  for (const auto& ens : ensembles) {
    SpeciesQ s;
    s.label = ens.species.label;
    s.mass = ens.species.mass;
    s.charge = ens.species.charge;
    s.values.assign(grid.size(), 0.0);
    std::vector<double> var(grid.size(), 0.0);
    const double m3 = s.mass * s.mass * s.mass;
    const double norm_fac = 1.0 / (m3 * h * h * h);
    for (const auto& p : ens.particles) {
      if (p.w == 0.0) continue;
      const Vec3 va = p.v / s.mass;
      std::array<int, 3> i0{};
      std::array<double, 3> f{};
      bool inside = true;
      for (std::size_t d = 0; d < 3; ++d) {
        const double x = (va[d] + grid.radius) / h;
        if (x < 0.0 || x > grid.n - 1) {
          inside = false;
          break;
        }
        i0[d] = std::min(static_cast<int>(std::floor(x)), grid.n - 2);
        f[d] = x - i0[d];
      }
      if (!inside) {
        s.outside_weight += p.w;
        continue;
      }
      q.support_radius = std::max(q.support_radius, norm(va) + std::sqrt(3.0) * h);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          for (int c = 0; c < 2; ++c) {
            const double w = (a ? f[0] : 1.0 - f[0]) * (b ? f[1] : 1.0 - f[1]) * (c ? f[2] : 1.0 - f[2]);
            const std::size_t idx = grid.index(i0[0] + a, i0[1] + b, i0[2] + c);
            s.values[idx] += p.w * w * norm_fac;
            var[idx] += std::pow(p.w * w * norm_fac, 2);
          }
    }
    const double c2 = std::pow(s.charge * m3, 2);
    for (std::size_t i = 0; i < var.size(); ++i) {
      s.noise = std::max(s.noise, std::sqrt(var[i]));
      var_total[i] += c2 * var[i];
    }
    q.time = ens.time;
    q.species.push_back(std::move(s));
  }
  q.recompute_total();
  for (double v : var_total) q.noise_total = std::max(q.noise_total, std::sqrt(v));
  return q;
}

QProfile sample_q(const std::function<double(const Vec3&)>& fn, const VelocityGrid& grid, double mass, double charge,
                  double support_radius) {
  QProfile q;
  q.grid = grid;
  SpeciesQ s;
  s.label = "analytic";
  s.mass = mass;
  s.charge = charge;
  s.values.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) s.values[i] = fn(grid.node(i));
  q.species.push_back(std::move(s));
  q.support_radius = support_radius >= 0.0 ? support_radius : std::sqrt(3.0) * grid.radius;
  q.recompute_total();
  return q;
}

LProfile extract_field_profile(const FieldSource& field, double t, const VelocityGrid& grid) {
  LProfile l;
  l.grid = grid;
  l.time = t;
  l.ebb.assign(grid.size(), Vec3{});
  l.bbb.assign(grid.size(), Vec3{});
  l.lbb.assign(grid.size(), Vec3{});
  l.valid.assign(grid.size(), 0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec3 v = grid.node(i);
    const Vec3 u = kin::hat(v, 1.0);
    if (norm(u) >= 1.0 - 1e-9) {
      ++l.skipped;
      continue;
    }
    const EMField em = field(t, t * u);
    l.ebb[i] = (t * t) * em.e;
    l.bbb[i] = (t * t) * em.b;
    l.lbb[i] = l.ebb[i] + cross(u, l.bbb[i]);
    l.valid[i] = 1;
  }
  return l;
}

LProfile profile_from_model(const fields::SelfSimilarProfile& p, const VelocityGrid& grid) {
  LProfile l;
  l.grid = grid;
  l.time = std::numeric_limits<double>::infinity();
  l.ebb.resize(grid.size());
  l.bbb.resize(grid.size());
  l.lbb.resize(grid.size());
  l.valid.assign(grid.size(), 1);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec3 v = grid.node(i);
    l.ebb[i] = p.ebb(v);
    l.bbb[i] = p.bbb(v);
    l.lbb[i] = l.ebb[i] + cross(kin::hat(v, 1.0), l.bbb[i]);
  }
  return l;
}

GaussSides gauss_identity(const std::function<double(const Vec3&)>& q_total,
                          const std::function<Vec3(const Vec3&)>& ebb, double delta, const GaussQuadrature& quad) {
  return integrate_sides(q_total, ebb, delta, quad);
}

GaussSides gauss_identity(const QProfile& q, const LProfile& l, double delta, const GaussQuadrature& quad) {
  require_ball_in_grid(q.grid, delta, "Q");
  require_ball_in_grid(l.grid, delta, "field profile");
  return integrate_sides(
      q_total_function(q),
      [&l](const Vec3& v) {
        const auto e = interpolate_vec(l.grid, l.ebb, v);
        if (!e) throw DomainError("asymptotics", "gauss_identity", "momentum leaves the field profile grid");
        return *e;
      },
      delta, quad);
}

GaussSides gauss_identity(const QProfile& q, const FieldSource& field, double t, double delta,
                          const GaussQuadrature& quad) {
  require_ball_in_grid(q.grid, delta, "Q");
  return integrate_sides(
      q_total_function(q), [&](const Vec3& v) { return (t * t) * field(t, t * kin::hat(v, 1.0)).e; }, delta,
      quad);
}

std::optional<Witness> find_witness(const QProfile& q, const LProfile& l, double tol_q, double tol_l) {
  if (q.grid.n != l.grid.n || q.grid.radius != l.grid.radius)
    throw ValidationError("asymptotics", "find_witness", "profiles live on different grids");
  std::optional<Witness> best;
  for (std::size_t i = 0; i < q.total.size(); ++i) {
    if (!l.valid[i]) continue;
    const double qv = q.total[i];
    if (!(std::fabs(qv) > tol_q) || !(norm(l.lbb[i]) > tol_l)) continue;
    const Vec3 v = q.grid.node(i);
    const Vec3 vh = kin::hat(v, 1.0);
    const double score = std::fabs(qv) * std::fabs(dot(l.lbb[i], vh));
    if (!best || score > best->score) best = Witness{v, qv, l.lbb[i], score};
  }
  return best;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::linear: return "LINEAR";
    case Verdict::modified: return "MODIFIED";
    case Verdict::inconclusive: return "INCONCLUSIVE";
  }
  return "INCONCLUSIVE";
}

double Thresholds::tol_q() const { return multiplier * std::max(noise_q, min_noise_q); }
double Thresholds::tol_slope() const { return multiplier * std::max(noise_slope, min_noise_slope); }

ClassifierReport classify_scattering(const std::vector<transport::DriftFit>& fits, double max_q,
                                     const Thresholds& thresholds) {
  ClassifierReport r;
  r.max_q = max_q;
  r.thresholds = thresholds;
  r.fits = fits.size();
  for (const auto& f : fits) r.max_slope = std::max(r.max_slope, norm(f.b));
  const bool q_big = r.max_q > thresholds.tol_q();
  const bool s_big = r.max_slope > thresholds.tol_slope();
  r.verdict = (q_big && s_big) ? Verdict::modified : (!q_big && !s_big) ? Verdict::linear : Verdict::inconclusive;
  return r;
}

ClassifierReport classify_scattering(const std::vector<transport::DriftFit>& fits, const QProfile& q,
                                     const Thresholds& thresholds) {
  return classify_scattering(fits, q.max_abs_total(), thresholds);
}

double q_transform_value(const std::function<double(const Vec3&)>& q, const lorentz::LorentzTransform& a,
                         const Vec3& v) {
  const double v0 = kin::bracket(v);
  const FourVector img = a(FourVector{v0, v});
  return (img.t / v0) * q(img.x);
}

double q_transform_at(const QProfile& q, std::size_t species, const lorentz::LorentzTransform& a, const Vec3& v) {
  const auto& values = q.species.at(species).values;
  auto gridded = [&](const Vec3& u) {
    if (norm(u) > q.support_radius) return 0.0;
    const auto val = q.grid.interpolate(values, u);
    if (!val) {
      std::ostringstream os;
      os << "q_transform_law: image momentum (" << u[0] << ", " << u[1] << ", " << u[2]
         << ") is inside the recorded support but outside the sampled grid";
      throw DomainError("asymptotics", "q_transform_law", os.str());
    }
    return *val;
  };
  return q_transform_value(gridded, a, v);
}

QProfile q_transform_law(const QProfile& q, const lorentz::LorentzTransform& a) {
  QProfile out = q;
  out.cauchy = 0.0;
  out.noise_total = 0.0;
  for (std::size_t s = 0; s < q.species.size(); ++s) {
    out.species[s].noise = 0.0;
    for (std::size_t i = 0; i < q.grid.size(); ++i)
      out.species[s].values[i] = q_transform_at(q, s, a, q.grid.node(i));
  }
  // |(A⁻¹(u⁰, u))ˢ| <= cosh φ |u| + |sinh φ| u⁰ on the support ball.
  const double sp = q.support_radius;
  const double phi = (a.kind() == lorentz::TransformKind::rotation)  ? 0.0
                     : (a.kind() == lorentz::TransformKind::boost_x) ? a.rapidity()
                                                                     : lorentz::decompose(a).phi;
  out.support_radius = std::cosh(phi) * sp + std::fabs(std::sinh(phi)) * std::sqrt(1.0 + sp * sp);
  out.recompute_total();
  return out;
}

std::vector<transport::ParticleEnsemble> push_forward(const std::vector<transport::ParticleEnsemble>& ensembles,
                                                      const lorentz::LorentzTransform& a) {
  const lorentz::LorentzTransform inv = a.inverse();
  std::vector<transport::ParticleEnsemble> out;
  out.reserve(ensembles.size());
  for (const auto& ens : ensembles) {
    transport::ParticleEnsemble e;
    e.species = ens.species;
    e.time = ens.time;
    e.particles = ens.particles;
    for (auto& p : e.particles) p.v = inv(FourVector{kin::energy(p.v, ens.species.mass), p.v}).x;
    out.push_back(std::move(e));
  }
  return out;
}

BoostedExtractionReport verify_boosted_extraction(const std::vector<transport::ParticleEnsemble>& ensembles,
                                                  const lorentz::LorentzTransform& a,
                                                  const std::vector<double>& t_new, const VelocityGrid& grid) {
  BoostedExtractionReport rep;
  double k = 0.0;
  for (const auto& ens : ensembles) k = std::max(k, ens.support_k);
  rep.onset_time = lorentz::onset_time(a, k);
  const QProfile predicted = extract_q(push_forward(ensembles, a), grid);
  std::vector<double> times = t_new;
  std::sort(times.begin(), times.end());
  for (double t : times) {
    std::vector<transport::ParticleEnsemble> sliced;
    for (const auto& ens : ensembles) sliced.push_back(transport::boosted_slice(ens, a, t));
    const QProfile got = extract_q(sliced, grid);
    BoostedComparison c;
    c.t_new = t;
    for (std::size_t s = 0; s < got.species.size(); ++s)
      for (std::size_t i = 0; i < grid.size(); ++i) {
        c.max_abs_deviation =
            std::max(c.max_abs_deviation, std::fabs(got.species[s].values[i] - predicted.species[s].values[i]));
        c.max_abs_prediction = std::max(c.max_abs_prediction, std::fabs(predicted.species[s].values[i]));
      }
    c.relative_deviation = c.max_abs_prediction > 0.0 ? c.max_abs_deviation / c.max_abs_prediction
                                                      : c.max_abs_deviation;
    rep.slices.push_back(c);
  }
  if (!rep.slices.empty()) rep.final_relative_deviation = rep.slices.back().relative_deviation;
  return rep;
}

RestFrameReport rest_frame_pipeline(const QProfile& q, double threshold) {
  std::size_t best = 0;
  double best_abs = -1.0;
  for (std::size_t i = 0; i < q.total.size(); ++i)
    if (std::fabs(q.total[i]) > best_abs) {
      best_abs = std::fabs(q.total[i]);
      best = i;
    }
  if (!(best_abs > threshold)) {
    std::ostringstream os;
    os << "rest_frame_pipeline: no nonzero asymptotic charge (max |Q| = " << std::max(best_abs, 0.0)
       << " <= threshold " << threshold << ")";
    throw PreconditionError("asymptotics", "rest_frame_pipeline", os.str());
  }
  RestFrameReport r;
  r.v_star = q.grid.node(best);
  r.v0 = kin::bracket(r.v_star);
  r.q_at_v_star = q.total[best];
  r.transform = lorentz::boost_to_rest(FourVector{r.v0, r.v_star});
  double acc = 0.0;
  for (std::size_t s = 0; s < q.species.size(); ++s) {
    const auto& sp = q.species[s];
    acc += sp.charge * sp.mass * sp.mass * sp.mass * q_transform_at(q, s, r.transform, Vec3{});
  }
  r.q_transformed_at_origin = acc;
  const double expected = r.v0 * r.q_at_v_star;
  r.identity_error = std::fabs(acc - expected) / std::max(1.0, std::fabs(expected));
  if (r.identity_error > 1e-10) {
    std::ostringstream os;
    os << "rest_frame_pipeline: identity Q^A(0) = v0 Q(v) violated by " << r.identity_error;
    throw RuntimeFailure("asymptotics", "rest_frame_pipeline", os.str());
  }
  return r;
}

QProfile implied_q(const fields::SelfSimilarProfile& p, const VelocityGrid& grid) {
  QProfile q = sample_q(
      [&p](const Vec3& v) {
        if (norm(kin::hat(v, 1.0)) >= p.max_speed()) return 0.0;
        return fields::implied_charge(p, v);
      },
      grid, 1.0, 1.0, std::sqrt(3.0) * grid.radius);
  q.species[0].label = "implied";
  return q;
}

}  // namespace vmlab::asymptotics
