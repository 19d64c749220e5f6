#include "vmlab/maxwell.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "vmlab/error.hpp"
#include "vmlab/kinematics.hpp"

namespace vmlab::maxwell {
namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

// Trilinear interpolation of `a` at fractional index p, where the valid index
// range along each axis is [0, top[d]]. Points outside contribute zero.
double interp(const Array3& a, const Vec3& p, const std::array<int, 3>& top) {
  std::array<int, 3> i0{};
  std::array<double, 3> f{};
  for (std::size_t d = 0; d < 3; ++d) {
    const double fl = std::floor(p[d]);
    if (fl < 0.0 || fl + 1.0 > top[d]) {
      if (p[d] == static_cast<double>(top[d])) {
        i0[d] = top[d] - 1;
        f[d] = 1.0;
        continue;
      }
      return 0.0;
    }
    i0[d] = static_cast<int>(fl);
    f[d] = p[d] - fl;
  }
  double sum = 0.0;
  for (int a0 = 0; a0 < 2; ++a0)
    for (int a1 = 0; a1 < 2; ++a1)
      for (int a2 = 0; a2 < 2; ++a2) {
        const double w = (a0 ? f[0] : 1.0 - f[0]) * (a1 ? f[1] : 1.0 - f[1]) * (a2 ? f[2] : 1.0 - f[2]);
        if (w != 0.0) sum += w * a(i0[0] + a0, i0[1] + a1, i0[2] + a2);
      }
  return sum;
}

Vec3 to_node(const Vec3& x, const GridSpec& s) { return (x - Vec3{{s.lo(), s.lo(), s.lo()}}) / s.dx(); }

void require_interior(int lo, int hi, int n, const char* op) {
  if (lo < 1 || hi > n - 1) {
    throw DomainError("maxwell", op, "particle shape leaves the grid interior; enlarge the box");
  }
}

// Linear (CIC) shape weights on nodes i0, i0+1, i0+2.
std::array<double, 3> shape3(double p, int i0) {
  std::array<double, 3> s{};
  for (int a = 0; a < 3; ++a) s[a] = std::max(0.0, 1.0 - std::fabs(p - (i0 + a)));
  return s;
}

double field_max(const FieldGrid& g) {
  double m = 0.0;
  for (const auto& c : g.e) m = std::max(m, c.max_abs());
  for (const auto& c : g.b) m = std::max(m, c.max_abs());
  return m;
}

void curl_e_into_b(FieldGrid& g, double h) {
  const int n = g.spec.n;
  const double c = h / g.spec.dx();
  auto& [ex, ey, ez] = g.e;
  auto& [bx, by, bz] = g.b;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        bx(i, j, k) -= c * ((ez(i, j + 1, k) - ez(i, j, k)) - (ey(i, j, k + 1) - ey(i, j, k)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= n; ++j)
      for (int k = 0; k < n; ++k)
        by(i, j, k) -= c * ((ex(i, j, k + 1) - ex(i, j, k)) - (ez(i + 1, j, k) - ez(i, j, k)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k <= n; ++k)
        bz(i, j, k) -= c * ((ey(i + 1, j, k) - ey(i, j, k)) - (ex(i, j + 1, k) - ex(i, j, k)));
}

void curl_b_into_e(FieldGrid& g, const SourceGrid& src, double dt) {
  const int n = g.spec.n;
  const double c = dt / g.spec.dx();
  const double s = kFourPi * dt;
  auto& [ex, ey, ez] = g.e;
  const auto& [bx, by, bz] = g.b;
  const auto& [jx, jy, jz] = src.j;
  for (int i = 0; i < n; ++i)
    for (int j = 1; j < n; ++j)
      for (int k = 1; k < n; ++k)
        ex(i, j, k) += c * ((bz(i, j, k) - bz(i, j - 1, k)) - (by(i, j, k) - by(i, j, k - 1))) - s * jx(i, j, k);
  for (int i = 1; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 1; k < n; ++k)
        ey(i, j, k) += c * ((bx(i, j, k) - bx(i, j, k - 1)) - (bz(i, j, k) - bz(i - 1, j, k))) - s * jy(i, j, k);
  for (int i = 1; i < n; ++i)
    for (int j = 1; j < n; ++j)
      for (int k = 0; k < n; ++k)
        ez(i, j, k) += c * ((by(i, j, k) - by(i - 1, j, k)) - (bx(i, j, k) - bx(i, j - 1, k))) - s * jz(i, j, k);
}

}  // namespace

double GridSpec::dt_max() const { return dx() / std::sqrt(3.0); }

double Array3::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::fabs(v));
  return m;
}

FieldGrid::FieldGrid(GridSpec s) : spec(s) {
  if (s.n < 4 || !(s.half_width > 0.0))
    throw ValidationError("maxwell", "FieldGrid", "grid needs at least 4 cells and a positive half width");
  for (auto& c : e) c = Array3(s.n);
  for (auto& c : b) c = Array3(s.n);
}

EMField FieldGrid::sample(const Vec3& x) const {
  const Vec3 p = to_node(x, spec);
  const int n = spec.n;
  const Vec3 hx{{0.5, 0.0, 0.0}}, hy{{0.0, 0.5, 0.0}}, hz{{0.0, 0.0, 0.5}};
  EMField em;
  em.e[0] = interp(e[0], p - hx, {n - 1, n, n});
  em.e[1] = interp(e[1], p - hy, {n, n - 1, n});
  em.e[2] = interp(e[2], p - hz, {n, n, n - 1});
  em.b[0] = interp(b[0], p - hy - hz, {n, n - 1, n - 1});
  em.b[1] = interp(b[1], p - hx - hz, {n - 1, n, n - 1});
  em.b[2] = interp(b[2], p - hx - hy, {n - 1, n - 1, n});
  return em;
}

SourceGrid::SourceGrid(int n) : rho(n) {
  for (auto& c : j) c = Array3(n);
}

void SourceGrid::clear() {
  rho.fill(0.0);
  for (auto& c : j) c.fill(0.0);
}

SourceGrid& SourceGrid::operator+=(const SourceGrid& o) {
  auto add = [](Array3& a, const Array3& b) {
    for (std::size_t i = 0; i < a.data().size(); ++i) a.data()[i] += b.data()[i];
  };
  add(rho, o.rho);
  for (std::size_t d = 0; d < 3; ++d) add(j[d], o.j[d]);
  return *this;
}

void deposit_charge(const transport::ParticleEnsemble& ens, const GridSpec& spec, SourceGrid& out) {
  const double inv_vol = 1.0 / std::pow(spec.dx(), 3);
  for (const auto& p : ens.particles) {
    const Vec3 q = to_node(p.x, spec);
    std::array<int, 3> i0{};
    for (std::size_t d = 0; d < 3; ++d) {
      i0[d] = static_cast<int>(std::floor(q[d]));
      require_interior(i0[d], i0[d] + 1, spec.n, "deposit");
    }
    const double c = ens.species.charge * p.w * inv_vol;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int d = 0; d < 2; ++d) {
          const double w = (a ? q[0] - i0[0] : 1.0 - (q[0] - i0[0])) * (b ? q[1] - i0[1] : 1.0 - (q[1] - i0[1])) *
                           (d ? q[2] - i0[2] : 1.0 - (q[2] - i0[2]));
          out.rho(i0[0] + a, i0[1] + b, i0[2] + d) += c * w;
        }
  }
}

void deposit_current(const transport::ParticleEnsemble& ens, const std::vector<Vec3>& x_old, double dt,
                     const GridSpec& spec, Deposition scheme, SourceGrid& out) {
  const double dx = spec.dx();
  const double inv_vol = 1.0 / (dx * dx * dx);
  for (std::size_t pi = 0; pi < ens.particles.size(); ++pi) {
    const auto& p = ens.particles[pi];
    const double qw = ens.species.charge * p.w;
    const Vec3 po = to_node(x_old[pi], spec);
    const Vec3 pn = to_node(p.x, spec);
    if (scheme == Deposition::naive) {
      const Vec3 vel = (p.x - x_old[pi]) / dt;
      const Vec3 mid = 0.5 * (po + pn);
      for (std::size_t d = 0; d < 3; ++d) {
        Vec3 q = mid;
        q[d] -= 0.5;
        std::array<int, 3> i0{};
        for (std::size_t e = 0; e < 3; ++e) i0[e] = static_cast<int>(std::floor(q[e]));
        require_interior(std::min({i0[0], i0[1], i0[2]}), std::max({i0[0], i0[1], i0[2]}) + 1, spec.n, "deposit");
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c) {
              const double w = (a ? q[0] - i0[0] : 1.0 - (q[0] - i0[0])) *
                               (b ? q[1] - i0[1] : 1.0 - (q[1] - i0[1])) *
                               (c ? q[2] - i0[2] : 1.0 - (q[2] - i0[2]));
              out.j[d](i0[0] + a, i0[1] + b, i0[2] + c) += qw * vel[d] * inv_vol * w;
            }
      }
      continue;
    }
    std::array<int, 3> i0{};
    std::array<std::array<double, 3>, 3> s0{}, ds{};
    for (std::size_t d = 0; d < 3; ++d) {
      i0[d] = static_cast<int>(std::min(std::floor(po[d]), std::floor(pn[d])));
      require_interior(i0[d], i0[d] + 2, spec.n, "deposit");
      s0[d] = shape3(po[d], i0[d]);
      const auto s1 = shape3(pn[d], i0[d]);
      for (int a = 0; a < 3; ++a) ds[d][a] = s1[a] - s0[d][a];
    }
    const double fac = -qw * inv_vol * dx / dt;
    // Esirkepov weights: W_d(a,b,c) pairs the shape change along d with the
    // time-averaged shape across the other two axes.
    auto weight = [&](std::size_t d, int a, int b, int c) {
      const std::size_t d1 = (d + 1) % 3, d2 = (d + 2) % 3;
      return ds[d][a] * (s0[d1][b] * s0[d2][c] + 0.5 * ds[d1][b] * s0[d2][c] + 0.5 * s0[d1][b] * ds[d2][c] +
                         ds[d1][b] * ds[d2][c] / 3.0);
    };
    for (std::size_t d = 0; d < 3; ++d) {
      const std::size_t d1 = (d + 1) % 3, d2 = (d + 2) % 3;
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c) {
          double acc = 0.0;
          for (int a = 0; a < 2; ++a) {
            acc += weight(d, a, b, c);
            if (acc == 0.0) continue;
            std::array<int, 3> idx{};
            idx[d] = i0[d] + a;
            idx[d1] = i0[d1] + b;
            idx[d2] = i0[d2] + c;
            out.j[d](idx[0], idx[1], idx[2]) += fac * acc;
          }
        }
    }
  }
}

SourceGrid deposit(const std::vector<transport::ParticleEnsemble>& ensembles, const GridSpec& spec) {
  SourceGrid total(spec.n);
  for (const auto& ens : ensembles) {
    SourceGrid one(spec.n);
    deposit_charge(ens, spec, one);
    total += one;
  }
  return total;
}

void field_step(FieldGrid& grid, const SourceGrid& src, double dt) {
  if (!(dt > 0.0) || dt >= grid.spec.dt_max()) {
    std::ostringstream os;
    os << "field_step: dt = " << dt << " violates the stability bound dx/sqrt(3) = " << grid.spec.dt_max();
    throw PreconditionError("maxwell", "field_step", os.str());
  }
  const double before = field_max(grid);
  double jmax = 0.0;
  for (const auto& c : src.j) jmax = std::max(jmax, c.max_abs());
  curl_e_into_b(grid, 0.5 * dt);
  curl_b_into_e(grid, src, dt);
  curl_e_into_b(grid, 0.5 * dt);
  grid.time += dt;
  const double after = field_max(grid);
  if (!std::isfinite(after) || after > 10.0 * before + 10.0 * kFourPi * dt * jmax + 1e-300) {
    std::ostringstream os;
    os << "field_step: field norm jumped from " << before << " to " << after << " in one step";
    throw RuntimeFailure("maxwell", "field_step", os.str());
  }
}

double gauss_residual(const FieldGrid& grid, const SourceGrid& src) {
  const int n = grid.spec.n;
  const double inv_dx = 1.0 / grid.spec.dx();
  const auto& [ex, ey, ez] = grid.e;
  double r = 0.0;
  for (int i = 1; i < n; ++i)
    for (int j = 1; j < n; ++j)
      for (int k = 1; k < n; ++k) {
        const double div = (ex(i, j, k) - ex(i - 1, j, k) + ey(i, j, k) - ey(i, j - 1, k) + ez(i, j, k) -
                            ez(i, j, k - 1)) *
                           inv_dx;
        r = std::max(r, std::fabs(div - kFourPi * src.rho(i, j, k)));
      }
  return r;
}

double div_b_relative(const FieldGrid& grid) {
  const int n = grid.spec.n;
  const auto& [bx, by, bz] = grid.b;
  double d = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        d = std::max(d, std::fabs(bx(i + 1, j, k) - bx(i, j, k) + by(i, j + 1, k) - by(i, j, k) +
                                  bz(i, j, k + 1) - bz(i, j, k)));
  // E and B share units; the curl roundoff scales with the larger of the two.
  double fmax = 0.0;
  for (const auto& c : grid.b) fmax = std::max(fmax, c.max_abs());
  for (const auto& c : grid.e) fmax = std::max(fmax, c.max_abs());
  return fmax > 0.0 ? d / fmax : 0.0;
}

FieldGrid init_constrained(const std::vector<transport::ParticleEnsemble>& ensembles, const GridSpec& spec,
                           int margin, double tol) {
  FieldGrid grid(spec);
  const SourceGrid src = deposit(ensembles, spec);
  const int n = spec.n;
  double total = 0.0, total_abs = 0.0;
  std::array<int, 3> lo{n, n, n}, hi{0, 0, 0};
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j)
      for (int k = 0; k <= n; ++k) {
        const double r = src.rho(i, j, k);
        if (r == 0.0) continue;
        total += r;
        total_abs += std::fabs(r);
        lo = {std::min(lo[0], i), std::min(lo[1], j), std::min(lo[2], k)};
        hi = {std::max(hi[0], i), std::max(hi[1], j), std::max(hi[2], k)};
      }
  if (total_abs == 0.0) return grid;
  if (std::fabs(total) > 1e-10 * total_abs) {
    std::ostringstream os;
    os << "init_constrained: total charge " << total * std::pow(spec.dx(), 3)
       << " is not zero; a compactly supported initial field needs neutral data";
    throw PreconditionError("maxwell", "init_constrained", os.str());
  }
  for (std::size_t d = 0; d < 3; ++d) {
    lo[d] = std::max(1, lo[d] - margin);
    hi[d] = std::min(n - 1, hi[d] + margin);
  }
  const int mx = hi[0] - lo[0] + 1, my = hi[1] - lo[1] + 1, mz = hi[2] - lo[2] + 1;
  const auto m = static_cast<std::size_t>(mx) * my * mz;
  auto id = [&](int i, int j, int k) { return (static_cast<std::size_t>(i) * my + j) * mz + k; };

  // Zero-flux graph Laplacian scaled by dx²: (Aφ)_p = Σ_nb (φ_p − φ_nb).
  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    for (int i = 0; i < mx; ++i)
      for (int j = 0; j < my; ++j)
        for (int k = 0; k < mz; ++k) {
          const double c = x[id(i, j, k)];
          double acc = 0.0;
          if (i > 0) acc += c - x[id(i - 1, j, k)];
          if (i + 1 < mx) acc += c - x[id(i + 1, j, k)];
          if (j > 0) acc += c - x[id(i, j - 1, k)];
          if (j + 1 < my) acc += c - x[id(i, j + 1, k)];
          if (k > 0) acc += c - x[id(i, j, k - 1)];
          if (k + 1 < mz) acc += c - x[id(i, j, k + 1)];
          y[id(i, j, k)] = acc;
        }
  };
  const double dx2 = spec.dx() * spec.dx();
  std::vector<double> rhs(m), phi(m, 0.0), r(m), p(m), ap(m);
  double mean = 0.0;
  for (int i = 0; i < mx; ++i)
    for (int j = 0; j < my; ++j)
      for (int k = 0; k < mz; ++k) {
        rhs[id(i, j, k)] = kFourPi * src.rho(lo[0] + i, lo[1] + j, lo[2] + k) * dx2;
        mean += rhs[id(i, j, k)];
      }
  mean /= static_cast<double>(m);
  double bmax = 0.0;
  for (double& v : rhs) {
    v -= mean;
    bmax = std::max(bmax, std::fabs(v));
  }
  const double target = tol * std::max(bmax, 1e-300);
  auto project = [&](std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    s /= static_cast<double>(m);
    for (double& x : v) x -= s;
  };
  auto resid_max = [&] {
    apply(phi, ap);
    double e = 0.0;
    for (std::size_t q = 0; q < m; ++q) {
      r[q] = rhs[q] - ap[q];
      e = std::max(e, std::fabs(r[q]));
    }
    project(r);
    return e;
  };
  const std::size_t max_iter = 20 * m + 1000;
  std::size_t it = 0;
  double err = resid_max();
  while (err > target && it < max_iter) {
    // CG restarted from the true residual, which keeps roundoff from stalling it.
    p = r;
    double rr = 0.0;
    for (double x : r) rr += x * x;
    for (std::size_t inner = 0; inner < 2000 && it < max_iter; ++inner, ++it) {
      apply(p, ap);
      double pap = 0.0;
      for (std::size_t q = 0; q < m; ++q) pap += p[q] * ap[q];
      if (!(pap > 0.0)) break;
      const double alpha = rr / pap;
      double rmax = 0.0, rr_new = 0.0;
      for (std::size_t q = 0; q < m; ++q) {
        phi[q] += alpha * p[q];
        r[q] -= alpha * ap[q];
        rr_new += r[q] * r[q];
        rmax = std::max(rmax, std::fabs(r[q]));
      }
      if (rmax <= 0.1 * target) break;
      const double beta = rr_new / rr;
      rr = rr_new;
      for (std::size_t q = 0; q < m; ++q) p[q] = r[q] + beta * p[q];
    }
    project(phi);
    err = resid_max();
  }
  if (err > target) {
    std::ostringstream os;
    os << "init_constrained: CG stopped at residual " << err << " above target " << target;
    throw RuntimeFailure("maxwell", "init_constrained", os.str());
  }
  const double inv_dx = 1.0 / spec.dx();
  auto& [ex, ey, ez] = grid.e;
  for (int i = 0; i < mx; ++i)
    for (int j = 0; j < my; ++j)
      for (int k = 0; k < mz; ++k) {
        const double c = phi[id(i, j, k)];
        if (i + 1 < mx) ex(lo[0] + i, lo[1] + j, lo[2] + k) = -(phi[id(i + 1, j, k)] - c) * inv_dx;
        if (j + 1 < my) ey(lo[0] + i, lo[1] + j, lo[2] + k) = -(phi[id(i, j + 1, k)] - c) * inv_dx;
        if (k + 1 < mz) ez(lo[0] + i, lo[1] + j, lo[2] + k) = -(phi[id(i, j, k + 1)] - c) * inv_dx;
      }
  return grid;
}

double decay_monitor(const FieldGrid& grid, double support_k) {
  const int n = grid.spec.n;
  const double dx = grid.spec.dx();
  const double t = grid.time;
  double sup = 0.0;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j)
      for (int k = 0; k <= n; ++k) {
        const Vec3 x{{grid.spec.lo() + i * dx, grid.spec.lo() + j * dx, grid.spec.lo() + k * dx}};
        const EMField em = grid.sample(x);
        const double mag = std::sqrt(norm2(em.e) + norm2(em.b));
        if (mag == 0.0) continue;
        const double r = norm(x);
        sup = std::max(sup, (t + r + 2.0 * support_k) * std::fabs(t - r + 2.0 * support_k) * mag);
      }
  return sup;
}

double field_energy(const FieldGrid& grid) {
  double s = 0.0;
  for (const auto& c : grid.e)
    for (double v : c.data()) s += v * v;
  for (const auto& c : grid.b)
    for (double v : c.data()) s += v * v;
  return s * std::pow(grid.spec.dx(), 3) / (2.0 * kFourPi);
}

double particle_energy(const transport::ParticleEnsemble& ens) {
  double s = 0.0;
  for (const auto& p : ens.particles) s += p.w * kin::energy(p.v, ens.species.mass);
  return s;
}

PicResult run_pic(std::vector<transport::ParticleEnsemble> ensembles, const PicOptions& opts) {
  const GridSpec& spec = opts.grid;
  double dt = opts.dt > 0.0 ? opts.dt : 0.9 * spec.dt_max();
  if (dt >= spec.dt_max()) throw ValidationError("maxwell", "run_pic", "dt violates the stability bound");
  const auto steps = static_cast<std::size_t>(std::ceil(opts.t_final / dt - 1e-9));
  dt = opts.t_final / static_cast<double>(steps);

  PicResult res;
  res.field = init_constrained(ensembles, spec);
  res.initial_gauss_residual = gauss_residual(res.field, deposit(ensembles, spec));

  // Tracked subsample per species, evenly strided.
  for (auto& ens : ensembles) {
    ens.worldlines.clear();
    ens.worldline_ids.clear();
    const std::size_t np = ens.particles.size();
    const std::size_t want = std::min(np, opts.tracked_per_species);
    for (std::size_t q = 0; q < want; ++q) {
      const std::size_t pid = q * np / want;
      ens.worldline_ids.push_back(pid);
      ens.worldlines.push_back({transport::WorldlineSample{ens.time, ens.particles[pid].x, ens.particles[pid].v}});
    }
  }

  // Momenta go to the half step −dt/2.
  for (auto& ens : ensembles)
    for (auto& p : ens.particles) p.v = transport::boris_kick(p.v, ens.species, res.field.sample(p.x), -0.5 * dt);

  const double e0 = [&] {
    double e = field_energy(res.field);
    for (const auto& ens : ensembles) e += particle_energy(ens);
    return e;
  }();
  res.monitors.push_back(MonitorRow{0.0, res.initial_gauss_residual, div_b_relative(res.field), e0,
                                    decay_monitor(res.field, opts.support_k)});

  SourceGrid src(spec.n), one(spec.n);
  std::vector<Vec3> x_old;
  for (std::size_t step = 0; step < steps; ++step) {
    const double t = static_cast<double>(step) * dt;
    src.clear();
    for (auto& ens : ensembles) {
      x_old.resize(ens.particles.size());
      std::vector<Vec3> v_old(ens.particles.size());
      for (std::size_t q = 0; q < ens.particles.size(); ++q) {
        auto& p = ens.particles[q];
        x_old[q] = p.x;
        v_old[q] = p.v;
        p.v = transport::boris_kick(p.v, ens.species, res.field.sample(p.x), dt);
        p.x = p.x + dt * kin::hat(p.v, ens.species.mass);
      }
      const bool record = step > 0 && (t < 10.0 || step % static_cast<std::size_t>(std::max(1, opts.sample_every)) == 0);
      if (record) {
        for (std::size_t w = 0; w < ens.worldline_ids.size(); ++w) {
          const std::size_t pid = ens.worldline_ids[w];
          ens.worldlines[w].push_back(
              transport::WorldlineSample{t, x_old[pid], 0.5 * (v_old[pid] + ens.particles[pid].v)});
        }
      }
      one.clear();
      deposit_current(ens, x_old, dt, spec, opts.deposition, one);
      src += one;
    }
    field_step(res.field, src, dt);
    ++res.steps;

    if (opts.on_snapshot) {
      for (double ts : opts.snapshot_times)
        if (ts > t + 1e-12 * dt && ts <= res.field.time + 1e-12 * dt) {
          for (auto& ens : ensembles) ens.time = res.field.time;
          opts.on_snapshot(ensembles, res.field);
        }
    }
    const bool last = step + 1 == steps;
    if (last || (step + 1) % static_cast<std::size_t>(std::max(1, opts.monitor_every)) == 0) {
      MonitorRow row;
      row.time = res.field.time;
      row.gauss_residual = gauss_residual(res.field, deposit(ensembles, spec));
      row.div_b = div_b_relative(res.field);
      row.energy = field_energy(res.field);
      for (const auto& ens : ensembles) row.energy += particle_energy(ens);
      row.decay = decay_monitor(res.field, opts.support_k);
      res.monitors.push_back(row);
    }
  }

  // Synchronize momenta with positions at t_final.
  for (auto& ens : ensembles) {
    for (auto& p : ens.particles) p.v = transport::boris_kick(p.v, ens.species, res.field.sample(p.x), 0.5 * dt);
    ens.time = opts.t_final;
    for (std::size_t w = 0; w < ens.worldline_ids.size(); ++w) {
      const auto& p = ens.particles[ens.worldline_ids[w]];
      ens.worldlines[w].push_back(transport::WorldlineSample{ens.time, p.x, p.v});
    }
    for (const auto& p : ens.particles) ens.beta_recorded = std::max(ens.beta_recorded, norm(p.v));
    for (const auto& wl : ens.worldlines)
      for (std::size_t q = 0; q + 1 < wl.size(); ++q) {
        const double h = wl[q + 1].t - wl[q].t;
        ens.interp_error_bound = std::max(
            ens.interp_error_bound,
            h * norm(kin::hat(wl[q + 1].v, ens.species.mass) - kin::hat(wl[q].v, ens.species.mass)) / 8.0);
      }
  }
  res.ensembles = std::move(ensembles);
  return res;
}

}  // namespace vmlab::maxwell
