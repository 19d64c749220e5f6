#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "vmlab/faraday.hpp"
#include "vmlab/transport.hpp"
#include "vmlab/vec3.hpp"

namespace vmlab::maxwell {

/// Cubic box [-half_width, half_width]³ split into n cells per side.
struct GridSpec {
  int n = 32;
  double half_width = 1.0;

  double dx() const { return 2.0 * half_width / n; }
  double lo() const { return -half_width; }
  /// Largest stable time step of the Yee scheme, dx/√3.
  double dt_max() const;
};

/// Scalar array on (n+1)³ points; staggered components leave their last
/// slot along the staggered axis unused.
class Array3 {
 public:
  Array3() = default;
  explicit Array3(int n) : n1_(n + 1), data_(static_cast<std::size_t>(n + 1) * (n + 1) * (n + 1), 0.0) {}

  double& operator()(int i, int j, int k) { return data_[idx(i, j, k)]; }
  double operator()(int i, int j, int k) const { return data_[idx(i, j, k)]; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  int extent() const { return n1_; }
  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  double max_abs() const;

 private:
  std::size_t idx(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * n1_ + j) * n1_ + k;
  }
  int n1_ = 0;
  std::vector<double> data_;
};

/// Yee-staggered fields. With node (i, j, k) at lo + (i, j, k) dx:
///   Ex(i+½, j, k)  Ey(i, j+½, k)  Ez(i, j, k+½)
///   Bx(i, j+½, k+½)  By(i+½, j, k+½)  Bz(i+½, j+½, k)
/// each stored at index (i, j, k).
struct FieldGrid {
  GridSpec spec;
  std::array<Array3, 3> e;
  std::array<Array3, 3> b;
  double time = 0.0;

  explicit FieldGrid(GridSpec s = {});
  /// Trilinear gather of (E, B) at a physical point; zero outside the box.
  EMField sample(const Vec3& x) const;
};

/// ρ at nodes, j on the E locations.
struct SourceGrid {
  Array3 rho;
  std::array<Array3, 3> j;

  explicit SourceGrid(int n = 0);
  void clear();
  SourceGrid& operator+=(const SourceGrid& o);
};

enum class Deposition { esirkepov, naive };

/// CIC charge deposition ρ = Σ e_α w / dx³. Throws DomainError for particles
/// whose shape leaves the interior nodes.
void deposit_charge(const transport::ParticleEnsemble& ens, const GridSpec& spec, SourceGrid& out);

/// Current of the motion x_old → x_new over dt. The Esirkepov scheme makes
/// (ρ_new − ρ_old)/dt + ∇·j = 0 hold exactly; `naive` is a non-conserving
/// negative control (CIC-weighted v̂ at the midpoint).
void deposit_current(const transport::ParticleEnsemble& ens, const std::vector<Vec3>& x_old, double dt,
                     const GridSpec& spec, Deposition scheme, SourceGrid& out);

/// ρ of all ensembles (current zero). Each species goes through its own
/// buffer before the fixed-order sum.
SourceGrid deposit(const std::vector<transport::ParticleEnsemble>& ensembles, const GridSpec& spec);

/// B half step, E full step, B half step. Tangential E on the box boundary
/// stays zero. Throws RuntimeFailure if the field norm jumps by more than 10×
/// beyond what the source can drive, or becomes non-finite.
void field_step(FieldGrid& grid, const SourceGrid& src, double dt);

/// max over interior nodes of |∇·E − 4πρ|.
double gauss_residual(const FieldGrid& grid, const SourceGrid& src);

/// max |∇·B| dx / max(|E|, |B|) over cells (0 for a zero field).
double div_b_relative(const FieldGrid& grid);

/// Solves −Δφ = 4πρ on the smallest node sub-box holding ρ plus `margin`
/// nodes (zero-flux boundary), then sets E = −∇φ there and 0 elsewhere, so E
/// has compact support. Throws PreconditionError for non-neutral charge and
/// RuntimeFailure if CG misses the residual target.
FieldGrid init_constrained(const std::vector<transport::ParticleEnsemble>& ensembles, const GridSpec& spec,
                           int margin = 4, double tol = 1e-12);

/// max over nodes of (t+|x|+2k)|t−|x|+2k| |(E, B)| with node-averaged fields.
double decay_monitor(const FieldGrid& grid, double support_k);

/// (1/8π) Σ (|E|² + |B|²) dx³.
double field_energy(const FieldGrid& grid);
/// Σ w v⁰_α over an ensemble.
double particle_energy(const transport::ParticleEnsemble& ens);

struct MonitorRow {
  double time = 0.0;
  double gauss_residual = 0.0;
  double div_b = 0.0;
  double energy = 0.0;
  double decay = 0.0;
};

struct PicOptions {
  GridSpec grid;
  double dt = 0.0;  // 0 → 0.9 dt_max
  double t_final = 50.0;
  double support_k = 1.0;
  Deposition deposition = Deposition::esirkepov;
  /// Number of tracked particles per species (evenly strided).
  std::size_t tracked_per_species = 32;
  /// Record a worldline sample every this many steps after t = 10, plus all
  /// steps before.
  int sample_every = 1;
  int monitor_every = 1;
  /// Called once after the first step reaching each of these times (momenta
  /// are then half a step behind positions).
  std::vector<double> snapshot_times;
  std::function<void(const std::vector<transport::ParticleEnsemble>&, const FieldGrid&)> on_snapshot;
};

struct PicResult {
  std::vector<transport::ParticleEnsemble> ensembles;
  FieldGrid field;
  std::vector<MonitorRow> monitors;
  double initial_gauss_residual = 0.0;
  std::size_t steps = 0;
};

/// Self-consistent run: constrained initial field, staggered Boris particles
/// (x at integer steps, v at half steps), Esirkepov current, Yee update.
PicResult run_pic(std::vector<transport::ParticleEnsemble> ensembles, const PicOptions& opts);

}  // namespace vmlab::maxwell
