#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vmlab/fieldmodels.hpp"
#include "vmlab/lorentz.hpp"
#include "vmlab/quadrature.hpp"
#include "vmlab/transport.hpp"
#include "vmlab/vec3.hpp"

namespace vmlab::asymptotics {

/// n³ nodes on the cube [-radius, radius]³ in rescaled momentum v_α = v/m_α.
struct VelocityGrid {
  int n = 33;
  double radius = 2.0;

  double h() const { return 2.0 * radius / (n - 1); }
  Vec3 node(int i, int j, int k) const;
  std::size_t size() const { return static_cast<std::size_t>(n) * n * n; }
  std::size_t index(int i, int j, int k) const { return (static_cast<std::size_t>(i) * n + j) * n + k; }
  Vec3 node(std::size_t flat) const;
  /// Trilinear interpolation of nodal values; nullopt outside the cube.
  std::optional<double> interpolate(const std::vector<double>& values, const Vec3& v) const;
};

struct SpeciesQ {
  std::string label;
  double mass = 1.0;
  double charge = 1.0;
  /// Q∞^α at the grid nodes, as a function of v_α.
  std::vector<double> values;
  /// Largest per-node statistical error of the CIC estimate.
  double noise = 0.0;
  /// Weight of markers that fell outside the grid.
  double outside_weight = 0.0;
};

struct QProfile {
  VelocityGrid grid;
  std::vector<SpeciesQ> species;
  /// Q∞ = Σ e_α m_α³ Q∞^α.
  std::vector<double> total;
  double time = 0.0;
  /// max |total(t) − total(t_prev)| against the previous extraction, if any.
  double cauchy = 0.0;
  /// Largest |v_α| carrying weight; interpolation beyond it returns zero.
  double support_radius = 0.0;
  /// Per-node statistical error of `total`, maximized over nodes.
  double noise_total = 0.0;

  double max_abs_total() const;
  void recompute_total();
};

/// CIC binning of marker weights by v_α, normalized so that
/// ∫ Q∞^α dv_α = (total weight) / m_α³.
QProfile extract_q(const std::vector<transport::ParticleEnsemble>& ensembles, const VelocityGrid& grid);

/// Samples an analytic Q∞^α on the grid (single species).
QProfile sample_q(const std::function<double(const Vec3&)>& q, const VelocityGrid& grid, double mass = 1.0,
                  double charge = 1.0, double support_radius = -1.0);

/// Field samples at time t as a function of position.
using FieldSource = std::function<EMField(double, const Vec3&)>;

struct LProfile {
  VelocityGrid grid;
  std::vector<Vec3> ebb;
  std::vector<Vec3> bbb;
  std::vector<Vec3> lbb;
  std::vector<char> valid;
  std::size_t skipped = 0;
  double time = 0.0;
};

/// Samples t²E(t, tv̂) and t²B(t, tv̂) at the grid momenta (unit mass) and
/// forms 𝕃 = 𝔼 + v̂×𝔹. Nodes with |v̂| >= 1 − 1e-9 are skipped and counted.
LProfile extract_field_profile(const FieldSource& field, double t, const VelocityGrid& grid);

/// 𝔼, 𝔹 taken straight from a self-similar profile (no time sampling).
LProfile profile_from_model(const fields::SelfSimilarProfile& p, const VelocityGrid& grid);

struct GaussSides {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// Quadrature resolution for the two sides of the volume/surface identity.
struct GaussQuadrature {
  int radial = 48;
  int n_theta = 32;
  int n_phi = 64;
};

/// lhs = 4π ∫_{|x|<δ} <x̌>⁵ Q∞(x̌) dx,  rhs = ∮_{|ω|=δ} 𝔼(ω̌)·ω/|ω| dμ.
GaussSides gauss_identity(const std::function<double(const Vec3&)>& q_total,
                          const std::function<Vec3(const Vec3&)>& ebb, double delta,
                          const GaussQuadrature& quad = {});

/// Gridded version; throws DomainError if check(δ) leaves the Q support grid
/// or the LProfile grid.
GaussSides gauss_identity(const QProfile& q, const LProfile& l, double delta, const GaussQuadrature& quad = {});

/// Gridded Q against field samples at time t, with 𝔼(ω̌) ≈ t²E(t, tω).
GaussSides gauss_identity(const QProfile& q, const FieldSource& field, double t, double delta,
                          const GaussQuadrature& quad = {});

struct Witness {
  Vec3 v;
  double q = 0.0;
  Vec3 l;
  double score = 0.0;
};

/// Grid point maximizing |Q∞(v)|·|𝕃(v)·v̂| among points with |Q∞| > tol_q and
/// |𝕃| > tol_l.
std::optional<Witness> find_witness(const QProfile& q, const LProfile& l, double tol_q = 1e-12,
                                    double tol_l = 1e-12);

enum class Verdict { linear, modified, inconclusive };
const char* to_string(Verdict v);

struct Thresholds {
  double noise_q = 0.0;
  double noise_slope = 0.0;
  double multiplier = 5.0;
  double min_noise_q = 1e-12;
  double min_noise_slope = 1e-12;

  double tol_q() const;
  double tol_slope() const;
};

struct ClassifierReport {
  double max_q = 0.0;
  double max_slope = 0.0;
  Thresholds thresholds;
  Verdict verdict = Verdict::inconclusive;
  std::size_t fits = 0;
};

ClassifierReport classify_scattering(const std::vector<transport::DriftFit>& fits, double max_q,
                                     const Thresholds& thresholds);
ClassifierReport classify_scattering(const std::vector<transport::DriftFit>& fits, const QProfile& q,
                                     const Thresholds& thresholds);

/// Pointwise law Q∞^{α,A}(v) = (A⁰(v⁰,v)/v⁰) Q∞^α(Aˢ(v⁰,v)) (unit mass in the
/// rescaled variable), total recomputed. Images beyond the support radius give
/// 0; images inside it but off the grid throw DomainError.
QProfile q_transform_law(const QProfile& q, const lorentz::LorentzTransform& a);

/// The law for an analytic Q∞^α of the rescaled momentum.
double q_transform_value(const std::function<double(const Vec3&)>& q, const lorentz::LorentzTransform& a,
                         const Vec3& v);

/// Evaluates the law for one species at one momentum.
double q_transform_at(const QProfile& q, std::size_t species, const lorentz::LorentzTransform& a, const Vec3& v);

/// Markers moved by u ↦ (A⁻¹(u⁰, u))ˢ with their weights: the particle form of
/// the transformation law.
std::vector<transport::ParticleEnsemble> push_forward(const std::vector<transport::ParticleEnsemble>& ensembles,
                                                      const lorentz::LorentzTransform& a);

struct BoostedComparison {
  double t_new = 0.0;
  double max_abs_deviation = 0.0;
  double max_abs_prediction = 0.0;
  double relative_deviation = 0.0;
};

struct BoostedExtractionReport {
  double onset_time = 0.0;
  std::vector<BoostedComparison> slices;
  /// Deviation at the largest boosted time.
  double final_relative_deviation = 0.0;
};

/// Extracts Q from boosted_slice at each t_new and compares it against the
/// law applied (as a push-forward) to the source markers at their final time.
BoostedExtractionReport verify_boosted_extraction(const std::vector<transport::ParticleEnsemble>& ensembles,
                                                  const lorentz::LorentzTransform& a,
                                                  const std::vector<double>& t_new, const VelocityGrid& grid);

struct RestFrameReport {
  Vec3 v_star;
  double v0 = 0.0;
  double q_at_v_star = 0.0;
  double q_transformed_at_origin = 0.0;
  double identity_error = 0.0;
  lorentz::LorentzTransform transform;
};

/// Boosts to the rest frame of v* = argmax |Q∞| and checks
/// Q∞^A(0) = v*⁰ Q∞(v*) to 1e-10. Throws PreconditionError if max |Q∞| <= threshold.
RestFrameReport rest_frame_pipeline(const QProfile& q, double threshold = 1e-12);

/// Q∞ implied by Gauss's law on a self-similar profile, sampled on the grid.
QProfile implied_q(const fields::SelfSimilarProfile& p, const VelocityGrid& grid);

}  // namespace vmlab::asymptotics
