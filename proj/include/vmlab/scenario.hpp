#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vmlab/asymptotics.hpp"
#include "vmlab/fieldmodels.hpp"
#include "vmlab/maxwell.hpp"
#include "vmlab/transport.hpp"

namespace vmlab::scenario {

using Json = nlohmann::ordered_json;

/// Version string embedded in every report.
const char* version();

enum class VelocityProfile { ball, shell };

struct SpeciesConfig {
  std::string label;
  double mass = 1.0;
  double charge = 1.0;
  std::size_t count = 0;
  Vec3 x_center;
  double x_radius = 1.0;
  Vec3 v_center;
  double v_radius = 1.0;
  double v_inner = 0.0;
  VelocityProfile v_profile = VelocityProfile::ball;
  /// Total marker weight.
  double amplitude = 1.0;
  /// Copy markers of this species (same x, v, w) instead of sampling.
  std::string mirror_of;
};

enum class FieldMode { prescribed, self_consistent };

struct ProfileConfig {
  fields::ProfileKind kind = fields::ProfileKind::zero;
  double beta_max = 1.0;
  double t_on = 1.0;
  double a_radial = 0.0;
  Vec3 e_uniform;
  double q = 0.0;
  /// Support edge speed of the coulomb profile.
  double delta = 0.5;
  Vec3 omega;
};

struct SamplingConfig {
  double linear_dt = 0.5;
  double t_switch = 10.0;
  double ratio = 1.05;
};

struct IntegratorConfig {
  transport::IntegratorKind kind = transport::IntegratorKind::adaptive_rk78;
  double rtol = 1e-12;
  double atol = 1e-12;
  double dt = 1e-2;
  double t_final = 1e8;
  SamplingConfig sampling;
};

struct GridConfig {
  int cells = 64;
  double half_width = 0.0;  // 0 → t_final + 2k
  double cfl = 0.9;
  maxwell::Deposition deposition = maxwell::Deposition::esirkepov;
  std::size_t tracked_per_species = 32;
  int sample_every = 1;
  int monitor_every = 1;
};

struct ExtractionConfig {
  std::vector<double> times;
  int grid_n = 33;
  double grid_radius = 2.0;
  double window_lo = 1e3;
  double window_hi = 1e6;
  /// Particles per species entering the drift fits (0 = all tracked).
  std::size_t drift_sample = 0;
  std::vector<double> gauss_deltas;
};

struct BoostConfig {
  double phi = 0.6;
  Vec3 rotation_axis{{0.0, 0.0, 1.0}};
  double rotation_angle = 0.0;
  /// Boosted-frame times; empty → chosen from the stored horizon.
  std::vector<double> slices;
};

struct ClassifierConfig {
  double noise_multiplier = 5.0;
  double min_noise_q = 1e-12;
  double min_noise_slope = 1e-12;
};

struct Config {
  std::string name;
  std::uint64_t seed = 1;
  int workers = 1;
  double support_k = 1.0;
  std::vector<SpeciesConfig> species;
  FieldMode mode = FieldMode::prescribed;
  ProfileConfig profile;
  IntegratorConfig integrator;
  GridConfig grid;
  ExtractionConfig extraction;
  BoostConfig boost;
  ClassifierConfig classifier;
  std::string output_dir;
};

/// Parses and validates. Unknown keys and every violated invariant are
/// collected into one ValidationError.
Config parse_config(const Json& j);
Config load_config(const std::filesystem::path& path);
/// Fully resolved configuration (defaults filled in).
Json to_json(const Config& c);

/// Builds the initial ensembles (deterministic in the seed).
std::vector<transport::ParticleEnsemble> build_ensembles(const Config& c);

/// The prescribed field of a configuration.
std::shared_ptr<const fields::FieldModel> build_field(const Config& c);
/// Self-similar profile of a configuration (coulomb profiles resolved).
fields::SelfSimilarProfile build_profile(const Config& c);

/// Artifact directory: $VMLAB_OUTPUT_ROOT/<output_dir or name> when the
/// variable is set, else output_dir (default runs/<name>).
std::filesystem::path artifact_dir(const Config& c);

struct RunResult {
  std::filesystem::path dir;
  Json report;
};

/// Executes the configured pipeline and writes artifacts plus report.json.
RunResult run_scenario(const Config& c);
RunResult run_scenario(const std::filesystem::path& config_path);

/// Boosted slices, boosted Q extraction and the comparison report for a
/// stored run (boost_report.json).
RunResult boost_rerun(const std::filesystem::path& dir, double phi);

/// The stored report of a run.
Json report(const std::filesystem::path& dir);

/// Deterministic serialization used for every report file.
std::string dump(const Json& j);

}  // namespace vmlab::scenario
