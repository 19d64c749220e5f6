#include "vmlab/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "vmlab/error.hpp"
#include "vmlab/io.hpp"
#include "vmlab/kinematics.hpp"

#ifndef VMLAB_VERSION
#define VMLAB_VERSION "0.0.0"
#endif

namespace vmlab::scenario {
namespace {

// ---------------------------------------------------------------------------
// Config reading

class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string where, std::vector<std::string>& errors)
      : j_(j), where_(std::move(where)), errors_(errors) {
    if (!j_.is_object()) {
      errors_.push_back(where_ + ": expected an object");
      ok_ = false;
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    if (!ok_) return;
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      errors_.push_back(path(key) + ": wrong type");
    }
  }

  void vec3(const char* key, Vec3& out) {
    std::vector<double> v;
    const bool present = has(key);
    get(key, v);
    if (!present) return;
    if (v.size() != 3) {
      errors_.push_back(path(key) + ": expected 3 numbers");
      return;
    }
    out = Vec3{{v[0], v[1], v[2]}};
  }

  bool has(const char* key) const { return ok_ && j_.contains(key) && !j_.at(key).is_null(); }

  const Json* child(const char* key) {
    if (!ok_) return nullptr;
    seen_.insert(key);
    auto it = j_.find(key);
    return (it == j_.end() || it->is_null()) ? nullptr : &*it;
  }

  std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

  void finish() {
    if (!ok_) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) errors_.push_back(path(it.key()) + ": unknown key");
  }

 private:
  const Json& j_;
  std::string where_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
  bool ok_ = true;
};

template <typename E>
void parse_enum(ObjectReader& r, const char* key, E& out, const std::vector<std::pair<std::string, E>>& table,
                std::vector<std::string>& errors) {
  std::string s;
  r.get(key, s);
  if (s.empty()) return;
  for (const auto& [name, value] : table)
    if (name == s) {
      out = value;
      return;
    }
  std::string allowed;
  for (const auto& [name, value] : table) allowed += (allowed.empty() ? "" : ", ") + name;
  errors.push_back(r.path(key) + ": '" + s + "' is not one of " + allowed);
}

const std::vector<std::pair<std::string, fields::ProfileKind>> kProfileKinds = {
    {"zero", fields::ProfileKind::zero}, {"linear", fields::ProfileKind::linear},
    {"coulomb", fields::ProfileKind::coulomb}};
const std::vector<std::pair<std::string, FieldMode>> kModes = {{"prescribed", FieldMode::prescribed},
                                                              {"self_consistent", FieldMode::self_consistent}};
const std::vector<std::pair<std::string, transport::IntegratorKind>> kIntegrators = {
    {"adaptive_rk78", transport::IntegratorKind::adaptive_rk78}, {"boris", transport::IntegratorKind::boris}};
const std::vector<std::pair<std::string, maxwell::Deposition>> kDepositions = {
    {"esirkepov", maxwell::Deposition::esirkepov}, {"naive", maxwell::Deposition::naive}};
const std::vector<std::pair<std::string, VelocityProfile>> kVelocityProfiles = {{"ball", VelocityProfile::ball},
                                                                               {"shell", VelocityProfile::shell}};

template <typename E>
std::string name_of(E v, const std::vector<std::pair<std::string, E>>& table) {
  for (const auto& [name, value] : table)
    if (value == v) return name;
  return "unknown";
}

Json vec_json(const Vec3& v) { return Json::array({v[0], v[1], v[2]}); }

void validate(const Config& c, std::vector<std::string>& err) {
  auto finite_pos = [](double x) { return std::isfinite(x) && x > 0.0; };
  if (c.name.empty()) err.push_back("name: must be non-empty");
  if (c.workers < 1) err.push_back("workers: must be >= 1");
  if (!finite_pos(c.support_k)) err.push_back("support_k: must be positive");
  if (c.species.empty()) err.push_back("species: at least one species is required");
  std::set<std::string> labels;
  double charge_sum = 0.0, charge_abs = 0.0;
  for (std::size_t i = 0; i < c.species.size(); ++i) {
    const auto& s = c.species[i];
    const std::string p = "species[" + std::to_string(i) + "]";
    if (s.label.empty()) err.push_back(p + ".label: must be non-empty");
    if (!labels.insert(s.label).second) err.push_back(p + ".label: duplicate label '" + s.label + "'");
    if (!finite_pos(s.mass)) err.push_back(p + ".mass: must be positive");
    if (!(std::isfinite(s.charge) && s.charge != 0.0)) err.push_back(p + ".charge: must be nonzero");
    if (!finite_pos(s.amplitude)) err.push_back(p + ".amplitude: must be positive");
    if (s.mirror_of.empty()) {
      if (s.count == 0) err.push_back(p + ".count: must be positive");
      if (!finite_pos(s.x_radius)) err.push_back(p + ".x_radius: must be positive");
      if (!finite_pos(s.v_radius)) err.push_back(p + ".v_radius: must be positive");
      if (norm(s.x_center) + s.x_radius > c.support_k * (1.0 + 1e-12))
        err.push_back(p + ".x_center/x_radius: position support leaves |x| <= support_k");
      if (norm(s.v_center) + s.v_radius > c.support_k * (1.0 + 1e-12))
        err.push_back(p + ".v_center/v_radius: momentum support leaves |v| <= support_k");
      if (s.v_profile == VelocityProfile::shell && !(s.v_inner >= 0.0 && s.v_inner < s.v_radius))
        err.push_back(p + ".v_inner: shell needs 0 <= v_inner < v_radius");
    } else {
      bool found = false;
      for (std::size_t k = 0; k < i; ++k) found = found || c.species[k].label == s.mirror_of;
      if (!found) err.push_back(p + ".mirror_of: '" + s.mirror_of + "' does not name an earlier species");
    }
    charge_sum += s.charge * s.amplitude;
    charge_abs += std::fabs(s.charge * s.amplitude);
  }
  if (c.mode == FieldMode::self_consistent && std::fabs(charge_sum) > 1e-12 * std::max(charge_abs, 1e-300))
    err.push_back("species: total charge sum(charge * amplitude) must vanish in self_consistent mode");

  const auto& pr = c.profile;
  if (!finite_pos(pr.t_on)) err.push_back("field.profile.t_on: must be positive");
  if (pr.kind == fields::ProfileKind::linear && !finite_pos(pr.beta_max))
    err.push_back("field.profile.beta_max: must be positive");
  if (pr.kind == fields::ProfileKind::coulomb && !(pr.delta > 0.0 && pr.delta <= 0.9))
    err.push_back("field.profile.delta: must lie in (0, 0.9]");

  const auto& in = c.integrator;
  if (!finite_pos(in.rtol) || !finite_pos(in.atol)) err.push_back("integrator.rtol/atol: must be positive");
  if (!finite_pos(in.dt)) err.push_back("integrator.dt: must be positive");
  if (!finite_pos(in.t_final)) err.push_back("integrator.t_final: must be positive");
  if (!finite_pos(in.sampling.linear_dt)) err.push_back("integrator.sampling.linear_dt: must be positive");
  if (!(in.sampling.ratio > 1.0)) err.push_back("integrator.sampling.ratio: must exceed 1");

  const auto& ex = c.extraction;
  if (ex.grid_n < 2) err.push_back("extraction.velocity_grid.n: must be >= 2");
  if (!finite_pos(ex.grid_radius)) err.push_back("extraction.velocity_grid.radius: must be positive");
  if (!(ex.window_lo >= 10.0)) err.push_back("extraction.drift_window: must start at t >= 10");
  if (!(ex.window_hi > ex.window_lo)) err.push_back("extraction.drift_window: must be increasing");
  if (ex.window_hi > in.t_final * (1.0 + 1e-12)) err.push_back("extraction.drift_window: ends after t_final");
  for (double t : ex.times)
    if (!(t > 0.0 && t <= in.t_final)) err.push_back("extraction.times: entries must lie in (0, t_final]");
  for (double d : ex.gauss_deltas)
    if (!(d > 0.0 && d < 1.0)) err.push_back("extraction.gauss_deltas: entries must lie in (0, 1)");

  if (c.mode == FieldMode::self_consistent) {
    if (c.grid.cells < 8) err.push_back("grid.cells: must be >= 8");
    if (!(c.grid.cfl > 0.0 && c.grid.cfl < 1.0)) err.push_back("grid.cfl: must lie in (0, 1)");
    if (c.grid.half_width < 0.0) err.push_back("grid.half_width: must be >= 0");
    if (c.grid.sample_every < 1 || c.grid.monitor_every < 1)
      err.push_back("grid.sample_every/monitor_every: must be >= 1");
  }
  if (!std::isfinite(c.boost.phi) || std::fabs(c.boost.phi) > 700.0) err.push_back("boost.phi: out of range");
  for (double t : c.boost.slices)
    if (!(t > 0.0)) err.push_back("boost.slices: entries must be positive");
  if (!finite_pos(c.classifier.noise_multiplier)) err.push_back("classifier.noise_multiplier: must be positive");
  if (c.classifier.min_noise_q < 0.0 || c.classifier.min_noise_slope < 0.0)
    err.push_back("classifier.min_noise_*: must be >= 0");
}

// ---------------------------------------------------------------------------
// Initial data

class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : rng_(seed) {}
  double operator()() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  double sym() { return 2.0 * (*this)() - 1.0; }

 private:
  std::mt19937_64 rng_;
};

Vec3 in_unit_ball(Uniform& u) {
  while (true) {
    const Vec3 p{{u.sym(), u.sym(), u.sym()}};
    if (norm2(p) < 1.0) return p;
  }
}

Vec3 on_unit_sphere(Uniform& u) {
  while (true) {
    const Vec3 p = in_unit_ball(u);
    const double r = norm(p);
    if (r > 1e-3) return p / r;
  }
}

double bump(double s) {
  if (s >= 1.0) return 0.0;
  const double w = 1.0 - s * s;
  return w * w * w;
}

std::string fmt_number(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

void write_json(const std::filesystem::path& p, const Json& j) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw RuntimeFailure("cli", "run_scenario", "cannot write " + p.string());
  out << dump(j) << '\n';
}

Json read_json(const std::filesystem::path& p, const char* op) {
  std::ifstream in(p);
  if (!in) throw PreconditionError("cli", op, "cannot read " + p.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("cli", op, p.string() + ": " + e.what());
  }
}

transport::IntegratorOptions integrator_options(const Config& c) {
  transport::IntegratorOptions o;
  o.kind = c.integrator.kind;
  o.rtol = c.integrator.rtol;
  o.atol = c.integrator.atol;
  o.dt = c.integrator.dt;
  o.workers = c.workers;
  return o;
}

transport::SamplingPolicy sampling_policy(const Config& c) {
  transport::SamplingPolicy s;
  s.linear_dt = c.integrator.sampling.linear_dt;
  s.t_switch = c.integrator.sampling.t_switch;
  s.ratio = c.integrator.sampling.ratio;
  return s;
}

asymptotics::VelocityGrid velocity_grid(const Config& c) {
  return asymptotics::VelocityGrid{c.extraction.grid_n, c.extraction.grid_radius};
}

Json fit_json(const transport::DriftFit& f) {
  return Json{{"b", vec_json(f.b)}, {"a", vec_json(f.a)}, {"residual", f.residual}, {"samples", f.samples}};
}

struct FitSet {
  std::vector<transport::DriftFit> fits;
  Json rows = Json::array();
  double max_rel_error = 0.0;
  double max_angle_deg = 0.0;
  bool has_prediction = false;
};

FitSet fit_worldlines(const std::vector<transport::ParticleEnsemble>& ens, const Config& c, double lo, double hi,
                      bool richardson, const fields::SelfSimilarProfile* profile) {
  FitSet fs;
  for (const auto& e : ens) {
    const std::size_t limit = c.extraction.drift_sample == 0 ? e.worldlines.size()
                                                              : std::min(e.worldlines.size(), c.extraction.drift_sample);
    for (std::size_t w = 0; w < limit; ++w) {
      const auto& wl = e.worldlines[w];
      const auto am = transport::asymptotic_momentum(wl, lo);
      const Vec3 v_inf = richardson ? am.v_extrapolated : am.v_final;
      const auto fit = transport::drift_fit(wl, e.species, v_inf, lo, hi);
      fs.fits.push_back(fit);
      Json row = fit_json(fit);
      row["species"] = e.species.label;
      row["particle"] = e.worldline_ids[w];
      row["v_inf"] = vec_json(v_inf);
      row["cauchy"] = am.cauchy;
      if (profile) {
        const Vec3 pred = transport::predicted_drift(*profile, e.species, v_inf);
        row["predicted_b"] = vec_json(pred);
        const double pn = norm(pred);
        if (pn > 0.0) {
          fs.has_prediction = true;
          const double rel = std::fabs(norm(fit.b) - pn) / pn;
          const double cosang = std::clamp(dot(fit.b, pred) / (norm(fit.b) * pn), -1.0, 1.0);
          const double ang = std::acos(cosang) * 180.0 / std::numbers::pi;
          row["magnitude_rel_error"] = rel;
          row["angle_deg"] = ang;
          fs.max_rel_error = std::max(fs.max_rel_error, rel);
          fs.max_angle_deg = std::max(fs.max_angle_deg, ang);
        }
      }
      fs.rows.push_back(row);
    }
  }
  return fs;
}

Json classifier_json(const asymptotics::ClassifierReport& r, const std::string& q_source) {
  return Json{{"verdict", asymptotics::to_string(r.verdict)},
              {"max_q", r.max_q},
              {"max_slope", r.max_slope},
              {"tol_q", r.thresholds.tol_q()},
              {"tol_slope", r.thresholds.tol_slope()},
              {"noise_floor_q", r.thresholds.noise_q},
              {"noise_floor_slope", r.thresholds.noise_slope},
              {"noise_multiplier", r.thresholds.multiplier},
              {"min_noise_q", r.thresholds.min_noise_q},
              {"min_noise_slope", r.thresholds.min_noise_slope},
              {"q_source", q_source},
              {"fits", r.fits}};
}

Json species_json(const transport::ParticleEnsemble& e, double initial_weight) {
  const double bhat = e.beta_recorded / std::sqrt(1.0 + e.beta_recorded * e.beta_recorded / (e.species.mass * e.species.mass)) /
                      e.species.mass;
  const auto sup = transport::support_report(e, std::min(bhat, 1.0));
  return Json{{"label", e.species.label},
              {"mass", e.species.mass},
              {"charge", e.species.charge},
              {"count", e.particles.size()},
              {"total_weight_initial", initial_weight},
              {"total_weight_final", e.total_weight()},
              {"beta_recorded", e.beta_recorded},
              {"max_speed_final", sup.max_speed},
              {"max_cone_excess", sup.max_cone_excess},
              {"interp_error_bound", e.interp_error_bound},
              {"tracked", e.worldlines.size()}};
}

std::vector<double> extraction_times(const Config& c) {
  std::vector<double> t = c.extraction.times;
  t.push_back(c.integrator.t_final);
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

void write_ensembles(const std::filesystem::path& dir, const std::vector<transport::ParticleEnsemble>& ens,
                     Json& artifacts) {
  for (const auto& e : ens) {
    const std::string base = "ensemble_" + e.species.label;
    io::write_ensemble(dir / (base + ".bin"), e);
    artifacts.push_back(base + ".bin");
    if (!e.worldlines.empty()) {
      io::write_worldlines(dir / ("worldlines_" + e.species.label + ".bin"), e);
      artifacts.push_back("worldlines_" + e.species.label + ".bin");
    }
    if (e.particles.size() <= 10000) {
      io::write_ensemble_csv(dir / (base + ".csv"), e);
      artifacts.push_back(base + ".csv");
    }
  }
}

Json gauss_rows(const std::vector<double>& deltas, const std::function<asymptotics::GaussSides(double)>& fn) {
  Json rows = Json::array();
  for (double d : deltas) {
    const auto s = fn(d);
    const double scale = std::max(std::fabs(s.lhs), std::fabs(s.rhs));
    rows.push_back(Json{{"delta", d},
                        {"lhs", s.lhs},
                        {"rhs", s.rhs},
                        {"abs_diff", std::fabs(s.lhs - s.rhs)},
                        {"rel_diff", scale > 0.0 ? std::fabs(s.lhs - s.rhs) / scale : 0.0}});
  }
  return rows;
}

RunResult run_prescribed(const Config& c, const std::filesystem::path& dir) {
  auto ens = build_ensembles(c);
  std::vector<double> w0;
  for (auto& e : ens) {
    e.track_all();
    w0.push_back(e.total_weight());
  }
  const auto field = build_field(c);
  const auto profile = build_profile(c);
  const auto opts = integrator_options(c);
  const auto sampling = sampling_policy(c);
  const auto vgrid = velocity_grid(c);

  Json q_rows = Json::array();
  asymptotics::QProfile q;
  bool first = true;
  for (double t : extraction_times(c)) {
    for (auto& e : ens) e = transport::evolve(e, *field, t, opts, sampling);
    asymptotics::QProfile next = asymptotics::extract_q(ens, vgrid);
    if (!first) {
      for (std::size_t i = 0; i < next.total.size(); ++i)
        next.cauchy = std::max(next.cauchy, std::fabs(next.total[i] - q.total[i]));
    }
    q_rows.push_back(Json{{"time", t}, {"max_abs_total", next.max_abs_total()}, {"cauchy", next.cauchy}});
    q = std::move(next);
    first = false;
  }

  const double lo = c.extraction.window_lo, hi = c.extraction.window_hi;
  const FitSet fits = fit_worldlines(ens, c, lo, hi, true, &profile);

  // Zero-field control of the same markers sets the slope noise floor.
  auto control = build_ensembles(c);
  const fields::ZeroField zero;
  for (auto& e : control) {
    e.track_all();
    e = transport::evolve(e, zero, c.integrator.t_final, opts, sampling);
  }
  const FitSet control_fits = fit_worldlines(control, c, lo, hi, true, nullptr);
  double noise_slope = 0.0;
  for (const auto& f : control_fits.fits) noise_slope = std::max(noise_slope, norm(f.b));

  const asymptotics::QProfile implied = asymptotics::implied_q(profile, vgrid);
  asymptotics::Thresholds th;
  th.noise_q = 0.0;  // the control field implies Q∞ ≡ 0
  th.noise_slope = noise_slope;
  th.multiplier = c.classifier.noise_multiplier;
  th.min_noise_q = c.classifier.min_noise_q;
  th.min_noise_slope = c.classifier.min_noise_slope;
  const auto verdict = asymptotics::classify_scattering(fits.fits, implied, th);

  const auto lprof = asymptotics::profile_from_model(profile, vgrid);
  const auto witness = asymptotics::find_witness(implied, lprof, th.tol_q(), 1e-12);
  Json gauss = gauss_rows(c.extraction.gauss_deltas, [&](double d) {
    return asymptotics::gauss_identity([&](const Vec3& v) { return fields::implied_charge(profile, v); },
                                       [&](const Vec3& v) { return profile.ebb(v); }, d);
  });

  Json artifacts = Json::array();
  write_ensembles(dir, ens, artifacts);
  io::write_profile(dir / "q_profile.bin", q);
  io::write_profile_csv(dir / "q_profile.csv", q);
  io::write_profile(dir / "implied_q.bin", implied);
  artifacts.push_back("q_profile.bin");
  artifacts.push_back("q_profile.csv");
  artifacts.push_back("implied_q.bin");

  Json rep;
  rep["version"] = version();
  rep["scenario"] = c.name;
  rep["mode"] = "prescribed";
  rep["field"] = field->name();
  rep["config"] = to_json(c);
  rep["time_final"] = c.integrator.t_final;
  Json sp = Json::array();
  for (std::size_t i = 0; i < ens.size(); ++i) sp.push_back(species_json(ens[i], w0[i]));
  rep["species"] = sp;
  rep["q_profile"] = Json{{"extractions", q_rows},
                          {"max_abs_total", q.max_abs_total()},
                          {"noise_total", q.noise_total},
                          {"support_radius", q.support_radius}};
  rep["drift"] = Json{{"window", Json::array({lo, hi})},
                      {"fits", fits.rows},
                      {"max_magnitude_rel_error", fits.max_rel_error},
                      {"max_angle_deg", fits.max_angle_deg},
                      {"has_prediction", fits.has_prediction}};
  rep["control"] = Json{{"field", "zero"}, {"max_slope", noise_slope}, {"fits", control_fits.fits.size()}};
  rep["classifier"] = classifier_json(verdict, "field_implied");
  rep["witness"] = witness ? Json{{"v", vec_json(witness->v)},
                                  {"q", witness->q},
                                  {"l", vec_json(witness->l)},
                                  {"score", witness->score}}
                           : Json();
  rep["gauss_identity"] = gauss;
  rep["artifacts"] = artifacts;
  write_json(dir / "report.json", rep);
  return RunResult{dir, rep};
}

RunResult run_self_consistent(const Config& c, const std::filesystem::path& dir) {
  auto ens = build_ensembles(c);
  std::vector<double> w0;
  for (const auto& e : ens) w0.push_back(e.total_weight());
  const auto vgrid = velocity_grid(c);

  maxwell::PicOptions po;
  po.grid.n = c.grid.cells;
  po.grid.half_width = c.grid.half_width > 0.0 ? c.grid.half_width : c.integrator.t_final + 2.0 * c.support_k;
  po.dt = c.grid.cfl * po.grid.dt_max();
  po.t_final = c.integrator.t_final;
  po.support_k = c.support_k;
  po.deposition = c.grid.deposition;
  po.tracked_per_species = c.grid.tracked_per_species;
  po.sample_every = c.grid.sample_every;
  po.monitor_every = c.grid.monitor_every;
  Json q_rows = Json::array();
  std::vector<double> prev_total;
  auto record_q = [&](const asymptotics::QProfile& q) {
    double cauchy = 0.0;
    if (!prev_total.empty())
      for (std::size_t i = 0; i < q.total.size(); ++i) cauchy = std::max(cauchy, std::fabs(q.total[i] - prev_total[i]));
    q_rows.push_back(Json{{"time", q.time}, {"max_abs_total", q.max_abs_total()}, {"cauchy", cauchy}});
    prev_total = q.total;
    return cauchy;
  };
  for (double t : c.extraction.times)
    if (t < c.integrator.t_final) po.snapshot_times.push_back(t);
  po.on_snapshot = [&](const std::vector<transport::ParticleEnsemble>& e, const maxwell::FieldGrid&) {
    record_q(asymptotics::extract_q(e, vgrid));
  };
  const maxwell::PicResult res = maxwell::run_pic(std::move(ens), po);
  asymptotics::QProfile q = asymptotics::extract_q(res.ensembles, vgrid);
  q.cauchy = record_q(q);

  const double lo = std::max(10.0, c.extraction.window_lo);
  const double hi = std::min(c.extraction.window_hi, c.integrator.t_final);
  const FitSet fits = fit_worldlines(res.ensembles, c, lo, hi, false, nullptr);

  // Zero-field control: the tracked markers free-streamed with the PIC step.
  auto control = build_ensembles(c);
  transport::IntegratorOptions copts;
  copts.kind = transport::IntegratorKind::boris;
  copts.dt = res.ensembles.empty() ? 1.0 : c.integrator.t_final / static_cast<double>(res.steps);
  transport::SamplingPolicy cs;
  cs.linear_dt = copts.dt * c.grid.sample_every;
  cs.t_switch = c.integrator.t_final;
  const fields::ZeroField zero;
  for (std::size_t s = 0; s < control.size(); ++s) {
    transport::ParticleEnsemble sub;
    sub.species = control[s].species;
    sub.support_k = control[s].support_k;
    for (std::size_t id : res.ensembles[s].worldline_ids) sub.particles.push_back(control[s].particles[id]);
    sub.track_all();
    control[s] = transport::evolve(sub, zero, c.integrator.t_final, copts, cs);
    control[s].worldline_ids = res.ensembles[s].worldline_ids;
  }
  const FitSet control_fits = fit_worldlines(control, c, lo, hi, false, nullptr);
  double noise_slope = 0.0;
  for (const auto& f : control_fits.fits) noise_slope = std::max(noise_slope, norm(f.b));

  asymptotics::Thresholds th;
  th.noise_q = q.noise_total;
  th.noise_slope = noise_slope;
  th.multiplier = c.classifier.noise_multiplier;
  th.min_noise_q = c.classifier.min_noise_q;
  th.min_noise_slope = c.classifier.min_noise_slope;
  const auto verdict = asymptotics::classify_scattering(fits.fits, q, th);

  const maxwell::FieldGrid& grid = res.field;
  const asymptotics::FieldSource source = [&grid](double, const Vec3& x) { return grid.sample(x); };
  Json gauss = gauss_rows(c.extraction.gauss_deltas, [&](double d) {
    return asymptotics::gauss_identity(q, source, c.integrator.t_final, d);
  });

  double max_div_b = 0.0, max_gauss = 0.0, max_decay = 0.0, max_energy_drift = 0.0;
  const double e0 = res.monitors.empty() ? 0.0 : res.monitors.front().energy;
  for (const auto& m : res.monitors) {
    max_div_b = std::max(max_div_b, m.div_b);
    max_gauss = std::max(max_gauss, m.gauss_residual);
    max_decay = std::max(max_decay, m.decay);
    if (e0 != 0.0) max_energy_drift = std::max(max_energy_drift, std::fabs(m.energy - e0) / std::fabs(e0));
  }

  Json artifacts = Json::array();
  write_ensembles(dir, res.ensembles, artifacts);
  io::write_field(dir / "field_final.bin", res.field);
  io::write_profile(dir / "q_profile.bin", q);
  io::write_profile_csv(dir / "q_profile.csv", q);
  io::write_monitors_csv(dir / "monitors.csv", res.monitors);
  for (const char* a : {"field_final.bin", "q_profile.bin", "q_profile.csv", "monitors.csv"}) artifacts.push_back(a);

  Json rep;
  rep["version"] = version();
  rep["scenario"] = c.name;
  rep["mode"] = "self_consistent";
  rep["config"] = to_json(c);
  rep["time_final"] = c.integrator.t_final;
  Json sp = Json::array();
  for (std::size_t i = 0; i < res.ensembles.size(); ++i) sp.push_back(species_json(res.ensembles[i], w0[i]));
  rep["species"] = sp;
  rep["grid"] = Json{{"cells", po.grid.n}, {"half_width", po.grid.half_width}, {"dx", po.grid.dx()},
                     {"dt", c.integrator.t_final / static_cast<double>(res.steps)}, {"steps", res.steps}};
  rep["monitors"] = Json{{"initial_gauss_residual", res.initial_gauss_residual},
                         {"final_gauss_residual", res.monitors.back().gauss_residual},
                         {"max_gauss_residual", max_gauss},
                         {"gauss_growth", max_gauss - res.initial_gauss_residual},
                         {"max_div_b_relative", max_div_b},
                         {"max_decay_monitor", max_decay},
                         {"final_decay_monitor", res.monitors.back().decay},
                         {"max_energy_drift_relative", max_energy_drift}};
  rep["q_profile"] = Json{{"extractions", q_rows},
                          {"max_abs_total", q.max_abs_total()},
                          {"noise_total", q.noise_total},
                          {"support_radius", q.support_radius}};
  rep["drift"] = Json{{"window", Json::array({lo, hi})}, {"fits", fits.rows}};
  rep["control"] = Json{{"field", "zero"}, {"max_slope", noise_slope}, {"fits", control_fits.fits.size()}};
  rep["classifier"] = classifier_json(verdict, "particle_extraction");
  rep["gauss_identity"] = gauss;
  rep["artifacts"] = artifacts;
  write_json(dir / "report.json", rep);
  return RunResult{dir, rep};
}

}  // namespace

const char* version() { return VMLAB_VERSION; }

std::string dump(const Json& j) { return j.dump(2); }

Config parse_config(const Json& j) {
  Config c;
  std::vector<std::string> err;
  ObjectReader top(j, "", err);
  top.get("name", c.name);
  top.get("seed", c.seed);
  top.get("workers", c.workers);
  top.get("support_k", c.support_k);
  top.get("output_dir", c.output_dir);

  if (const Json* sp = top.child("species")) {
    if (!sp->is_array()) {
      err.push_back("species: expected an array");
    } else {
      for (std::size_t i = 0; i < sp->size(); ++i) {
        SpeciesConfig s;
        ObjectReader r((*sp)[i], "species[" + std::to_string(i) + "]", err);
        r.get("label", s.label);
        r.get("mass", s.mass);
        r.get("charge", s.charge);
        r.get("count", s.count);
        r.vec3("x_center", s.x_center);
        r.get("x_radius", s.x_radius);
        r.vec3("v_center", s.v_center);
        r.get("v_radius", s.v_radius);
        r.get("v_inner", s.v_inner);
        parse_enum(r, "v_profile", s.v_profile, kVelocityProfiles, err);
        r.get("amplitude", s.amplitude);
        r.get("mirror_of", s.mirror_of);
        r.finish();
        c.species.push_back(s);
      }
    }
  }
  if (const Json* f = top.child("field")) {
    ObjectReader r(*f, "field", err);
    parse_enum(r, "mode", c.mode, kModes, err);
    if (const Json* p = r.child("profile")) {
      ObjectReader q(*p, "field.profile", err);
      parse_enum(q, "kind", c.profile.kind, kProfileKinds, err);
      q.get("beta_max", c.profile.beta_max);
      q.get("t_on", c.profile.t_on);
      q.get("a_radial", c.profile.a_radial);
      q.vec3("e_uniform", c.profile.e_uniform);
      q.get("q", c.profile.q);
      q.get("delta", c.profile.delta);
      q.vec3("omega", c.profile.omega);
      q.finish();
    }
    r.finish();
  }
  if (const Json* in = top.child("integrator")) {
    ObjectReader r(*in, "integrator", err);
    parse_enum(r, "kind", c.integrator.kind, kIntegrators, err);
    r.get("rtol", c.integrator.rtol);
    r.get("atol", c.integrator.atol);
    r.get("dt", c.integrator.dt);
    r.get("t_final", c.integrator.t_final);
    if (const Json* s = r.child("sampling")) {
      ObjectReader q(*s, "integrator.sampling", err);
      q.get("linear_dt", c.integrator.sampling.linear_dt);
      q.get("t_switch", c.integrator.sampling.t_switch);
      q.get("ratio", c.integrator.sampling.ratio);
      q.finish();
    }
    r.finish();
  }
  if (const Json* g = top.child("grid")) {
    ObjectReader r(*g, "grid", err);
    r.get("cells", c.grid.cells);
    r.get("half_width", c.grid.half_width);
    r.get("cfl", c.grid.cfl);
    parse_enum(r, "deposition", c.grid.deposition, kDepositions, err);
    r.get("tracked_per_species", c.grid.tracked_per_species);
    r.get("sample_every", c.grid.sample_every);
    r.get("monitor_every", c.grid.monitor_every);
    r.finish();
  }
  if (const Json* e = top.child("extraction")) {
    ObjectReader r(*e, "extraction", err);
    r.get("times", c.extraction.times);
    if (const Json* vg = r.child("velocity_grid")) {
      ObjectReader q(*vg, "extraction.velocity_grid", err);
      q.get("n", c.extraction.grid_n);
      q.get("radius", c.extraction.grid_radius);
      q.finish();
    }
    std::vector<double> window;
    const bool has_window = r.has("drift_window");
    r.get("drift_window", window);
    if (has_window) {
      if (window.size() != 2)
        err.push_back("extraction.drift_window: expected [t_lo, t_hi]");
      else {
        c.extraction.window_lo = window[0];
        c.extraction.window_hi = window[1];
      }
    }
    r.get("drift_sample", c.extraction.drift_sample);
    r.get("gauss_deltas", c.extraction.gauss_deltas);
    r.finish();
  }
  if (const Json* b = top.child("boost")) {
    ObjectReader r(*b, "boost", err);
    r.get("phi", c.boost.phi);
    r.vec3("rotation_axis", c.boost.rotation_axis);
    r.get("rotation_angle", c.boost.rotation_angle);
    r.get("slices", c.boost.slices);
    r.finish();
  }
  if (const Json* cl = top.child("classifier")) {
    ObjectReader r(*cl, "classifier", err);
    r.get("noise_multiplier", c.classifier.noise_multiplier);
    r.get("min_noise_q", c.classifier.min_noise_q);
    r.get("min_noise_slope", c.classifier.min_noise_slope);
    r.finish();
  }
  top.finish();

  // Mirrors inherit the marker count of their source.
  for (auto& s : c.species)
    if (!s.mirror_of.empty())
      for (const auto& o : c.species)
        if (o.label == s.mirror_of) s.count = o.count;
  if (err.empty()) validate(c, err);
  if (!err.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : err) msg += "\n  " + e;
    throw ValidationError("cli", "run_scenario", msg);
  }
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cli", "run_scenario", "cannot read config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("cli", "run_scenario", path.string() + ": " + e.what());
  }
  return parse_config(j);
}

Json to_json(const Config& c) {
  Json sp = Json::array();
  for (const auto& s : c.species) {
    sp.push_back(Json{{"label", s.label},
                      {"mass", s.mass},
                      {"charge", s.charge},
                      {"count", s.count},
                      {"x_center", vec_json(s.x_center)},
                      {"x_radius", s.x_radius},
                      {"v_center", vec_json(s.v_center)},
                      {"v_radius", s.v_radius},
                      {"v_inner", s.v_inner},
                      {"v_profile", name_of(s.v_profile, kVelocityProfiles)},
                      {"amplitude", s.amplitude},
                      {"mirror_of", s.mirror_of.empty() ? Json() : Json(s.mirror_of)}});
  }
  return Json{
      {"name", c.name},
      {"seed", c.seed},
      {"workers", c.workers},
      {"support_k", c.support_k},
      {"species", sp},
      {"field",
       {{"mode", name_of(c.mode, kModes)},
        {"profile",
         {{"kind", name_of(c.profile.kind, kProfileKinds)},
          {"beta_max", c.profile.beta_max},
          {"t_on", c.profile.t_on},
          {"a_radial", c.profile.a_radial},
          {"e_uniform", vec_json(c.profile.e_uniform)},
          {"q", c.profile.q},
          {"delta", c.profile.delta},
          {"omega", vec_json(c.profile.omega)}}}}},
      {"integrator",
       {{"kind", name_of(c.integrator.kind, kIntegrators)},
        {"rtol", c.integrator.rtol},
        {"atol", c.integrator.atol},
        {"dt", c.integrator.dt},
        {"t_final", c.integrator.t_final},
        {"sampling",
         {{"linear_dt", c.integrator.sampling.linear_dt},
          {"t_switch", c.integrator.sampling.t_switch},
          {"ratio", c.integrator.sampling.ratio}}}}},
      {"grid",
       {{"cells", c.grid.cells},
        {"half_width", c.grid.half_width},
        {"cfl", c.grid.cfl},
        {"deposition", name_of(c.grid.deposition, kDepositions)},
        {"tracked_per_species", c.grid.tracked_per_species},
        {"sample_every", c.grid.sample_every},
        {"monitor_every", c.grid.monitor_every}}},
      {"extraction",
       {{"times", c.extraction.times},
        {"velocity_grid", {{"n", c.extraction.grid_n}, {"radius", c.extraction.grid_radius}}},
        {"drift_window", Json::array({c.extraction.window_lo, c.extraction.window_hi})},
        {"drift_sample", c.extraction.drift_sample},
        {"gauss_deltas", c.extraction.gauss_deltas}}},
      {"boost",
       {{"phi", c.boost.phi},
        {"rotation_axis", vec_json(c.boost.rotation_axis)},
        {"rotation_angle", c.boost.rotation_angle},
        {"slices", c.boost.slices}}},
      {"classifier",
       {{"noise_multiplier", c.classifier.noise_multiplier},
        {"min_noise_q", c.classifier.min_noise_q},
        {"min_noise_slope", c.classifier.min_noise_slope}}},
      {"output_dir", c.output_dir}};
}

std::vector<transport::ParticleEnsemble> build_ensembles(const Config& c) {
  std::vector<transport::ParticleEnsemble> out;
  for (std::size_t si = 0; si < c.species.size(); ++si) {
    const auto& s = c.species[si];
    transport::ParticleEnsemble e;
    e.species = Species::make(s.mass, s.charge, s.label);
    e.support_k = c.support_k;
    if (!s.mirror_of.empty()) {
      for (std::size_t k = 0; k < si; ++k)
        if (c.species[k].label == s.mirror_of) {
          e.particles = out[k].particles;
          const double scale = s.amplitude / c.species[k].amplitude;
          if (scale != 1.0)
            for (auto& p : e.particles) p.w *= scale;
        }
    } else {
      Uniform u(c.seed * 0x9E3779B97F4A7C15ULL + si + 1);
      e.particles.resize(s.count);
      double total = 0.0;
      for (auto& p : e.particles) {
        const Vec3 xo = in_unit_ball(u);
        p.x = s.x_center + s.x_radius * xo;
        double wv = 0.0;
        if (s.v_profile == VelocityProfile::ball) {
          const Vec3 vo = in_unit_ball(u);
          p.v = s.v_center + s.v_radius * vo;
          wv = bump(norm(vo));
        } else {
          const double r3i = std::pow(s.v_inner, 3), r3o = std::pow(s.v_radius, 3);
          const double r = std::cbrt(r3i + u() * (r3o - r3i));
          p.v = s.v_center + r * on_unit_sphere(u);
          const double mid = 0.5 * (s.v_inner + s.v_radius), half = 0.5 * (s.v_radius - s.v_inner);
          wv = bump(std::fabs(r - mid) / half);
        }
        p.w = bump(norm(xo)) * wv;
        total += p.w;
      }
      if (!(total > 0.0)) throw RuntimeFailure("cli", "build_ensembles", "all sampled weights vanished");
      for (auto& p : e.particles) p.w *= s.amplitude / total;
    }
    for (const auto& p : e.particles) e.beta_recorded = std::max(e.beta_recorded, norm(p.v));
    out.push_back(std::move(e));
  }
  return out;
}

fields::SelfSimilarProfile build_profile(const Config& c) {
  const auto& pc = c.profile;
  fields::SelfSimilarProfile p;
  if (pc.kind == fields::ProfileKind::coulomb) {
    p = fields::coulomb_pair(pc.q, pc.delta).profile;
  } else {
    p.kind = pc.kind;
    p.beta_max = pc.beta_max;
    p.a_radial = pc.a_radial;
    p.e_uniform = pc.e_uniform;
  }
  p.t_on = pc.t_on;
  p.omega = pc.omega;
  return p;
}

std::shared_ptr<const fields::FieldModel> build_field(const Config& c) {
  if (c.profile.kind == fields::ProfileKind::zero) return std::make_shared<fields::ZeroField>();
  return std::make_shared<fields::SelfSimilarField>(build_profile(c), c.support_k);
}

std::filesystem::path artifact_dir(const Config& c) {
  const std::string leaf = c.output_dir.empty() ? c.name : c.output_dir;
  if (const char* root = std::getenv("VMLAB_OUTPUT_ROOT"); root && *root)
    return std::filesystem::path(root) / std::filesystem::path(leaf).relative_path();
  return c.output_dir.empty() ? std::filesystem::path("runs") / c.name : std::filesystem::path(c.output_dir);
}

RunResult run_scenario(const Config& c) {
  const auto dir = artifact_dir(c);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw RuntimeFailure("cli", "run_scenario", "cannot create " + dir.string() + ": " + ec.message());
  write_json(dir / "config.json", to_json(c));
  return c.mode == FieldMode::prescribed ? run_prescribed(c, dir) : run_self_consistent(c, dir);
}

RunResult run_scenario(const std::filesystem::path& config_path) { return run_scenario(load_config(config_path)); }

RunResult boost_rerun(const std::filesystem::path& dir, double phi) {
  const Config c = parse_config(read_json(dir / "config.json", "boost_rerun"));
  std::vector<transport::ParticleEnsemble> ens;
  for (const auto& s : c.species) {
    const auto base = dir / ("ensemble_" + s.label + ".bin");
    if (!std::filesystem::exists(base))
      throw PreconditionError("cli", "boost_rerun", "missing " + base.string() + "; run the scenario first");
    auto e = io::read_ensemble(base);
    const auto wl = dir / ("worldlines_" + s.label + ".bin");
    if (std::filesystem::exists(wl)) io::read_worldlines(wl, e);
    if (!e.has_full_worldlines())
      throw PreconditionError("cli", "boost_rerun",
                              "species '" + s.label +
                                  "' has no worldline for every particle; rerun the scenario in prescribed mode, "
                                  "which stores worldlines for all particles");
    ens.push_back(std::move(e));
  }

  const lorentz::LorentzTransform a =
      lorentz::embed_rotation(lorentz::axis_angle(c.boost.rotation_axis, c.boost.rotation_angle)) *
      lorentz::boost_x(phi);
  double k = 0.0;
  for (const auto& e : ens) k = std::max(k, e.support_k);
  const double onset = lorentz::onset_time(a, k);
  const lorentz::LorentzTransform inv = a.inverse();
  double horizon = std::numeric_limits<double>::infinity();
  for (const auto& e : ens)
    for (const auto& wl : e.worldlines) horizon = std::min(horizon, inv(FourVector{wl.back().t, wl.back().x}).t);

  std::vector<double> slices = c.boost.slices;
  if (slices.empty()) {
    const double top = 0.999 * horizon;
    for (double f : {0.01, 0.1, 1.0})
      if (f * top >= onset && f * top > 0.0) slices.push_back(f * top);
  }
  if (slices.empty() || onset > horizon) {
    std::ostringstream os;
    os << "boost_rerun: onset time T = " << onset << " exceeds the stored horizon " << horizon
       << " in the boosted frame; choose a smaller phi or run longer";
    throw PreconditionError("cli", "boost_rerun", os.str());
  }
  const auto vgrid = velocity_grid(c);
  const auto rep = asymptotics::verify_boosted_extraction(ens, a, slices, vgrid);

  const auto out = dir / ("boost_phi_" + fmt_number(phi));
  std::filesystem::create_directories(out);
  std::vector<transport::ParticleEnsemble> last;
  for (const auto& e : ens) last.push_back(transport::boosted_slice(e, a, rep.slices.back().t_new));
  Json artifacts = Json::array();
  for (const auto& e : last) {
    io::write_ensemble(out / ("ensemble_" + e.species.label + ".bin"), e);
    artifacts.push_back("ensemble_" + e.species.label + ".bin");
  }
  const auto qb = asymptotics::extract_q(last, vgrid);
  io::write_profile(out / "q_profile.bin", qb);
  io::write_profile_csv(out / "q_profile.csv", qb);
  artifacts.push_back("q_profile.bin");
  artifacts.push_back("q_profile.csv");

  Json rows = Json::array();
  for (const auto& s : rep.slices)
    rows.push_back(Json{{"t_new", s.t_new},
                        {"max_abs_deviation", s.max_abs_deviation},
                        {"max_abs_prediction", s.max_abs_prediction},
                        {"relative_deviation", s.relative_deviation}});
  Json j;
  j["version"] = version();
  j["scenario"] = c.name;
  j["config"] = to_json(c);
  j["phi"] = phi;
  j["rotation_axis"] = vec_json(c.boost.rotation_axis);
  j["rotation_angle"] = c.boost.rotation_angle;
  j["support_k"] = k;
  j["onset_time"] = rep.onset_time;
  j["stored_horizon"] = horizon;
  j["slices"] = rows;
  j["final_relative_deviation"] = rep.final_relative_deviation;
  j["prediction"] = "source markers at their final time pushed through u -> (A^-1 (u0, u))^s";
  j["artifacts"] = artifacts;
  write_json(out / "boost_report.json", j);
  return RunResult{out, j};
}

Json report(const std::filesystem::path& dir) { return read_json(dir / "report.json", "report"); }

}  // namespace vmlab::scenario
