#include "vmlab/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>

#include "vmlab/error.hpp"

namespace vmlab::io {
namespace {

constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(const std::filesystem::path& p) : out_(p, std::ios::binary | std::ios::trunc), path_(p) {
    if (!out_) throw RuntimeFailure("io", "write", "cannot open " + p.string() + " for writing");
  }
  ~Writer() = default;

  void magic(const char (&m)[9]) { out_.write(m, 8); }
  template <typename T>
  void put(T v) {
    std::array<char, sizeof(T)> b{};
    std::memcpy(b.data(), &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
    out_.write(b.data(), sizeof(T));
  }
  void str(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void finish() {
    out_.flush();
    if (!out_) throw RuntimeFailure("io", "write", "write to " + path_.string() + " failed");
  }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& p) : in_(p, std::ios::binary), path_(p) {
    if (!in_) throw RuntimeFailure("io", "read", "cannot open " + p.string());
  }

  void magic(const char (&m)[9]) {
    char b[8];
    in_.read(b, 8);
    if (!in_ || std::memcmp(b, m, 8) != 0)
      throw ValidationError("io", "read", path_.string() + " is not a " + std::string(m, 8) + " file");
    if (get<std::uint32_t>() != kVersion)
      throw ValidationError("io", "read", path_.string() + " has an unsupported format version");
  }
  template <typename T>
  T get() {
    std::array<char, sizeof(T)> b{};
    in_.read(b.data(), sizeof(T));
    if (!in_) throw ValidationError("io", "read", path_.string() + " is truncated");
    if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
    T v;
    std::memcpy(&v, b.data(), sizeof(T));
    return v;
  }
  std::string str() {
    const auto n = get<std::uint32_t>();
    std::string s(n, '\0');
    in_.read(s.data(), n);
    if (!in_) throw ValidationError("io", "read", path_.string() + " is truncated");
    return s;
  }

 private:
  std::ifstream in_;
  std::filesystem::path path_;
};

void put_vec(Writer& w, const Vec3& v) {
  for (std::size_t d = 0; d < 3; ++d) w.put(v[d]);
}
Vec3 get_vec(Reader& r) {
  Vec3 v;
  for (std::size_t d = 0; d < 3; ++d) v[d] = r.get<double>();
  return v;
}

std::ofstream open_csv(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw RuntimeFailure("io", "write_csv", "cannot open " + p.string());
  out << std::setprecision(17);
  return out;
}

}  // namespace

void write_ensemble(const std::filesystem::path& path, const transport::ParticleEnsemble& ens) {
  Writer w(path);
  w.magic("VMLENS01");
  w.put(kVersion);
  w.str(ens.species.label);
  w.put(ens.species.mass);
  w.put(ens.species.charge);
  w.put<std::uint64_t>(ens.particles.size());
  w.put(ens.time);
  w.put(ens.support_k);
  w.put(ens.beta_recorded);
  w.put(ens.interp_error_bound);
  for (const auto& p : ens.particles) put_vec(w, p.x);
  for (const auto& p : ens.particles) put_vec(w, p.v);
  for (const auto& p : ens.particles) w.put(p.w);
  w.finish();
}

transport::ParticleEnsemble read_ensemble(const std::filesystem::path& path) {
  Reader r(path);
  r.magic("VMLENS01");
  transport::ParticleEnsemble ens;
  ens.species.label = r.str();
  ens.species.mass = r.get<double>();
  ens.species.charge = r.get<double>();
  const auto n = r.get<std::uint64_t>();
  ens.time = r.get<double>();
  ens.support_k = r.get<double>();
  ens.beta_recorded = r.get<double>();
  ens.interp_error_bound = r.get<double>();
  ens.particles.resize(n);
  for (auto& p : ens.particles) p.x = get_vec(r);
  for (auto& p : ens.particles) p.v = get_vec(r);
  for (auto& p : ens.particles) p.w = r.get<double>();
  return ens;
}

void write_worldlines(const std::filesystem::path& path, const transport::ParticleEnsemble& ens) {
  Writer w(path);
  w.magic("VMLWLD01");
  w.put(kVersion);
  w.put<std::uint64_t>(ens.worldlines.size());
  for (std::size_t i = 0; i < ens.worldlines.size(); ++i) {
    w.put<std::uint64_t>(ens.worldline_ids[i]);
    w.put<std::uint64_t>(ens.worldlines[i].size());
    for (const auto& s : ens.worldlines[i]) {
      w.put(s.t);
      put_vec(w, s.x);
      put_vec(w, s.v);
    }
  }
  w.finish();
}

void read_worldlines(const std::filesystem::path& path, transport::ParticleEnsemble& ens) {
  Reader r(path);
  r.magic("VMLWLD01");
  const auto n = r.get<std::uint64_t>();
  ens.worldlines.assign(n, {});
  ens.worldline_ids.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    ens.worldline_ids[i] = r.get<std::uint64_t>();
    if (ens.worldline_ids[i] >= ens.particles.size())
      throw ValidationError("io", "read_worldlines", "worldline refers to a missing particle");
    const auto m = r.get<std::uint64_t>();
    ens.worldlines[i].resize(m);
    for (auto& s : ens.worldlines[i]) {
      s.t = r.get<double>();
      s.x = get_vec(r);
      s.v = get_vec(r);
    }
  }
}

void write_field(const std::filesystem::path& path, const maxwell::FieldGrid& grid) {
  Writer w(path);
  w.magic("VMLFLD01");
  w.put(kVersion);
  w.put<std::int32_t>(grid.spec.n);
  w.put(grid.spec.half_width);
  w.put(grid.time);
  for (const auto& c : grid.e)
    for (double v : c.data()) w.put(v);
  for (const auto& c : grid.b)
    for (double v : c.data()) w.put(v);
  w.finish();
}

maxwell::FieldGrid read_field(const std::filesystem::path& path) {
  Reader r(path);
  r.magic("VMLFLD01");
  maxwell::GridSpec spec;
  spec.n = r.get<std::int32_t>();
  spec.half_width = r.get<double>();
  maxwell::FieldGrid g(spec);
  g.time = r.get<double>();
  for (auto& c : g.e)
    for (double& v : c.data()) v = r.get<double>();
  for (auto& c : g.b)
    for (double& v : c.data()) v = r.get<double>();
  return g;
}

void write_profile(const std::filesystem::path& path, const asymptotics::QProfile& q) {
  Writer w(path);
  w.magic("VMLQPR01");
  w.put(kVersion);
  w.put<std::int32_t>(q.grid.n);
  w.put(q.grid.radius);
  w.put(q.time);
  w.put(q.cauchy);
  w.put(q.support_radius);
  w.put(q.noise_total);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(q.species.size()));
  for (const auto& s : q.species) {
    w.str(s.label);
    w.put(s.mass);
    w.put(s.charge);
    w.put(s.noise);
    w.put(s.outside_weight);
    for (double v : s.values) w.put(v);
  }
  for (double v : q.total) w.put(v);
  w.finish();
}

asymptotics::QProfile read_profile(const std::filesystem::path& path) {
  Reader r(path);
  r.magic("VMLQPR01");
  asymptotics::QProfile q;
  q.grid.n = r.get<std::int32_t>();
  q.grid.radius = r.get<double>();
  q.time = r.get<double>();
  q.cauchy = r.get<double>();
  q.support_radius = r.get<double>();
  q.noise_total = r.get<double>();
  const auto ns = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < ns; ++i) {
    asymptotics::SpeciesQ s;
    s.label = r.str();
    s.mass = r.get<double>();
    s.charge = r.get<double>();
    s.noise = r.get<double>();
    s.outside_weight = r.get<double>();
    s.values.resize(q.grid.size());
    for (double& v : s.values) v = r.get<double>();
    q.species.push_back(std::move(s));
  }
  q.total.resize(q.grid.size());
  for (double& v : q.total) v = r.get<double>();
  return q;
}

void write_ensemble_csv(const std::filesystem::path& path, const transport::ParticleEnsemble& ens) {
  auto out = open_csv(path);
  out << "x,y,z,vx,vy,vz,w\n";
  for (const auto& p : ens.particles)
    out << p.x[0] << ',' << p.x[1] << ',' << p.x[2] << ',' << p.v[0] << ',' << p.v[1] << ',' << p.v[2] << ','
        << p.w << '\n';
}

void write_profile_csv(const std::filesystem::path& path, const asymptotics::QProfile& q) {
  auto out = open_csv(path);
  out << "vx,vy,vz,total";
  for (const auto& s : q.species) out << ",q_" << s.label;
  out << '\n';
  for (std::size_t i = 0; i < q.grid.size(); ++i) {
    const Vec3 v = q.grid.node(i);
    out << v[0] << ',' << v[1] << ',' << v[2] << ',' << q.total[i];
    for (const auto& s : q.species) out << ',' << s.values[i];
    out << '\n';
  }
}

void write_monitors_csv(const std::filesystem::path& path, const std::vector<maxwell::MonitorRow>& rows) {
  auto out = open_csv(path);
  out << "time,gauss_residual,div_b,energy,decay_monitor\n";
  for (const auto& r : rows)
    out << r.time << ',' << r.gauss_residual << ',' << r.div_b << ',' << r.energy << ',' << r.decay << '\n';
}

}  // namespace vmlab::io
