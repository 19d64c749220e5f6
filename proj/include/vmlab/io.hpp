#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vmlab/asymptotics.hpp"
#include "vmlab/maxwell.hpp"
#include "vmlab/transport.hpp"

namespace vmlab::io {

// All binary formats are little-endian with 64-bit floats; see docs/formats.md.

void write_ensemble(const std::filesystem::path& path, const transport::ParticleEnsemble& ens);
/// Reads particles and header fields; worldlines are stored separately.
transport::ParticleEnsemble read_ensemble(const std::filesystem::path& path);

void write_worldlines(const std::filesystem::path& path, const transport::ParticleEnsemble& ens);
/// Attaches the worldlines stored at `path` to `ens`.
void read_worldlines(const std::filesystem::path& path, transport::ParticleEnsemble& ens);

void write_field(const std::filesystem::path& path, const maxwell::FieldGrid& grid);
maxwell::FieldGrid read_field(const std::filesystem::path& path);

void write_profile(const std::filesystem::path& path, const asymptotics::QProfile& q);
asymptotics::QProfile read_profile(const std::filesystem::path& path);

void write_ensemble_csv(const std::filesystem::path& path, const transport::ParticleEnsemble& ens);
/// One row per grid node: vx, vy, vz, total, then one column per species.
void write_profile_csv(const std::filesystem::path& path, const asymptotics::QProfile& q);
void write_monitors_csv(const std::filesystem::path& path, const std::vector<maxwell::MonitorRow>& rows);

}  // namespace vmlab::io
