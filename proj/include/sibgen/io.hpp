// On-disk formats.
//
// Volumes (.sib): 8-byte magic "SIBGEN01", uint32 little-endian header
// length, a UTF-8 JSON header, then the little-endian payload. The header
// carries "version", "kind", "dims", "dtype" and "payload_bytes".
//
// Reports, configs and manifests are JSON; cohort tables are CSV.
#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sibgen/cohort_analytics.hpp"
#include "sibgen/core.hpp"
#include "sibgen/pipelines.hpp"

namespace sibgen::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr std::uint32_t kFormatVersion = 1;

enum class IoErrorKind {
  Open,             // cannot open or create
  BadMagic,         // not a .sib file
  VersionMismatch,  // header version differs from kFormatVersion
  Truncated,        // file ends inside the preamble or header
  SizeMismatch,     // payload length disagrees with the header
  Parse,            // malformed JSON or field values
  MissingFile,      // manifest entry does not exist
  HashMismatch,     // manifest config hash differs
};

std::string_view io_error_kind_name(IoErrorKind kind);

class IoError : public std::runtime_error {
 public:
  IoError(IoErrorKind kind, const fs::path& path, const std::string& detail);
  [[nodiscard]] IoErrorKind kind() const { return kind_; }
  [[nodiscard]] const fs::path& path() const { return path_; }

 private:
  IoErrorKind kind_;
  fs::path path_;
};

void write_label_map(const fs::path& path, const LabelMap& map);
LabelMap read_label_map(const fs::path& path);

void write_latent(const fs::path& path, const Latent& z);
Latent read_latent(const fs::path& path);

void write_heatmap(const fs::path& path, const Heatmap& h);
Heatmap read_heatmap(const fs::path& path);

/// Parsed preamble and header of a .sib file; validates sizes.
json read_header(const fs::path& path);

// ---- manifest ------------------------------------------------------------------

struct Manifest {
  std::uint32_t version = kFormatVersion;
  std::vector<std::string> files;  // relative to the manifest's directory
  std::vector<Provenance> provenance;
  std::string config_hash;
};

/// FNV-1a 64 of the compact JSON dump, as 16 hex digits.
std::string config_hash(const json& config);

void write_manifest(const fs::path& path, const Manifest& m);
Manifest read_manifest(const fs::path& path);
/// Throws IoError when a listed file is missing or unreadable, or when
/// `expected_hash` is non-empty and differs.
void verify_manifest(const fs::path& path, const Manifest& m, const std::string& expected_hash = {});

// ---- JSON ----------------------------------------------------------------------

json to_json(const Provenance& p);
Provenance provenance_from_json(const json& j);

json to_json(const ExperimentConfig& c);
/// Starts from the preset named by "preset" (default "desk") and applies the
/// remaining keys. Unknown keys are rejected.
ExperimentConfig config_from_json(const json& j);
ExperimentConfig read_config(const fs::path& path);
void write_json(const fs::path& path, const json& j);
json read_json(const fs::path& path);

json to_json(const CohortReport& r);
CohortReport report_from_json(const json& j);

/// One row per report: name, reference, size, 12 per-check failure counts,
/// violation rates, precision, recall, fd (empty cells when absent).
void write_reports_csv(const fs::path& path, const std::vector<CohortReport>& reports);
std::vector<std::string> report_csv_columns();

// ---- PNG -----------------------------------------------------------------------

/// Mid-plane (z = nz / 2) slice with a fixed tissue palette, `scale` pixels per voxel.
void write_label_slice_png(const fs::path& path, const LabelMap& map, int scale = 4);
/// Mid-plane slice of a masked heatmap difference: blue < 0 < red, masked
/// cells grey.
void write_heatmap_slice_png(const fs::path& path, const HeatmapDiff& d, int scale = 4);

}  // namespace sibgen::io
