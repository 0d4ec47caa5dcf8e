#include "sibgen/io.hpp"

#include <png.h>

#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <memory>
#include <set>
#include <sstream>

namespace sibgen::io {

std::string_view io_error_kind_name(IoErrorKind kind) {
  switch (kind) {
    case IoErrorKind::Open: return "open";
    case IoErrorKind::BadMagic: return "bad_magic";
    case IoErrorKind::VersionMismatch: return "version_mismatch";
    case IoErrorKind::Truncated: return "truncated";
    case IoErrorKind::SizeMismatch: return "size_mismatch";
    case IoErrorKind::Parse: return "parse";
    case IoErrorKind::MissingFile: return "missing_file";
    case IoErrorKind::HashMismatch: return "hash_mismatch";
  }
  return "unknown";
}

IoError::IoError(IoErrorKind kind, const fs::path& path, const std::string& detail)
    : std::runtime_error(std::string(io_error_kind_name(kind)) + ": " + path.string() + ": " +
                         detail),
      kind_(kind),
      path_(path) {}

namespace {

constexpr std::array<char, 8> kMagic{'S', 'I', 'B', 'G', 'E', 'N', '0', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

json dims_json(Dims3 d) { return json::array({d.nx, d.ny, d.nz}); }

Dims3 dims_from(const json& j, const fs::path& path) {
  if (!j.is_array() || j.size() != 3) throw IoError(IoErrorKind::Parse, path, "dims must be [nx, ny, nz]");
  Dims3 d{j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
  if (!d.positive()) throw IoError(IoErrorKind::Parse, path, "dims must be positive");
  return d;
}

void write_file(const fs::path& path, json header, const std::string& payload) {
  header["version"] = kFormatVersion;
  header["payload_bytes"] = payload.size();
  const std::string h = header.dump();
  std::string out(kMagic.begin(), kMagic.end());
  put_u32(out, static_cast<std::uint32_t>(h.size()));
  out += h;
  out += payload;
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(IoErrorKind::Open, path, "cannot open for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError(IoErrorKind::Open, path, "write failed");
}

std::string slurp(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError(IoErrorKind::Open, path, "cannot open for reading");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct Parsed {
  json header;
  std::string payload;
};

Parsed parse_file(const fs::path& path, std::string_view kind) {
  const std::string bytes = slurp(path);
  if (bytes.size() < kMagic.size() + 4) {
    if (bytes.size() >= kMagic.size() && !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
      throw IoError(IoErrorKind::BadMagic, path, "not a sibgen volume");
    }
    throw IoError(IoErrorKind::Truncated, path, "file ends inside the preamble");
  }
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw IoError(IoErrorKind::BadMagic, path, "not a sibgen volume");
  }
  std::uint32_t hlen = 0;
  for (int i = 3; i >= 0; --i) {
    hlen = (hlen << 8) | static_cast<unsigned char>(bytes[kMagic.size() + static_cast<std::size_t>(i)]);
  }
  const std::size_t start = kMagic.size() + 4;
  if (bytes.size() < start + hlen) throw IoError(IoErrorKind::Truncated, path, "file ends inside the header");
  Parsed p;
  try {
    p.header = json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                           bytes.begin() + static_cast<std::ptrdiff_t>(start + hlen));
  } catch (const json::exception& e) {
    throw IoError(IoErrorKind::Parse, path, std::string("header: ") + e.what());
  }
  if (!p.header.is_object() || !p.header.contains("version") || !p.header.contains("kind") ||
      !p.header.contains("payload_bytes")) {
    throw IoError(IoErrorKind::Parse, path, "header lacks version, kind or payload_bytes");
  }
  const auto version = p.header["version"].get<std::uint32_t>();
  if (version != kFormatVersion) {
    throw IoError(IoErrorKind::VersionMismatch, path,
                  "format version " + std::to_string(version) + ", expected " +
                      std::to_string(kFormatVersion));
  }
  if (!kind.empty() && p.header["kind"].get<std::string>() != kind) {
    throw IoError(IoErrorKind::Parse, path,
                  "kind '" + p.header["kind"].get<std::string>() + "', expected '" +
                      std::string(kind) + "'");
  }
  const auto declared = p.header["payload_bytes"].get<std::uint64_t>();
  const std::size_t actual = bytes.size() - start - hlen;
  if (declared != actual) {
    throw IoError(IoErrorKind::SizeMismatch, path,
                  "header declares " + std::to_string(declared) + " payload bytes, file has " +
                      std::to_string(actual));
  }
  p.payload = bytes.substr(start + hlen);
  return p;
}

std::string latent_payload(const Latent& z) {
  std::string out;
  out.reserve(static_cast<std::size_t>(z.values.size()) * 8);
  for (Eigen::Index i = 0; i < z.values.size(); ++i) put_u64(out, std::bit_cast<std::uint64_t>(z.values[i]));
  return out;
}

Latent latent_from(const Parsed& p, const fs::path& path) {
  const Dims3 d = dims_from(p.header.at("dims"), path);
  const int channels = p.header.at("channels").get<int>();
  if (p.header.at("dtype").get<std::string>() != "f64") throw IoError(IoErrorKind::Parse, path, "dtype must be f64");
  if (channels <= 0) throw IoError(IoErrorKind::Parse, path, "channels must be positive");
  const std::size_t n = static_cast<std::size_t>(channels) * d.size();
  if (p.payload.size() != n * 8) {
    throw IoError(IoErrorKind::SizeMismatch, path,
                  "dims need " + std::to_string(n * 8) + " payload bytes, header declares " +
                      std::to_string(p.payload.size()));
  }
  Latent z(channels, d, p.header.value("sigma_tag", 0.0));
  const auto* raw = reinterpret_cast<const unsigned char*>(p.payload.data());
  for (std::size_t i = 0; i < n; ++i) {
    z.values[static_cast<Eigen::Index>(i)] = std::bit_cast<double>(get_u64(raw + 8 * i));
  }
  return z;
}

}  // namespace

json read_header(const fs::path& path) { return parse_file(path, {}).header; }

void write_label_map(const fs::path& path, const LabelMap& map) {
  const auto raw = map.raw();
  json h{{"kind", "labelmap"},
         {"dims", dims_json(map.dims())},
         {"dtype", "u8"},
         {"voxel_size_mm", map.voxel_size()}};
  write_file(path, std::move(h), std::string(raw.begin(), raw.end()));
}

LabelMap read_label_map(const fs::path& path) {
  const Parsed p = parse_file(path, "labelmap");
  try {
    const Dims3 d = dims_from(p.header.at("dims"), path);
    if (p.header.at("dtype").get<std::string>() != "u8") throw IoError(IoErrorKind::Parse, path, "dtype must be u8");
    if (p.payload.size() != d.size()) {
      throw IoError(IoErrorKind::SizeMismatch, path,
                    "dims need " + std::to_string(d.size()) + " payload bytes, header declares " +
                        std::to_string(p.payload.size()));
    }
    std::vector<std::uint8_t> labels(p.payload.begin(), p.payload.end());
    for (auto v : labels) {
      if (v >= kTissueCount) throw IoError(IoErrorKind::Parse, path, "label out of range");
    }
    return LabelMap(d, p.header.at("voxel_size_mm").get<double>(), std::move(labels));
  } catch (const json::exception& e) {
    throw IoError(IoErrorKind::Parse, path, e.what());
  }
}

void write_latent(const fs::path& path, const Latent& z) {
  json h{{"kind", "latent"},
         {"dims", dims_json(z.dims)},
         {"channels", z.channels},
         {"dtype", "f64"},
         {"sigma_tag", z.sigma_tag}};
  write_file(path, std::move(h), latent_payload(z));
}

Latent read_latent(const fs::path& path) {
  const Parsed p = parse_file(path, "latent");
  try {
    return latent_from(p, path);
  } catch (const json::exception& e) {
    throw IoError(IoErrorKind::Parse, path, e.what());
  }
}

void write_heatmap(const fs::path& path, const Heatmap& h) {
  json head{{"kind", "heatmap"},
            {"dims", dims_json(h.occupancy.dims)},
            {"channels", h.occupancy.channels},
            {"dtype", "f64"}};
  write_file(path, std::move(head), latent_payload(h.occupancy));
}

Heatmap read_heatmap(const fs::path& path) {
  const Parsed p = parse_file(path, "heatmap");
  try {
    return Heatmap{latent_from(p, path)};
  } catch (const json::exception& e) {
    throw IoError(IoErrorKind::Parse, path, e.what());
  }
}

// ---- manifest ------------------------------------------------------------------

std::string config_hash(const json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

json to_json(const Provenance& p) {
  return json{{"seed_id", p.seed_id},
              {"method", p.method},
              {"params", p.params},
              {"rng_seed", p.rng_seed},
              {"stream_index", p.stream_index}};
}

Provenance provenance_from_json(const json& j) {
  Provenance p;
  p.seed_id = j.at("seed_id").get<std::string>();
  p.method = j.at("method").get<std::string>();
  p.params = j.at("params").get<std::map<std::string, double>>();
  p.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  p.stream_index = j.at("stream_index").get<std::uint64_t>();
  return p;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError(IoErrorKind::Open, path, "cannot open for writing");
  f << j.dump(2) << '\n';
  if (!f) throw IoError(IoErrorKind::Open, path, "write failed");
}

json read_json(const fs::path& path) {
  const std::string text = slurp(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(IoErrorKind::Parse, path, e.what());
  }
}

void write_manifest(const fs::path& path, const Manifest& m) {
  json prov = json::array();
  for (const auto& p : m.provenance) prov.push_back(to_json(p));
  write_json(path, json{{"version", m.version},
                        {"files", m.files},
                        {"provenance", prov},
                        {"config_hash", m.config_hash}});
}

Manifest read_manifest(const fs::path& path) {
  const json j = read_json(path);
  try {
    Manifest m;
    m.version = j.at("version").get<std::uint32_t>();
    if (m.version != kFormatVersion) {
      throw IoError(IoErrorKind::VersionMismatch, path,
                    "manifest version " + std::to_string(m.version) + ", expected " +
                        std::to_string(kFormatVersion));
    }
    m.files = j.at("files").get<std::vector<std::string>>();
    for (const auto& p : j.at("provenance")) m.provenance.push_back(provenance_from_json(p));
    m.config_hash = j.at("config_hash").get<std::string>();
    return m;
  } catch (const json::exception& e) {
    throw IoError(IoErrorKind::Parse, path, e.what());
  }
}

void verify_manifest(const fs::path& path, const Manifest& m, const std::string& expected_hash) {
  if (!expected_hash.empty() && expected_hash != m.config_hash) {
    throw IoError(IoErrorKind::HashMismatch, path,
                  "config hash " + m.config_hash + ", expected " + expected_hash);
  }
  const fs::path dir = path.parent_path();
  for (const auto& name : m.files) {
    const fs::path f = dir / name;
    if (!fs::exists(f)) throw IoError(IoErrorKind::MissingFile, f, "listed in " + path.string());
    const auto ext = f.extension().string();
    if (ext == ".sib") {
      (void)read_header(f);
    } else if (ext == ".json") {
      (void)read_json(f);
    }
  }
}

// ---- config --------------------------------------------------------------------

namespace {

json lognormal_json(const LogNormalParam& p) { return json::array({p.location, p.scale}); }

LogNormalParam lognormal_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("log-normal parameter must be [median, log_std]");
  return {j[0].get<double>(), j[1].get<double>()};
}

json lognormal3_json(const LogNormal3& p) {
  return json::array({lognormal_json(p[0]), lognormal_json(p[1]), lognormal_json(p[2])});
}

LogNormal3 lognormal3_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("semi-axis parameters must have 3 entries");
  return {lognormal_from(j[0]), lognormal_from(j[1]), lognormal_from(j[2])};
}

json population_json(const PopulationSpec& p) {
  return json{{"lv_semi", lognormal3_json(p.lv_semi)},
              {"rv_semi", lognormal3_json(p.rv_semi)},
              {"la_semi", lognormal3_json(p.la_semi)},
              {"ra_semi", lognormal3_json(p.ra_semi)},
              {"myo_thickness", lognormal_json(p.myo_thickness)},
              {"ao_radius", lognormal_json(p.ao_radius)},
              {"ao_length", lognormal_json(p.ao_length)},
              {"jitter_mm", p.jitter_mm},
              {"rare_weight", p.rare_weight},
              {"rare_rv_scale", json::array({p.rare_rv_scale.x(), p.rare_rv_scale.y(), p.rare_rv_scale.z()})},
              {"dims", dims_json(p.dims)},
              {"voxel_size_mm", p.voxel_size_mm},
              {"max_attempts", p.max_attempts}};
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw std::invalid_argument("unknown key '" + k + "' in " + where);
  }
}

void apply_population(PopulationSpec& p, const json& j) {
  reject_unknown(j,
                 {"lv_semi", "rv_semi", "la_semi", "ra_semi", "myo_thickness", "ao_radius",
                  "ao_length", "jitter_mm", "rare_weight", "rare_rv_scale", "dims",
                  "voxel_size_mm", "max_attempts"},
                 "population");
  if (j.contains("lv_semi")) p.lv_semi = lognormal3_from(j["lv_semi"]);
  if (j.contains("rv_semi")) p.rv_semi = lognormal3_from(j["rv_semi"]);
  if (j.contains("la_semi")) p.la_semi = lognormal3_from(j["la_semi"]);
  if (j.contains("ra_semi")) p.ra_semi = lognormal3_from(j["ra_semi"]);
  if (j.contains("myo_thickness")) p.myo_thickness = lognormal_from(j["myo_thickness"]);
  if (j.contains("ao_radius")) p.ao_radius = lognormal_from(j["ao_radius"]);
  if (j.contains("ao_length")) p.ao_length = lognormal_from(j["ao_length"]);
  if (j.contains("jitter_mm")) p.jitter_mm = j["jitter_mm"].get<double>();
  if (j.contains("rare_weight")) p.rare_weight = j["rare_weight"].get<double>();
  if (j.contains("rare_rv_scale")) {
    const auto& s = j["rare_rv_scale"];
    if (!s.is_array() || s.size() != 3) throw std::invalid_argument("rare_rv_scale must have 3 entries");
    p.rare_rv_scale = {s[0].get<double>(), s[1].get<double>(), s[2].get<double>()};
  }
  if (j.contains("dims")) p.dims = dims_from(j["dims"], "population.dims");
  if (j.contains("voxel_size_mm")) p.voxel_size_mm = j["voxel_size_mm"].get<double>();
  if (j.contains("max_attempts")) p.max_attempts = j["max_attempts"].get<int>();
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  return json{{"preset", c.preset},
              {"master_seed", c.master_seed},
              {"population", population_json(c.population)},
              {"codec_factor", c.codec_factor},
              {"latent_scale", c.latent_scale},
              {"real_size", c.real_size},
              {"unconditional_size", c.unconditional_size},
              {"edit_cohort_size", c.edit_cohort_size},
              {"mask_cohort_size", c.mask_cohort_size},
              {"augment_size", c.augment_size},
              {"budget_factor", c.budget_factor},
              {"steps", c.steps},
              {"rho", c.rho},
              {"sigma_min", c.sigma_min},
              {"sigma_max", c.sigma_max},
              {"solver", std::string(solver_order_name(c.solver))},
              {"psi_grid", c.psi_grid},
              {"mask_dilation", c.mask_dilation},
              {"denoiser", std::string(denoiser_kind_name(c.denoiser))},
              {"kde_bandwidth", c.kde_bandwidth},
              {"gaussian_rank", c.gaussian_rank},
              {"gaussian_residual_std", c.gaussian_residual_std},
              {"threshold_ml", c.threshold_ml},
              {"threshold_quantile", c.threshold_quantile},
              {"bands",
               {{"up", c.bands.up},
                {"down", c.bands.down},
                {"mid_lo", c.bands.mid_lo},
                {"mid_hi", c.bands.mid_hi},
                {"rare_rank", c.bands.rare_rank}}},
              {"pr_k", c.pr_k},
              {"fd_ridge", c.fd_ridge},
              {"sensitivity_steps", c.sensitivity_steps},
              {"sensitivity_sizes", c.sensitivity_sizes}};
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  reject_unknown(j,
                 {"preset", "master_seed", "population", "codec_factor", "latent_scale",
                  "real_size", "unconditional_size", "edit_cohort_size", "mask_cohort_size",
                  "augment_size", "budget_factor", "steps", "rho", "sigma_min", "sigma_max",
                  "solver", "psi_grid", "mask_dilation", "denoiser", "kde_bandwidth",
                  "gaussian_rank", "gaussian_residual_std", "threshold_ml", "threshold_quantile",
                  "bands", "pr_k", "fd_ridge", "sensitivity_steps", "sensitivity_sizes"},
                 "config");
  try {
    ExperimentConfig c = ExperimentConfig::preset_named(j.value("preset", std::string("desk")));
    auto num = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j[key].get<std::remove_reference_t<decltype(field)>>();
    };
    num("master_seed", c.master_seed);
    if (j.contains("population")) apply_population(c.population, j["population"]);
    num("codec_factor", c.codec_factor);
    num("latent_scale", c.latent_scale);
    num("real_size", c.real_size);
    num("unconditional_size", c.unconditional_size);
    num("edit_cohort_size", c.edit_cohort_size);
    num("mask_cohort_size", c.mask_cohort_size);
    num("augment_size", c.augment_size);
    num("budget_factor", c.budget_factor);
    num("steps", c.steps);
    num("rho", c.rho);
    num("sigma_min", c.sigma_min);
    num("sigma_max", c.sigma_max);
    if (j.contains("solver")) c.solver = solver_order_from_name(j["solver"].get<std::string>());
    num("psi_grid", c.psi_grid);
    num("mask_dilation", c.mask_dilation);
    if (j.contains("denoiser")) c.denoiser = denoiser_kind_from_name(j["denoiser"].get<std::string>());
    num("kde_bandwidth", c.kde_bandwidth);
    num("gaussian_rank", c.gaussian_rank);
    num("gaussian_residual_std", c.gaussian_residual_std);
    num("threshold_ml", c.threshold_ml);
    num("threshold_quantile", c.threshold_quantile);
    if (j.contains("bands")) {
      const json& b = j["bands"];
      reject_unknown(b, {"up", "down", "mid_lo", "mid_hi", "rare_rank"}, "bands");
      c.bands.up = b.value("up", c.bands.up);
      c.bands.down = b.value("down", c.bands.down);
      c.bands.mid_lo = b.value("mid_lo", c.bands.mid_lo);
      c.bands.mid_hi = b.value("mid_hi", c.bands.mid_hi);
      c.bands.rare_rank = b.value("rare_rank", c.bands.rare_rank);
    }
    num("pr_k", c.pr_k);
    num("fd_ridge", c.fd_ridge);
    num("sensitivity_steps", c.sensitivity_steps);
    num("sensitivity_sizes", c.sensitivity_sizes);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
}

ExperimentConfig read_config(const fs::path& path) {
  const json j = read_json(path);
  try {
    return config_from_json(j);
  } catch (const std::invalid_argument& e) {
    throw IoError(IoErrorKind::Parse, path, e.what());
  }
}

// ---- reports -------------------------------------------------------------------

json to_json(const CohortReport& r) {
  json checks = json::object();
  const auto names = topology_check_names();
  for (std::size_t i = 0; i < names.size(); ++i) checks[names[i]] = r.violations.failures_per_check[i];
  json j{{"name", r.name},
         {"reference", r.reference},
         {"size", r.size},
         {"violations",
          {{"per_check_percent", r.violations.per_check_percent},
           {"per_map_percent", r.violations.per_map_percent},
           {"failures_per_check", checks}}},
         {"morph_mean", std::vector<double>(r.morph_mean.begin(), r.morph_mean.end())},
         {"morph_std", std::vector<double>(r.morph_std.begin(), r.morph_std.end())}};
  j["precision"] = r.pr ? json(r.pr->precision) : json(nullptr);
  j["recall"] = r.pr ? json(r.pr->recall) : json(nullptr);
  j["fd"] = r.fd ? json(*r.fd) : json(nullptr);
  return j;
}

CohortReport report_from_json(const json& j) {
  CohortReport r;
  r.name = j.at("name").get<std::string>();
  r.reference = j.at("reference").get<std::string>();
  r.size = j.at("size").get<std::size_t>();
  const json& v = j.at("violations");
  r.violations.per_check_percent = v.at("per_check_percent").get<double>();
  r.violations.per_map_percent = v.at("per_map_percent").get<double>();
  const auto names = topology_check_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    r.violations.failures_per_check[i] = v.at("failures_per_check").at(names[i]).get<int>();
  }
  const auto mm = j.at("morph_mean").get<std::vector<double>>();
  const auto ms = j.at("morph_std").get<std::vector<double>>();
  if (mm.size() != static_cast<std::size_t>(r.morph_mean.size()) ||
      ms.size() != static_cast<std::size_t>(r.morph_std.size())) {
    throw std::invalid_argument("report: morphology vectors must have 12 entries");
  }
  for (std::size_t i = 0; i < mm.size(); ++i) {
    r.morph_mean[static_cast<Eigen::Index>(i)] = mm[i];
    r.morph_std[static_cast<Eigen::Index>(i)] = ms[i];
  }
  if (!j.at("precision").is_null()) r.pr = PrecisionRecall{j["precision"].get<double>(), j.at("recall").get<double>()};
  if (!j.at("fd").is_null()) r.fd = j["fd"].get<double>();
  return r;
}

std::vector<std::string> report_csv_columns() {
  std::vector<std::string> cols{"name", "reference", "size"};
  for (const auto& n : topology_check_names()) cols.push_back("fail_" + n);
  for (const char* c : {"violation_per_check_percent", "violation_per_map_percent", "precision", "recall", "fd"}) {
    cols.emplace_back(c);
  }
  return cols;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string num(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

}  // namespace

void write_reports_csv(const fs::path& path, const std::vector<CohortReport>& reports) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError(IoErrorKind::Open, path, "cannot open for writing");
  const auto cols = report_csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) f << (i ? "," : "") << cols[i];
  f << '\n';
  for (const auto& r : reports) {
    f << csv_field(r.name) << ',' << csv_field(r.reference) << ',' << r.size;
    for (int c : r.violations.failures_per_check) f << ',' << c;
    f << ',' << num(r.violations.per_check_percent) << ',' << num(r.violations.per_map_percent);
    f << ',' << (r.pr ? num(r.pr->precision) : "") << ',' << (r.pr ? num(r.pr->recall) : "");
    f << ',' << (r.fd ? num(*r.fd) : "") << '\n';
  }
  if (!f) throw IoError(IoErrorKind::Open, path, "write failed");
}

// ---- PNG -----------------------------------------------------------------------

namespace {

using Rgb = std::array<std::uint8_t, 3>;

void write_png(const fs::path& path, int w, int h, const std::vector<std::uint8_t>& rgb) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw IoError(IoErrorKind::Open, path, "cannot open for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError(IoErrorKind::Open, path, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(IoErrorKind::Open, path, "libpng write failed");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < h; ++y) {
    png_write_row(png, rgb.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(w) * 3);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

/// Upsamples an nx x ny cell image (row y = 0 at the top) by `scale`.
template <typename Colour>
void write_slice(const fs::path& path, int nx, int ny, int scale, Colour&& colour) {
  if (scale < 1) throw std::invalid_argument("png scale must be >= 1");
  const int w = nx * scale, h = ny * scale;
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Rgb c = colour(x / scale, ny - 1 - y / scale);
      auto* px = rgb.data() + (static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)) * 3;
      px[0] = c[0];
      px[1] = c[1];
      px[2] = c[2];
    }
  }
  write_png(path, w, h, rgb);
}

constexpr std::array<Rgb, kTissueCount> kPalette{{
    {0, 0, 0},        // background
    {230, 159, 0},    // Ao
    {204, 121, 167},  // Myo
    {0, 114, 178},    // RV
    {213, 94, 0},     // LV
    {86, 180, 233},   // RA
    {240, 228, 66},   // LA
}};

}  // namespace

void write_label_slice_png(const fs::path& path, const LabelMap& map, int scale) {
  const Dims3 d = map.dims();
  const int z = d.nz / 2;
  write_slice(path, d.nx, d.ny, scale,
              [&](int x, int y) { return kPalette[static_cast<std::size_t>(index_of(map.at(x, y, z)))]; });
}

void write_heatmap_slice_png(const fs::path& path, const HeatmapDiff& d, int scale) {
  const int z = d.dims.nz / 2;
  write_slice(path, d.dims.nx, d.dims.ny, scale, [&](int x, int y) -> Rgb {
    const std::size_t i = d.dims.index(x, y, z);
    if (d.masked[i]) return {128, 128, 128};
    const double v = std::clamp(d.diff[static_cast<Eigen::Index>(i)], -1.0, 1.0);
    const auto fade = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - std::abs(v))));
    return v >= 0 ? Rgb{255, fade, fade} : Rgb{fade, fade, 255};
  });
}

}  // namespace sibgen::io
