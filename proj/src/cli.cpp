#include "sibgen/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "sibgen/io.hpp"
#include "sibgen/parallel.hpp"
#include "sibgen/pipelines.hpp"
#include "sibgen/stats.hpp"

namespace sibgen {

namespace {

namespace fs = std::filesystem;
using io::json;

struct CliError : std::runtime_error {
  CliError(std::string k, const std::string& msg, int c)
      : std::runtime_error(msg), kind(std::move(k)), code(c) {}
  std::string kind;
  int code;
};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += (c == '\n') ? ' ' : c;
  }
  return out;
}

struct Common {
  std::uint64_t seed = 0;
  std::string config;
  std::string preset;
  int workers = 0;
  std::string out;
  int steps = 0;
  int count = 0;
};

ExperimentConfig load_config(const Common& c) {
  ExperimentConfig cfg;
  try {
    if (!c.config.empty()) {
      cfg = io::read_config(c.config);
    } else {
      cfg = ExperimentConfig::preset_named(c.preset.empty() ? "desk" : c.preset);
    }
    cfg.master_seed = c.seed;
    if (c.steps > 0) cfg.steps = c.steps;
    cfg.validate();
  } catch (const io::IoError& e) {
    throw CliError(e.kind() == io::IoErrorKind::Parse ? "config" : "io", e.what(), e.kind() == io::IoErrorKind::Parse ? 4 : 3);
  } catch (const std::invalid_argument& e) {
    throw CliError("config", e.what(), 4);
  }
  return cfg;
}

int workers_of(const Common& c) { return c.workers > 0 ? c.workers : default_workers(); }

/// Creates `dir` if needed; refuses one that already has entries.
fs::path fresh_dir(const std::string& dir) {
  if (dir.empty()) throw CliError("usage", "--out is required", 2);
  const fs::path p(dir);
  if (fs::exists(p)) {
    if (!fs::is_directory(p)) throw CliError("io", "output path exists and is not a directory: " + dir, 3);
    if (!fs::is_empty(p)) throw CliError("io", "output directory is not empty: " + dir, 3);
  }
  fs::create_directories(p);
  return p;
}

std::string member_name(std::size_t i) {
  std::ostringstream ss;
  ss << "members/" << std::setw(6) << std::setfill('0') << i << ".sib";
  return ss.str();
}

/// Writes members, per-member PNG slices for the first few, features, the
/// config snapshot and the manifest.
void write_cohort(const fs::path& dir, const ExperimentConfig& cfg, const MemberSet& m,
                  int png_count = 4) {
  fs::create_directories(dir / "members");
  fs::create_directories(dir / "slices");
  io::Manifest man;
  const json cj = io::to_json(cfg);
  man.config_hash = io::config_hash(cj);
  io::write_json(dir / "config.json", cj);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const std::string name = member_name(i);
    io::write_label_map(dir / name, m.cohort[i]);
    man.files.push_back(name);
    man.provenance.push_back(m.cohort.provenance()[i]);
    if (static_cast<int>(i) < png_count) {
      std::ostringstream png;
      png << "slices/" << std::setw(6) << std::setfill('0') << i << ".png";
      io::write_label_slice_png(dir / png.str(), m.cohort[i]);
    }
  }
  std::ofstream f(dir / "features.csv");
  f << "member,lv_vol,lv_major,lv_minor,rv_vol,rv_major,rv_minor,la_vol,la_major,la_minor,ra_vol,"
       "ra_major,ra_minor,violations\n";
  f << std::setprecision(17);
  for (std::size_t i = 0; i < m.size(); ++i) {
    f << i;
    for (Eigen::Index j = 0; j < m.features[i].size(); ++j) f << ',' << m.features[i][j];
    f << ',' << m.topology[i].violation_count() << '\n';
  }
  io::write_manifest(dir / "manifest.json", man);
}

void write_reports(const fs::path& dir, const std::vector<CohortReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(io::to_json(r));
  io::write_json(dir / "report.json", arr);
  io::write_reports_csv(dir / "report.csv", reports);
}

/// Reads a results directory written by this tool back into a member set.
MemberSet load_cohort(const std::string& dir, int workers) {
  const fs::path mpath = fs::path(dir) / "manifest.json";
  const io::Manifest man = io::read_manifest(mpath);
  io::verify_manifest(mpath, man);
  std::vector<LabelMap> maps;
  for (const auto& f : man.files) maps.push_back(io::read_label_map(fs::path(dir) / f));
  std::vector<Provenance> prov = man.provenance;
  prov.resize(maps.size());
  return measure(std::move(maps), std::move(prov), workers);
}

std::set<TissueId> tissue_set(const std::string& list) {
  std::set<TissueId> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(tissue_from_name(item));
  }
  return out;
}

void add_common(CLI::App* sub, Common& c, bool with_steps, bool with_count) {
  sub->add_option("--seed", c.seed, "Master seed")->capture_default_str();
  sub->add_option("--config", c.config, "ExperimentConfig JSON file")->check(CLI::ExistingFile);
  sub->add_option("--preset", c.preset, "Preset when no --config is given (full, desk, acceptance)");
  sub->add_option("--workers", c.workers, "Worker threads (default: SIBGEN_WORKERS or all cores)");
  sub->add_option("--out", c.out, "Results directory (created; must be empty)")->required();
  if (with_steps) sub->add_option("--steps", c.steps, "Sampler steps (overrides config)");
  if (with_count) sub->add_option("--count", c.count, "Cohort size (overrides config)");
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Digital-sibling generation with latent diffusion on cardiac label maps", "sibgen"};
  app.require_subcommand(1);
  Common c;
  double psi = 0.5;
  std::string seed_map, preserve, edit, data, reference, axis = "psi";
  double threshold_ml = -1.0;
  std::function<void()> action;

  auto* gen = app.add_subcommand("phantom-gen", "Draw a phantom cohort from the population");
  add_common(gen, c, false, true);
  gen->callback([&] {
    action = [&] {
      const ExperimentConfig cfg = load_config(c);
      const int n = c.count > 0 ? c.count : cfg.real_size;
      const fs::path dir = fresh_dir(c.out);
      const MemberSet m =
          phantom_cohort(cfg.population, cfg.master_seed, kRealCohortTag, n, "phantom", workers_of(c));
      write_cohort(dir, cfg, m);
      out << "wrote " << m.size() << " phantoms to " << dir.string() << '\n';
    };
  });

  auto* smp = app.add_subcommand("sample", "Unconditional generation");
  add_common(smp, c, true, true);
  smp->callback([&] {
    action = [&] {
      const ExperimentConfig cfg = load_config(c);
      const fs::path dir = fresh_dir(c.out);
      const Experiment exp(cfg, workers_of(c));
      const auto res = run_unconditional(exp, c.count > 0 ? c.count : cfg.unconditional_size);
      write_cohort(dir, cfg, res.members);
      if (res.report) write_reports(dir, {*res.report});
      io::write_json(dir / "rare_mode.json", json{{"rv_cut_ml", res.rare_rv_cut},
                                                  {"rare_count", res.rare_count},
                                                  {"rare_share", res.rare_share},
                                                  {"rare_weight", cfg.population.rare_weight},
                                                  {"p_at_least", res.p_over}});
      out << "wrote " << res.members.size() << " samples to " << dir.string() << '\n';
    };
  });

  auto seed_of = [&](const Experiment& exp) {
    if (seed_map.empty()) return select_rare_seed(exp);
    return seed_from_map(exp, fs::path(seed_map).stem().string(), io::read_label_map(seed_map),
                         static_cast<std::size_t>(-1));
  };

  auto* pe = app.add_subcommand("perturb-edit", "Perturb-denoise edits of one seed map");
  add_common(pe, c, true, true);
  pe->add_option("--psi", psi, "Sampling ratio in (0, 1]")->capture_default_str();
  pe->add_option("--seed-map", seed_map, "Seed label map (.sib); default is the rare-mode reference member")
      ->check(CLI::ExistingFile);
  pe->callback([&] {
    action = [&] {
      PerturbSpec{psi}.validate();
      const ExperimentConfig cfg = load_config(c);
      const fs::path dir = fresh_dir(c.out);
      const Experiment exp(cfg, workers_of(c));
      const Seed seed = seed_of(exp);
      const auto res = run_psi_sweep(exp, {seed}, {psi}, c.count > 0 ? c.count : cfg.edit_cohort_size);
      const auto& coh = res.cohorts.front();
      write_cohort(dir, cfg, coh.members);
      write_reports(dir, {coh.report});
      io::write_label_map(dir / "seed.sib", seed.map);
      io::write_heatmap_slice_png(dir / "heatmap_diff.png", coh.heatmap);
      io::write_json(dir / "spread.json", json{{"psi", psi},
                                               {"lv_abs_dev_mean_ml", coh.lv_abs_dev_mean},
                                               {"lv_abs_dev_se_ml", coh.lv_abs_dev_se},
                                               {"rv_mean_ml", coh.rv_mean}});
      out << "wrote " << coh.members.size() << " siblings to " << dir.string() << '\n';
    };
  });

  auto* le = app.add_subcommand("local-edit", "Masked (in-painting) edits of one seed map");
  add_common(le, c, true, true);
  le->add_option("--seed-map", seed_map, "Seed label map (.sib); default is the rare-mode reference member")
      ->check(CLI::ExistingFile);
  auto* pres = le->add_option("--preserve", preserve, "Comma list of tissues kept fixed (e.g. RV,LA,RA,Ao)");
  auto* ed = le->add_option("--edit", edit, "Comma list of tissues to regenerate (e.g. LV)");
  pres->excludes(ed);
  le->callback([&] {
    action = [&] {
      if (preserve.empty() && edit.empty()) throw CliError("usage", "local-edit needs --preserve or --edit", 2);
      const ExperimentConfig cfg = load_config(c);
      EditMaskSpec spec;
      try {
        if (!edit.empty()) {
          spec = edit_mask_spec(tissue_set(edit), cfg.mask_dilation);
        } else {
          spec.preserve = tissue_set(preserve);
          spec.dilation_rounds = cfg.mask_dilation;
        }
        spec.validate();
      } catch (const std::invalid_argument& e) {
        throw CliError("usage", e.what(), 2);
      }
      const fs::path dir = fresh_dir(c.out);
      const Experiment exp(cfg, workers_of(c));
      const Seed seed = seed_of(exp);
      const LatentMask mask = build_mask(seed.map, spec, cfg.codec_factor);
      const PLatent z_seed = exp.encode(seed.map);
      const auto n = static_cast<std::size_t>(c.count > 0 ? c.count : cfg.mask_cohort_size);
      std::vector<LabelMap> maps(n);
      std::vector<Provenance> prov(n);
      const std::uint64_t tag = splitmix64(0x6c6f63616cULL ^ mask.count());
      parallel_for(n, exp.workers(), [&](std::size_t i) {
        RngStream rng = exp.stream(tag, i);
        maps[i] = exp.decode(local_edit_latent(z_seed, mask, exp.denoiser(), exp.schedule(), rng, cfg.solver));
        prov[i] = Provenance{seed.name, "local", {}, rng.engine_seed(), i};
      });
      const MemberSet m = measure(std::move(maps), std::move(prov), exp.workers());
      write_cohort(dir, cfg, m);
      write_reports(dir, {exp.report("local_edit", m)});
      io::write_label_map(dir / "seed.sib", seed.map);
      io::write_heatmap_slice_png(
          dir / "heatmap_diff.png",
          heatmap_diff(occupancy_heatmap(std::vector<LabelMap>{seed.decoded}), occupancy_heatmap(m.cohort)));
      out << "wrote " << m.size() << " siblings (" << mask.count() << " free latent cells) to " << dir.string()
          << '\n';
    };
  });

  auto* ev = app.add_subcommand("evaluate", "Topology, precision/recall and FD of a results directory");
  add_common(ev, c, false, false);
  ev->add_option("--data", data, "Results directory to evaluate")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--reference", reference, "Reference results directory (default: the decoded real cohort)")
      ->check(CLI::ExistingDirectory);
  ev->callback([&] {
    action = [&] {
      const ExperimentConfig cfg = load_config(c);
      const fs::path dir = fresh_dir(c.out);
      const int w = workers_of(c);
      const MemberSet m = load_cohort(data, w);
      CohortReport r;
      if (!reference.empty()) {
        r = make_report(fs::path(data).filename().string(), m, fs::path(reference).filename().string(),
                        load_cohort(reference, w), cfg.pr_k, cfg.fd_ridge);
      } else {
        const Experiment exp(cfg, w);
        r = exp.report(fs::path(data).filename().string(), m);
      }
      write_reports(dir, {r});
      out << "evaluated " << m.size() << " members; report in " << dir.string() << '\n';
    };
  });

  auto* au = app.add_subcommand("augment", "Three filtered augmentation strategies against the large-RV target");
  add_common(au, c, true, true);
  au->add_option("--threshold-ml", threshold_ml, "RV volume filter (ml); default is the reference quantile rule")
      ->check(CLI::NonNegativeNumber);
  au->callback([&] {
    action = [&] {
      ExperimentConfig cfg = load_config(c);
      if (threshold_ml >= 0) cfg.threshold_ml = threshold_ml;
      const fs::path dir = fresh_dir(c.out);
      const Experiment exp(cfg, workers_of(c));
      const auto res = run_augmentation(exp, c.count);
      std::vector<CohortReport> reports;
      write_cohort(dir / "target", cfg, res.target);
      for (const auto& s : res.strategies) {
        write_cohort(dir / std::string(strategy_name(s.strategy)), cfg, s.members);
        reports.push_back(s.report);
      }
      write_reports(dir, reports);
      json gen = json::object();
      for (const auto& s : res.strategies) gen[std::string(strategy_name(s.strategy))] = s.generated;
      io::write_json(dir / "filter.json", json{{"threshold_ml", res.threshold_ml},
                                               {"target_size", res.target.size()},
                                               {"candidates_drawn", gen}});
      out << "wrote augmentation cohorts (threshold " << res.threshold_ml << " ml) to " << dir.string() << '\n';
    };
  });

  auto* sw = app.add_subcommand("sweep", "Parameter sweeps: psi, mask, or sensitivity (steps and size)");
  add_common(sw, c, true, true);
  sw->add_option("--axis", axis, "psi | mask | sensitivity")
      ->check(CLI::IsMember({"psi", "mask", "sensitivity"}))
      ->capture_default_str();
  sw->callback([&] {
    action = [&] {
      const ExperimentConfig cfg = load_config(c);
      const fs::path dir = fresh_dir(c.out);
      const Experiment exp(cfg, workers_of(c));
      if (axis == "sensitivity") {
        const auto rows = run_sensitivity(exp, cfg.sensitivity_steps, cfg.sensitivity_sizes);
        std::ofstream f(dir / "sensitivity.csv");
        f << "axis,steps,size,fd,fd_se,precision,recall,recall_se,violation_per_check_percent,violation_per_map_percent\n"
          << std::setprecision(17);
        for (const auto& r : rows) {
          f << r.axis << ',' << r.steps << ',' << r.size << ',';
          if (r.fd) f << *r.fd;
          f << ',' << r.fd_se << ',' << r.precision << ',' << r.recall << ',' << r.recall_se << ','
            << r.violation_per_check << ','
            << r.violation_per_map << '\n';
        }
        out << "wrote " << rows.size() << " sensitivity rows to " << dir.string() << '\n';
        return;
      }
      auto seeds = select_archetype_seeds(exp);
      seeds.push_back(select_rare_seed(exp));
      std::vector<CohortReport> reports;
      std::ofstream f(dir / (axis + "_summary.csv"));
      f << std::setprecision(17);
      if (axis == "psi") {
        const auto res = run_psi_sweep(exp, seeds, cfg.psi_grid, c.count > 0 ? c.count : cfg.edit_cohort_size);
        f << "seed,psi,lv_abs_dev_mean_ml,lv_abs_dev_se_ml,rv_mean_ml\n";
        for (const auto& co : res.cohorts) {
          std::ostringstream name;
          name << co.seed << "_psi" << co.psi;
          write_cohort(dir / name.str(), cfg, co.members, 1);
          io::write_heatmap_slice_png(dir / name.str() / "heatmap_diff.png", co.heatmap);
          reports.push_back(co.report);
          f << co.seed << ',' << co.psi << ',' << co.lv_abs_dev_mean << ',' << co.lv_abs_dev_se << ','
            << co.rv_mean << '\n';
        }
      } else {
        const auto res = run_mask_sweep(exp, seeds, default_masks(), c.count > 0 ? c.count : cfg.mask_cohort_size);
        f << "seed,mask,free_cells,lv_vol_mean_ml,rv_vol_mean_ml,la_vol_mean_ml,ra_vol_mean_ml\n";
        for (const auto& co : res.cohorts) {
          write_cohort(dir / (co.seed + "_" + co.mask), cfg, co.members, 1);
          io::write_heatmap_slice_png(dir / (co.seed + "_" + co.mask) / "heatmap_diff.png", co.heatmap);
          reports.push_back(co.report);
          f << co.seed << ',' << co.mask << ',' << co.mask_cells;
          for (int j : {0, 3, 6, 9}) f << ',' << stats::mean(co.members.feature(j));
          f << '\n';
        }
      }
      write_reports(dir, reports);
      out << "wrote " << reports.size() << " " << axis << " cohorts to " << dir.string() << '\n';
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "sibgen-error kind=usage message=\"" << escape(e.what()) << "\"\n";
    return 2;
  }

  try {
    if (action) action();
    return 0;
  } catch (const CliError& e) {
    err << "sibgen-error kind=" << e.kind << " message=\"" << escape(e.what()) << "\"\n";
    return e.code;
  } catch (const io::IoError& e) {
    err << "sibgen-error kind=io message=\"" << escape(e.what()) << "\"\n";
    return 3;
  } catch (const fs::filesystem_error& e) {
    err << "sibgen-error kind=io message=\"" << escape(e.what()) << "\"\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    err << "sibgen-error kind=config message=\"" << escape(e.what()) << "\"\n";
    return 4;
  } catch (const std::exception& e) {
    err << "sibgen-error kind=pipeline message=\"" << escape(e.what()) << "\"\n";
    return 1;
  }
}

}  // namespace sibgen
