// cei: batch simulation, metrics, calibration and export for the merging model.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cei/cei.hpp"
#include "cei/source_hash.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace cei;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> mode;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "run configuration (YAML) or a manifest.json to replay");
  cmd->add_option("--seed", o.seed, "base seed");
  cmd->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--mode", o.mode, "stochastic | noise_free");
  cmd->add_option("--out", o.out, "output directory");
}

std::string code_version() { return std::string(kModelVersion) + "+" + std::string(kSourceHash); }

std::string read_text(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream s;
  s << is.rdbuf();
  return s.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << text;
}

/// Config from --config (YAML or manifest) with command-line overrides applied.
RunConfig resolve_config(const Overrides& o) {
  RunConfig cfg;
  if (!o.config.empty()) {
    const fs::path path = o.config;
    if (path.extension() == ".json") {
      const json manifest = json::parse(read_text(path));
      cfg = parse_run_config_text(manifest.at("config").get<std::string>());
    } else {
      cfg = load_run_config(path);
    }
  }
  if (o.seed) cfg.base_seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  if (o.out) cfg.output = *o.out;
  if (o.mode) {
    try {
      cfg.mode = parse_mode(*o.mode);
    } catch (const std::invalid_argument& e) {
      throw ConfigError({std::string("--mode: ") + e.what()});
    }
  }
  return cfg;
}

template <class F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const UnknownConditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "invalid configuration:\n";
    for (const auto& d : e.diagnostics()) std::cerr << "  " << d << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

// ---------------------------------------------------------------------------

int cmd_run(const Overrides& o) {
  const RunConfig cfg = resolve_config(o);
  const fs::path out = cfg.output;
  const fs::path trials_dir = out / "trials";
  fs::create_directories(trials_dir);

  const auto jobs = plan_batch(cfg.parameters.pairs, cfg.conditions, cfg.repetitions, cfg.base_seed);
  struct Summary {
    std::string file;
    Outcome outcome;
    std::optional<double> collision_time;
    std::size_t steps;
  };
  const auto start = std::chrono::steady_clock::now();
  const auto summaries = parallel_map(jobs.size(), cfg.workers, [&](std::size_t i) {
    const BatchJob& job = jobs[i];
    TrialOptions options;
    options.mode = cfg.mode;
    options.incentives_enabled = cfg.incentives;
    TrialLog log = run_trial(job.condition, job.params, job.seed, cfg.model, options);
    log.repetition = job.repetition;
    const std::string name = trial_file_name(log);
    save_trial_log(trials_dir / name, log);
    return Summary{name, log.outcome, log.collision_time, log.steps.size()};
  });
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json manifest;
  manifest["format"] = "cei-manifest/1";
  manifest["code_version"] = code_version();
  manifest["config"] = emit_run_config(cfg);
  manifest["base_seed"] = cfg.base_seed;
  manifest["mode"] = std::string(to_string(cfg.mode));
  json trials = json::array();
  std::ostringstream summary;
  summary << "file,pair,condition,repetition,seed,outcome,collision_time,steps\n";
  int collisions = 0, timeouts = 0;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& j = jobs[i];
    const auto& s = summaries[i];
    trials.push_back({{"file", "trials/" + s.file},
                      {"pair", j.params.pair},
                      {"condition", j.condition.label()},
                      {"repetition", j.repetition},
                      {"seed", j.seed},
                      {"outcome", std::string(to_string(s.outcome))}});
    summary << s.file << ',' << j.params.pair << ',' << j.condition.label() << ',' << j.repetition << ','
            << j.seed << ',' << to_string(s.outcome) << ','
            << (s.collision_time ? format_double(*s.collision_time) : std::string()) << ',' << s.steps << '\n';
    collisions += s.outcome == Outcome::kCollision;
    timeouts += s.outcome == Outcome::kTimeout;
  }
  manifest["trials"] = trials;
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  write_text(out / "summary.csv", summary.str());

  std::printf("%zu trials -> %s (%d collisions, %d timeouts, %.2f s wall, %.3f s/trial)\n", jobs.size(),
              out.string().c_str(), collisions, timeouts, seconds, seconds / std::max<std::size_t>(1, jobs.size()));
  return 0;
}

// ---------------------------------------------------------------------------

struct LoadReport {
  std::vector<TrialLog> logs;
  std::vector<std::string> warnings;
};

/// Logs listed in `dir`/manifest.json; unreadable ones become warnings.
LoadReport load_log_dir(const fs::path& dir, int workers) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) {
    bool any = fs::is_directory(dir) && fs::directory_iterator(dir) != fs::directory_iterator();
    throw std::runtime_error(any ? "no manifest.json in " + dir.string() : "no trial logs found in " + dir.string());
  }
  const json manifest = json::parse(read_text(manifest_path));
  std::vector<fs::path> files;
  for (const auto& t : manifest.at("trials")) files.push_back(dir / t.at("file").get<std::string>());
  if (files.empty()) throw std::runtime_error("no trial logs found in " + dir.string());

  struct Loaded {
    std::optional<TrialLog> log;
    std::string error;
  };
  auto loaded = parallel_map(files.size(), workers, [&](std::size_t i) {
    try {
      return Loaded{load_trial_log(files[i]), {}};
    } catch (const std::exception& e) {
      return Loaded{std::nullopt, files[i].string() + ": " + e.what()};
    }
  });
  LoadReport r;
  for (auto& l : loaded) {
    if (l.log) r.logs.push_back(std::move(*l.log));
    else r.warnings.push_back(l.error);
  }
  if (r.logs.empty()) throw std::runtime_error("no trial logs found in " + dir.string());
  return r;
}

int cmd_metrics(const Overrides& o, const std::vector<std::string>& dirs, const std::string& human_dir,
                const std::string& schema_path) {
  RunConfig cfg = resolve_config(o);
  if (dirs.empty() && human_dir.empty()) throw std::runtime_error("no trial logs found (give a log directory)");
  const fs::path out = o.out ? fs::path(*o.out) : (dirs.empty() ? fs::path("metrics") : fs::path(dirs[0]) / "metrics");

  std::vector<TrialLog> logs;
  std::vector<std::string> warnings;
  for (const auto& d : dirs) {
    auto r = load_log_dir(d, cfg.workers);
    for (auto& w : r.warnings) {
      std::cerr << "warning: skipped " << w << "\n";
      warnings.push_back(std::move(w));
    }
    for (auto& l : r.logs) logs.push_back(std::move(l));
  }
  if (!human_dir.empty()) {
    if (schema_path.empty()) throw ConfigError({"--schema: required with --human"});
    const IngestResult ing = ingest_human_dataset(human_dir, load_ingest_schema(schema_path), cfg.model.track);
    for (const auto& rej : ing.rejected) {
      const std::string w = rej.path.string() + ": " + std::string(to_string(rej.reason)) + " (" + rej.detail + ")";
      std::cerr << "warning: rejected " << w << "\n";
      warnings.push_back(w);
    }
    if (ing.logs.empty()) throw std::runtime_error("no trial logs found in " + human_dir);
    for (const auto& l : ing.logs) logs.push_back(l);
  }

  const auto metrics = parallel_map(logs.size(), cfg.workers,
                                    [&](std::size_t i) { return compute_metrics(logs[i], cfg.model.track, cfg.analysis); });
  const auto rows = aggregate(metrics);

  fs::create_directories(out / "svg");
  auto emit = [&](const std::string& name, auto&& writer) {
    std::ofstream os(out / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (out / name).string());
    writer(os);
  };
  emit("trial_metrics.csv", [&](std::ostream& os) { write_trial_metrics_csv(os, metrics); });
  emit("aggregate.csv", [&](std::ostream& os) { write_aggregate_csv(os, rows); });
  emit("fig3b_abs_deviation.csv", [&](std::ostream& os) { write_fig3b_csv(os, rows); });
  emit("fig3c_abs_deviation_by_kinematics.csv", [&](std::ostream& os) { write_fig3c_csv(os, rows); });
  emit("fig4a_gap.csv", [&](std::ostream& os) { write_fig4a_csv(os, rows); });
  emit("fig4b_gap_by_condition.csv", [&](std::ostream& os) { write_fig4b_csv(os, metrics); });
  emit("fig5a_decisions.csv", [&](std::ostream& os) { write_fig5a_csv(os, rows); });
  emit("fig5b_who_first.csv", [&](std::ostream& os) { write_fig5b_csv(os, rows); });
  emit("fig5b_who_first_by_condition.csv", [&](std::ostream& os) { write_fig5b_condition_csv(os, metrics); });
  emit("crt_by_condition.csv", [&](std::ostream& os) { write_crt_csv(os, metrics); });

  std::set<std::string> sources;
  for (const auto& r : rows) sources.insert(r.source);
  for (const auto& s : sources) {
    if (s == "model" || !sources.count("model")) continue;
    emit("paired_comparison_" + s + ".csv",
         [&](std::ostream& os) { write_paired_csv(os, paired_comparison(rows, s)); });
  }
  for (const auto& fig : build_figures(metrics, rows)) {
    emit("svg/" + fig.name + ".svg", [&](std::ostream& os) { os << fig.chart.render(); });
  }

  int collisions = 0;
  for (const auto& m : metrics) collisions += m.collided();
  std::ostringstream report;
  report << "trials " << metrics.size() << "\ncollisions " << collisions << "\nskipped " << warnings.size() << "\n";
  for (const auto& w : warnings) report << "skip " << w << "\n";
  write_text(out / "report.txt", report.str());
  std::printf("%zu trials (%d collisions excluded from aggregates, %zu skipped) -> %s\n", metrics.size(),
              collisions, warnings.size(), out.string().c_str());
  return 0;
}

// ---------------------------------------------------------------------------

GridSet load_grids(const std::vector<Condition>& conditions, const RunConfig& cfg) {
  GridSet grids;
  const fs::path cache = grid_cache_dir();
  for (const auto& c : conditions) {
    bool hit = false;
    const auto t0 = std::chrono::steady_clock::now();
    grids.emplace(c, load_or_build_grid(c, cfg.grid, cfg.model, cfg.workers, cache, &hit));
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("grid %-5s %s (%.1f s)\n", c.label().c_str(), hit ? "cached" : "built", s);
  }
  return grids;
}

int cmd_grid(const Overrides& o) {
  const RunConfig cfg = resolve_config(o);
  std::vector<Condition> conds;
  for (const auto& c : cfg.conditions) {
    conds.push_back(c);
    conds.push_back(c.mirrored());
  }
  std::sort(conds.begin(), conds.end());
  conds.erase(std::unique(conds.begin(), conds.end()), conds.end());
  const GridSet grids = load_grids(conds, cfg);
  std::printf("%zu grids in %s\n", grids.size(), grid_cache_dir().string().c_str());
  if (o.out) {
    fs::create_directories(*o.out);
    for (const auto& [c, g] : grids) {
      std::ofstream os(fs::path(*o.out) / ("grid_" + c.label() + ".csv"), std::ios::binary);
      write_grid(os, g, grid_cache_key(c, Side::kLeft, cfg.grid, cfg.model));
    }
  }
  return 0;
}

int cmd_calibrate(const Overrides& o, const std::string& human_dir, const std::string& schema_path) {
  const RunConfig cfg = resolve_config(o);
  const fs::path out = o.out ? fs::path(*o.out) : fs::path("calibration");
  const IngestResult ing = ingest_human_dataset(human_dir, load_ingest_schema(schema_path), cfg.model.track);
  for (const auto& rej : ing.rejected) {
    std::cerr << "warning: rejected " << rej.path.string() << ": " << to_string(rej.reason) << " (" << rej.detail
              << ")\n";
  }
  if (ing.logs.empty()) throw std::runtime_error("no ingestable trials in " + human_dir);

  const GridSet grids = load_grids(conditions_needed(ing.logs), cfg);
  const CalibrationResult res = calibrate(ing.logs, grids, cfg.model.track);

  fs::create_directories(out);
  ParameterSet params;
  params.incentive = res.fit.lambda();
  params.pairs = res.pair_params;
  write_text(out / "params.yaml", emit_parameter_file(params));
  {
    std::ofstream os(out / "matches.csv", std::ios::binary);
    write_matches_csv(os, res.trials);
  }
  json fit;
  fit["format"] = "cei-calibration/1";
  fit["code_version"] = code_version();
  fit["observations"] = res.fit.observations;
  fit["skipped_trials"] = res.skipped;
  fit["rejected_files"] = ing.rejected.size();
  for (const auto& [name, lf] : {std::pair{"upper", res.fit.upper}, std::pair{"lower", res.fit.lower}}) {
    fit[name] = {{"lambda", lf.slopes}, {"standard_error", lf.standard_errors}, {"residual_sd", lf.residual_sd}};
  }
  json intercepts = json::object();
  for (const auto& p : res.fit.participants) {
    const auto d = res.fit.intercept(p);
    intercepts[p] = {{"theta_l", d.theta_l}, {"theta_u", d.theta_u}};
  }
  fit["intercepts"] = intercepts;
  write_text(out / "fit.json", fit.dump(2) + "\n");
  std::printf("%zu matched trials, %zu participants -> %s\n", res.trials.size(), res.fit.participants.size(),
              (out / "params.yaml").string().c_str());
  return 0;
}

int cmd_export(const Overrides& o, const std::string& log_dir) {
  const RunConfig cfg = resolve_config(o);
  const fs::path out = o.out ? fs::path(*o.out) : fs::path(log_dir) / "export";
  const LoadReport r = load_log_dir(log_dir, cfg.workers);
  for (const auto& w : r.warnings) std::cerr << "warning: skipped " << w << "\n";
  fs::create_directories(out);
  for (const auto& log : r.logs) {
    std::ofstream os(out / trial_file_name(log), std::ios::binary);
    if (!os) throw std::runtime_error("cannot write into " + out.string());
    write_export_csv(os, log);
  }
  std::printf("%zu trials exported -> %s\n", r.logs.size(), out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation, analysis and calibration of the CEI merging model"};
  app.require_subcommand(1);
  app.set_version_flag("--version", code_version());

  Overrides run_o, metrics_o, grid_o, cal_o, export_o;
  auto* run = app.add_subcommand("run", "simulate a batch of trials");
  add_common(run, run_o);

  std::vector<std::string> metric_dirs;
  std::string human_dir, schema_path;
  auto* metrics = app.add_subcommand("metrics", "compute metrics, aggregate CSVs and SVG panels");
  add_common(metrics, metrics_o);
  metrics->add_option("logs", metric_dirs, "run directories (each with manifest.json)");
  metrics->add_option("--human", human_dir, "raw human recordings to ingest alongside");
  metrics->add_option("--schema", schema_path, "ingest schema (YAML) for --human");

  auto* grid = app.add_subcommand("grid", "build or refresh the calibration grid cache");
  add_common(grid, grid_o);

  std::string cal_human, cal_schema;
  auto* cal = app.add_subcommand("calibrate", "fit thresholds and incentives to recorded trials");
  add_common(cal, cal_o);
  cal->add_option("--human", cal_human, "directory of recordings");
  cal->add_option("--schema", cal_schema, "ingest schema (YAML)");

  std::string export_dir;
  auto* exp = app.add_subcommand("export", "write run logs as plain per-trial CSV");
  add_common(exp, export_o);
  exp->add_option("logs", export_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (*run) return guarded([&] { return cmd_run(run_o); });
  if (*metrics) return guarded([&] { return cmd_metrics(metrics_o, metric_dirs, human_dir, schema_path); });
  if (*grid) return guarded([&] { return cmd_grid(grid_o); });
  if (*cal) {
    if (cal_schema.empty() || cal_human.empty()) {
      std::cerr << "calibrate needs --human DIR and --schema FILE\n\n" << cal->help();
      return kExitConfig;
    }
    return guarded([&] { return cmd_calibrate(cal_o, cal_human, cal_schema); });
  }
  if (*exp) return guarded([&] { return cmd_export(export_o, export_dir); });
  return kExitFailure;
}
