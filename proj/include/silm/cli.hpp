#pragma once

// Command-line front end: `run`, `sweep`, `baseline` and `compare`.
// Exit codes: 0 success, 2 configuration error, 3 numerical divergence,
// 1 anything else (I/O failures).

#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "silm/config.hpp"
#include "silm/ilm.hpp"
#include "silm/io.hpp"
#include "silm/metrics.hpp"

namespace silm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDivergence = 3;

struct Flags {
  std::string config;
  std::string preset;
  std::string out = "out";
  std::string auto_per;
  std::string loss;
  double p = 0.0;
  double p_min = 0.0;
  double p_max = 0.0;
  double p_step = 0.0;
  unsigned runs = 0;
  unsigned generations = 0;
  unsigned jobs = 0;
  unsigned run_index = 0;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  unsigned n1 = 0;
  unsigned n3 = 0;
  std::vector<std::string> arch;
  // Several subcommands register the same flag name.
  std::multimap<std::string, CLI::Option*> given;

  bool has(const std::string& name) const {
    auto [lo, hi] = given.equal_range(name);
    for (auto it = lo; it != hi; ++it)
      if (it->second->count() > 0) return true;
    return false;
  }
  void track(const std::string& name, CLI::Option* opt) { given.emplace(name, opt); }
};

namespace detail {

inline void add_common(CLI::App& cmd, Flags& f) {
  f.track("config", cmd.add_option("--config", f.config, "key = value configuration file"));
  f.track("preset", cmd.add_option("--preset", f.preset, "small | large"));
  f.track("seed", cmd.add_option("--seed", f.seed, "master seed"));
  f.track("out", cmd.add_option("--out", f.out, "output directory"));
}

inline void add_simulation(CLI::App& cmd, Flags& f) {
  f.track("p", cmd.add_option("--p", f.p, "mixing weight of language A"));
  f.track("runs", cmd.add_option("--runs", f.runs, "runs per p value"));
  f.track("generations", cmd.add_option("--generations", f.generations, "trained generations"));
  f.track("jobs", cmd.add_option("--jobs", f.jobs, "worker threads (default: all cores)"));
  f.track("auto-per", cmd.add_option("--auto-per", f.auto_per, "iteration | epoch"));
  f.track("loss", cmd.add_option("--loss", f.loss, "mse | bce"));
  f.track("run-index", cmd.add_option("--run-index", f.run_index, "execute only this run index (replay)"));
}

inline void add_grid(CLI::App& cmd, Flags& f) {
  f.track("p-min", cmd.add_option("--p-min", f.p_min, "first p of the grid"));
  f.track("p-max", cmd.add_option("--p-max", f.p_max, "last p of the grid"));
  f.track("p-step", cmd.add_option("--p-step", f.p_step, "grid increment"));
}

// Preset, then config file, then explicit flags.
inline ExperimentConfig build_config(const Flags& f) {
  ExperimentConfig cfg;
  if (f.has("preset")) apply_preset(cfg, f.preset);
  if (f.has("config")) {
    std::ifstream in(f.config);
    if (!in) throw ConfigError("config", "cannot open '" + f.config + "'");
    const KeyValues kv = parse_key_values(in);
    if (f.has("preset")) {
      KeyValues rest;
      for (const auto& item : kv)
        if (item.first != "preset") rest.push_back(item);
      apply_key_values(cfg, rest);
    } else {
      apply_key_values(cfg, kv);
    }
  }
  auto set = [&](const char* flag, const char* key, const std::string& value) {
    if (f.has(flag)) apply_key(cfg, key, value);
  };
  set("seed", "seed", std::to_string(f.seed));
  set("p", "p", format_exact(f.p));
  set("runs", "runs", std::to_string(f.runs));
  set("generations", "generations", std::to_string(f.generations));
  set("jobs", "jobs", std::to_string(f.jobs));
  set("auto-per", "auto_per", f.auto_per);
  set("loss", "loss", f.loss);
  set("run-index", "run_index", std::to_string(f.run_index));
  set("p-min", "p_min", format_exact(f.p_min));
  set("p-max", "p_max", format_exact(f.p_max));
  set("p-step", "p_step", format_exact(f.p_step));
  if (!f.arch.empty()) {
    cfg.architectures.clear();
    for (const auto& a : f.arch) cfg.architectures.push_back(parse_architecture(a));
  }
  validate(cfg);
  return cfg;
}

inline std::filesystem::path prepare_out(const std::string& dir) {
  std::filesystem::path p(dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
  return p;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  return os;
}

struct Batch {
  std::vector<Trajectory> trajectories;
  Baselines baselines;
};

inline Batch simulate(const ExperimentConfig& cfg, const std::vector<double>& grid) {
  Batch b;
  b.baselines = compute_baselines(cfg.sim.n1, cfg.sim.n3, cfg.baseline_samples, cfg.baseline_seed);
  const unsigned runs = cfg.run_index ? 1 : cfg.runs;
  const unsigned first = cfg.run_index.value_or(0);
  b.trajectories = run_batch(cfg.sim, grid, runs, b.baselines, cfg.jobs, first);
  return b;
}

inline void write_manifest(const std::filesystem::path& path, const std::string& command,
                           const ExperimentConfig& cfg, const Batch& batch) {
  auto os = open_out(path);
  os << "software = silm " << kVersion << '\n' << "command = " << command << '\n';
  write_config_echo(os, cfg);
  write_baselines(os, batch.baselines);
  write_run_lines(os, batch.trajectories);
}

inline int cmd_run(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& out) {
  const auto dir = prepare_out(out_dir);
  const Batch batch = simulate(cfg, {cfg.sim.p});
  {
    auto os = open_out(dir / "trajectories.csv");
    write_trajectories_csv(os, batch.trajectories);
  }
  {
    auto os = open_out(dir / "summary.csv");
    write_summary_csv(os, summarize(batch.trajectories));
  }
  write_manifest(dir / "manifest.txt", "run", cfg, batch);
  out << "wrote " << (dir / "trajectories.csv").string() << '\n';
  return kExitOk;
}

inline int cmd_sweep(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& out) {
  const auto dir = prepare_out(out_dir);
  const Batch batch = simulate(cfg, p_grid(cfg.p_min, cfg.p_max, cfg.p_step));
  {
    auto os = open_out(dir / "trajectories.csv");
    write_trajectories_csv(os, batch.trajectories, true);
  }
  {
    auto os = open_out(dir / "summary.csv");
    write_summary_csv(os, summarize(batch.trajectories));
  }
  write_manifest(dir / "manifest.txt", "sweep", cfg, batch);
  out << "wrote " << (dir / "summary.csv").string() << '\n';
  return kExitOk;
}

inline int cmd_baseline(const ExperimentConfig& cfg, const Flags& f, const std::string& out_dir,
                        std::ostream& out) {
  const unsigned n1 = f.has("n1") ? f.n1 : cfg.sim.n1;
  const unsigned n3 = f.has("n3") ? f.n3 : cfg.sim.n3;
  const std::size_t samples = f.has("samples") ? f.samples : cfg.baseline_samples;
  const std::uint64_t seed = f.has("seed") ? f.seed : cfg.baseline_seed;
  if (n1 < 1 || n1 > kMaxMeaningBits) throw ConfigError("n1", "must be in [1, 20]");
  if (n3 < 1 || n3 > kMaxSignalBits) throw ConfigError("n3", "must be in [1, 31]");
  if (samples < 100) throw ConfigError("samples", "must be at least 100");
  const Baselines b = compute_baselines(n1, n3, samples, seed);
  std::ostringstream text;
  text << "software = silm " << kVersion << '\n' << "command = baseline\n";
  write_baselines(text, b);
  const auto dir = prepare_out(out_dir);
  auto os = open_out(dir / "manifest.txt");
  os << text.str();
  out << text.str();
  return kExitOk;
}

inline int cmd_compare(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& out) {
  const auto dir = prepare_out(out_dir);
  const auto grid = p_grid(cfg.p_min, cfg.p_max, cfg.p_step);
  auto merged = open_out(dir / "compare.csv");
  write_compare_header(merged);
  auto manifest = open_out(dir / "manifest.txt");
  manifest << "software = silm " << kVersion << '\n' << "command = compare\n";
  write_config_echo(manifest, cfg);
  for (const Architecture& arch : cfg.architectures) {
    ExperimentConfig sub = cfg;
    sub.sim.n1 = arch.n1;
    sub.sim.n2 = arch.n2;
    sub.sim.n3 = arch.n3;
    sub.sim.r = arch.r;
    const std::size_t space = std::size_t{1} << std::min(arch.n1, kMaxMeaningBits);
    sub.sim.bottleneck_size = std::min(sub.sim.bottleneck_size, space);
    sub.sim.auto_pool_size = std::min(sub.sim.auto_pool_size, space);
    validate(sub);
    const Batch batch = simulate(sub, grid);
    const auto arch_dir = prepare_out((dir / arch.label).string());
    {
      auto os = open_out(arch_dir / "trajectories.csv");
      write_trajectories_csv(os, batch.trajectories, true);
    }
    {
      auto os = open_out(arch_dir / "summary.csv");
      write_summary_csv(os, summarize(batch.trajectories));
    }
    write_compare_rows(merged, arch.label, batch.trajectories);
    manifest << "architecture = " << arch.label << " r=" << arch.r << '\n';
    write_baselines(manifest, batch.baselines);
    write_run_lines(manifest, batch.trajectories, "run." + arch.label);
  }
  out << "wrote " << (dir / "compare.csv").string() << '\n';
  return kExitOk;
}

}  // namespace detail

inline int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semi-supervised iterated learning of mixed languages"};
  app.require_subcommand(1);
  Flags f;
  auto* run = app.add_subcommand("run", "simulate one p value");
  auto* sweep = app.add_subcommand("sweep", "simulate a grid of p values");
  auto* baseline = app.add_subcommand("baseline", "estimate the random-language baselines");
  auto* compare = app.add_subcommand("compare", "sweep several architectures");
  for (auto* cmd : {run, sweep, compare}) {
    detail::add_common(*cmd, f);
    detail::add_simulation(*cmd, f);
  }
  detail::add_grid(*sweep, f);
  detail::add_grid(*compare, f);
  f.track("arch", compare->add_option("--arch", f.arch, "architecture n1xn2xn3[:r], repeatable"));
  detail::add_common(*baseline, f);
  f.track("n1", baseline->add_option("--n1", f.n1, "meaning bits"));
  f.track("n3", baseline->add_option("--n3", f.n3, "signal bits"));
  f.track("samples", baseline->add_option("--samples", f.samples, "Monte Carlo samples"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    const ExperimentConfig cfg = detail::build_config(f);
    if (run->parsed()) return detail::cmd_run(cfg, f.out, out);
    if (sweep->parsed()) return detail::cmd_sweep(cfg, f.out, out);
    if (baseline->parsed()) return detail::cmd_baseline(cfg, f, f.out, out);
    return detail::cmd_compare(cfg, f.out, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DivergenceError& e) {
    err << "error: numerical divergence: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace silm::cli
