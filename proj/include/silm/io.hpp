#pragma once

// CSV and manifest emission. Numbers are formatted with std::to_chars, which
// ignores the global locale.

#include <array>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "silm/config.hpp"
#include "silm/ilm.hpp"
#include "silm/metrics.hpp"

namespace silm {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr double kMatchThreshold = 0.9;

// Six digits after the decimal point; negative zero prints as zero.
inline std::string format_fixed(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, 6);
  std::string s(buf.data(), ptr);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

// Shortest representation that round-trips, for manifests.
inline std::string format_exact(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

inline constexpr const char* kTrajectoryHeader = "run,p,generation,x,c,s,a,b,x_raw,c_raw,s_raw,a_raw,b_raw";

inline void write_trajectory_rows(std::ostream& os, const Trajectory& t, bool with_finals) {
  const MetricReport& last = t.records.back().metrics;
  for (const GenerationRecord& rec : t.records) {
    const MetricReport& m = rec.metrics;
    os << t.run << ',' << format_fixed(t.config.p) << ',' << rec.generation << ','
       << format_fixed(m.x) << ',' << format_fixed(m.c) << ','
       << (m.s ? format_fixed(*m.s) : std::string()) << ',' << format_fixed(m.a) << ','
       << format_fixed(m.b) << ',' << format_fixed(m.x_raw) << ',' << format_fixed(m.c_raw) << ','
       << (m.s_raw ? format_fixed(*m.s_raw) : std::string()) << ',' << format_fixed(m.a_raw)
       << ',' << format_fixed(m.b_raw);
    if (with_finals) os << ',' << format_fixed(last.a) << ',' << format_fixed(last.b);
    os << '\n';
  }
}

// Rows in the order given; run_batch already orders by (p, run).
inline void write_trajectories_csv(std::ostream& os, std::span<const Trajectory> trajectories,
                                   bool with_finals = false) {
  os << kTrajectoryHeader << (with_finals ? ",final_a,final_b" : "") << '\n';
  for (const Trajectory& t : trajectories) write_trajectory_rows(os, t, with_finals);
}

struct SummaryRow {
  double p = 0.0;
  double frac_a = 0.0;
  double frac_b = 0.0;
  double mean_a = 0.0;
  double mean_b = 0.0;
  std::size_t runs = 0;
};

// Final-generation statistics per p, in first-seen order of p.
inline std::vector<SummaryRow> summarize(std::span<const Trajectory> trajectories) {
  std::vector<SummaryRow> rows;
  for (const Trajectory& t : trajectories) {
    const MetricReport& m = t.records.back().metrics;
    SummaryRow* row = nullptr;
    for (auto& r : rows)
      if (r.p == t.config.p) row = &r;
    if (row == nullptr) {
      rows.push_back({});
      row = &rows.back();
      row->p = t.config.p;
    }
    row->runs += 1;
    row->frac_a += m.a > kMatchThreshold ? 1.0 : 0.0;
    row->frac_b += m.b > kMatchThreshold ? 1.0 : 0.0;
    row->mean_a += m.a;
    row->mean_b += m.b;
  }
  for (auto& r : rows) {
    const auto n = static_cast<double>(r.runs);
    r.frac_a /= n;
    r.frac_b /= n;
    r.mean_a /= n;
    r.mean_b /= n;
  }
  return rows;
}

inline void write_summary_csv(std::ostream& os, std::span<const SummaryRow> rows) {
  os << "p,frac_a_gt_0.9,frac_b_gt_0.9,mean_a,mean_b\n";
  for (const SummaryRow& r : rows)
    os << format_fixed(r.p) << ',' << format_fixed(r.frac_a) << ',' << format_fixed(r.frac_b) << ','
       << format_fixed(r.mean_a) << ',' << format_fixed(r.mean_b) << '\n';
}

// One row per (architecture, p, run) with the per-(architecture, p) mean of
// the final a repeated on each row.
inline void write_compare_header(std::ostream& os) {
  os << "architecture,p,run,final_a,final_b,final_x,mean_a\n";
}

inline void write_compare_rows(std::ostream& os, const std::string& label,
                               std::span<const Trajectory> trajectories) {
  const auto summary = summarize(trajectories);
  for (const Trajectory& t : trajectories) {
    double mean_a = 0.0;
    for (const auto& r : summary)
      if (r.p == t.config.p) mean_a = r.mean_a;
    const MetricReport& m = t.records.back().metrics;
    os << label << ',' << format_fixed(t.config.p) << ',' << t.run << ',' << format_fixed(m.a) << ','
       << format_fixed(m.b) << ',' << format_fixed(m.x) << ',' << format_fixed(mean_a) << '\n';
  }
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int k = 15; k >= 0; --k, v >>= 4) s[static_cast<std::size_t>(k)] = kDigits[v & 0xF];
  return s;
}

// Baseline lines: metric, analytic value, Monte Carlo estimate, standard
// error, sample count, seed, status. `used` is the value that normalizes the
// CSV columns, at full precision.
inline void write_baselines(std::ostream& os, const Baselines& b) {
  auto line = [&](const char* name, std::optional<double> analytic, const Estimate& mc, double used,
                  const char* status) {
    os << "baseline." << name << " = analytic=" << (analytic ? format_fixed(*analytic) : "NA")
       << " mc=" << format_fixed(mc.mean) << " se=" << format_exact(mc.standard_error)
       << " samples=" << mc.samples << " seed=" << b.seed << " used=" << format_exact(used)
       << " status=" << status << '\n';
  };
  os << "baseline.n1 = " << b.n1 << '\n' << "baseline.n3 = " << b.n3 << '\n';
  line("f0", b.f0, b.f0_mc, b.f0, b.f0_ok() ? "ok" : "mismatch");
  line("x0", b.x0, b.x0_mc, b.x0, b.x0_ok() ? "ok" : "mismatch");
  line("c0", std::nullopt, b.c0_mc, b.c0, "mc");
}

inline void write_config_echo(std::ostream& os, const ExperimentConfig& cfg) {
  const SimConfig& s = cfg.sim;
  os << "config.n1 = " << s.n1 << '\n'
     << "config.n2 = " << s.n2 << '\n'
     << "config.n3 = " << s.n3 << '\n'
     << "config.bottleneck = " << s.bottleneck_size << '\n'
     << "config.auto_pool = " << s.auto_pool_size << '\n'
     << "config.r = " << s.r << '\n'
     << "config.epochs = " << s.epochs << '\n'
     << "config.learning_rate = " << format_exact(s.learning_rate) << '\n'
     << "config.generations = " << s.generations << '\n'
     << "config.p = " << format_exact(s.p) << '\n'
     << "config.threshold = " << format_exact(s.threshold) << '\n'
     << "config.loss = " << to_string(s.loss) << '\n'
     << "config.auto_per = " << to_string(s.auto_per) << '\n'
     << "config.runs = " << cfg.runs << '\n'
     << "config.baseline_samples = " << cfg.baseline_samples << '\n'
     << "config.baseline_seed = " << cfg.baseline_seed << '\n'
     << "master_seed = " << s.seed << '\n';
}

inline void write_run_lines(std::ostream& os, std::span<const Trajectory> trajectories,
                            const std::string& prefix = "run") {
  for (const Trajectory& t : trajectories)
    os << prefix << " = p=" << format_fixed(t.config.p) << " index=" << t.run
       << " seed=" << hex64(t.run_seed) << " parent_a=" << hex64(t.parent_a_checksum)
       << " parent_b=" << hex64(t.parent_b_checksum) << '\n';
}

// Reads `baseline.<name> = ... used=<v> ...` back out of a manifest.
inline std::map<std::string, double> read_manifest_baselines(std::istream& is) {
  std::map<std::string, double> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.rfind("baseline.", 0) != 0) continue;
    const auto eq = line.find(" = ");
    const auto used = line.find("used=");
    if (eq == std::string::npos || used == std::string::npos) continue;
    const std::string name = line.substr(9, eq - 9);
    const auto start = used + 5;
    const auto end = line.find(' ', start);
    const std::string value = line.substr(start, end == std::string::npos ? end : end - start);
    double v = 0.0;
    std::from_chars(value.data(), value.data() + value.size(), v);
    out[name] = v;
  }
  return out;
}

}  // namespace silm
