#pragma once

// Experiment configuration: `key = value` files with `#` comments, named
// presets, p grids and architecture lists.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "silm/ilm.hpp"

namespace silm {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key.empty() ? message : "config key '" + key + "': " + message),
        key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct Architecture {
  std::string label;
  unsigned n1 = 10;
  unsigned n2 = 10;
  unsigned n3 = 10;
  unsigned r = 15;
};

// "10x15x20" or "10x15x20:30" (trailing r).
inline Architecture parse_architecture(std::string_view text) {
  Architecture a;
  std::string_view dims = text;
  const auto colon = text.find(':');
  auto number = [&](std::string_view s) {
    unsigned v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
      throw ConfigError("architectures", "malformed architecture '" + std::string(text) + "'");
    return v;
  };
  if (colon != std::string_view::npos) {
    a.r = number(text.substr(colon + 1));
    dims = text.substr(0, colon);
  }
  const auto x1 = dims.find('x');
  const auto x2 = x1 == std::string_view::npos ? x1 : dims.find('x', x1 + 1);
  if (x2 == std::string_view::npos)
    throw ConfigError("architectures", "malformed architecture '" + std::string(text) + "'");
  a.n1 = number(dims.substr(0, x1));
  a.n2 = number(dims.substr(x1 + 1, x2 - x1 - 1));
  a.n3 = number(dims.substr(x2 + 1));
  a.label = std::string(dims);
  return a;
}

inline std::vector<Architecture> default_architectures() {
  return {parse_architecture("10x10x10"), parse_architecture("10x12x10"),
          parse_architecture("9x11x12"), parse_architecture("10x15x20")};
}

struct ExperimentConfig {
  SimConfig sim;
  unsigned runs = 50;
  std::optional<unsigned> run_index;
  unsigned jobs = default_jobs();
  double p_min = 0.5;
  double p_max = 1.0;
  double p_step = 0.05;
  std::size_t baseline_samples = 1000;
  std::uint64_t baseline_seed = 20240417;
  std::vector<Architecture> architectures = default_architectures();
};

// Inclusive grid min, min+step, ..., max; values rounded to 1e-9 so that
// 0.5 + 5*0.05 prints and seeds as 0.75.
inline std::vector<double> p_grid(double p_min, double p_max, double p_step) {
  if (!(p_min >= 0.0 && p_max <= 1.0 && p_min <= p_max))
    throw ConfigError("p_min", "grid bounds must satisfy 0 <= p_min <= p_max <= 1");
  if (!(p_step > 0.0)) throw ConfigError("p_step", "grid step must be positive");
  const double span = (p_max - p_min) / p_step;
  const auto steps = static_cast<long>(std::floor(span + 1e-9));
  std::vector<double> grid;
  for (long k = 0; k <= steps; ++k)
    grid.push_back(std::round((p_min + static_cast<double>(k) * p_step) * 1e9) / 1e9);
  return grid;
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T v{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end || value.empty())
    throw ConfigError(key, "invalid value '" + value + "'");
  return v;
}

}  // namespace detail

using KeyValues = std::vector<std::pair<std::string, std::string>>;

inline KeyValues parse_key_values(std::istream& is) {
  KeyValues kv;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string content = detail::trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos)
      throw ConfigError("", "line " + std::to_string(line_no) + ": expected 'key = value'");
    kv.emplace_back(detail::trim(std::string_view(content).substr(0, eq)),
                    detail::trim(std::string_view(content).substr(eq + 1)));
  }
  return kv;
}

inline void apply_preset(ExperimentConfig& cfg, const std::string& name) {
  if (name == "small") {
    cfg.sim = SimConfig::small();
    cfg.baseline_samples = 1000;
  } else if (name == "large") {
    cfg.sim = SimConfig::large();
    cfg.baseline_samples = 100;
  } else {
    throw ConfigError("preset", "unknown preset '" + name + "' (expected small or large)");
  }
}

inline Loss parse_loss(const std::string& value) {
  if (value == "mse") return Loss::mse;
  if (value == "bce") return Loss::bce;
  throw ConfigError("loss", "expected mse or bce, got '" + value + "'");
}

inline AutoPer parse_auto_per(const std::string& value) {
  if (value == "iteration") return AutoPer::iteration;
  if (value == "epoch") return AutoPer::epoch;
  throw ConfigError("auto_per", "expected iteration or epoch, got '" + value + "'");
}

inline const char* to_string(Loss loss) { return loss == Loss::mse ? "mse" : "bce"; }
inline const char* to_string(AutoPer a) { return a == AutoPer::iteration ? "iteration" : "epoch"; }

inline void apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  using detail::parse_number;
  SimConfig& s = cfg.sim;
  if (key == "preset") apply_preset(cfg, value);
  else if (key == "n1") s.n1 = parse_number<unsigned>(key, value);
  else if (key == "n2") s.n2 = parse_number<unsigned>(key, value);
  else if (key == "n3") s.n3 = parse_number<unsigned>(key, value);
  else if (key == "bottleneck") s.bottleneck_size = parse_number<std::size_t>(key, value);
  else if (key == "auto_pool") s.auto_pool_size = parse_number<std::size_t>(key, value);
  else if (key == "r") s.r = parse_number<unsigned>(key, value);
  else if (key == "epochs") s.epochs = parse_number<unsigned>(key, value);
  else if (key == "learning_rate") s.learning_rate = parse_number<double>(key, value);
  else if (key == "generations") s.generations = parse_number<unsigned>(key, value);
  else if (key == "p") s.p = parse_number<double>(key, value);
  else if (key == "seed") s.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "threshold") s.threshold = parse_number<double>(key, value);
  else if (key == "loss") s.loss = parse_loss(value);
  else if (key == "auto_per") s.auto_per = parse_auto_per(value);
  else if (key == "runs") cfg.runs = parse_number<unsigned>(key, value);
  else if (key == "run_index") cfg.run_index = parse_number<unsigned>(key, value);
  else if (key == "jobs") cfg.jobs = parse_number<unsigned>(key, value);
  else if (key == "p_min") cfg.p_min = parse_number<double>(key, value);
  else if (key == "p_max") cfg.p_max = parse_number<double>(key, value);
  else if (key == "p_step") cfg.p_step = parse_number<double>(key, value);
  else if (key == "baseline_samples") cfg.baseline_samples = parse_number<std::size_t>(key, value);
  else if (key == "baseline_seed") cfg.baseline_seed = parse_number<std::uint64_t>(key, value);
  else if (key == "architectures") {
    cfg.architectures.clear();
    std::string_view rest = value;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string item = detail::trim(rest.substr(0, comma));
      if (!item.empty()) cfg.architectures.push_back(parse_architecture(item));
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
    if (cfg.architectures.empty()) throw ConfigError(key, "no architectures given");
  } else {
    throw ConfigError(key, "unknown configuration key");
  }
}

// A preset named in the file is applied before every other key.
inline void apply_key_values(ExperimentConfig& cfg, const KeyValues& kv) {
  for (const auto& [k, v] : kv)
    if (k == "preset") apply_preset(cfg, v);
  for (const auto& [k, v] : kv)
    if (k != "preset") apply_key(cfg, k, v);
}

// Semantic validation, reported against the offending key.
inline void validate(const ExperimentConfig& cfg) {
  if (cfg.runs == 0) throw ConfigError("runs", "must be at least 1");
  if (cfg.jobs == 0) throw ConfigError("jobs", "must be at least 1");
  if (cfg.baseline_samples < 100) throw ConfigError("baseline_samples", "must be at least 100");
  const SimConfig& s = cfg.sim;
  if (s.n1 < 1 || s.n1 > kMaxMeaningBits) throw ConfigError("n1", "must be in [1, 20]");
  if (s.n3 < s.n1 || s.n3 > kMaxSignalBits) throw ConfigError("n3", "must be in [n1, 31]");
  if (s.n2 == 0) throw ConfigError("n2", "must be positive");
  const std::size_t space = std::size_t{1} << s.n1;
  if (s.bottleneck_size == 0 || s.bottleneck_size > space)
    throw ConfigError("bottleneck", "must be in [1, 2^n1]");
  if (s.auto_pool_size == 0 || s.auto_pool_size > space)
    throw ConfigError("auto_pool", "must be in [1, 2^n1]");
  if (s.epochs == 0) throw ConfigError("epochs", "must be positive");
  if (!(s.learning_rate > 0.0) || !std::isfinite(s.learning_rate))
    throw ConfigError("learning_rate", "must be positive and finite");
  if (!(s.p >= 0.0 && s.p <= 1.0)) throw ConfigError("p", "must lie in [0, 1]");
  if (!(s.threshold > 0.0 && s.threshold < 1.0)) throw ConfigError("threshold", "must lie in (0, 1)");
}

}  // namespace silm
