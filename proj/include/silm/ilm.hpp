#pragma once

// The generational engine: a tutor language is taught to a freshly
// initialized pupil through a bottleneck, the pupil's encoder becomes the next
// language, and the five observables are recorded every generation.

#include <atomic>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_set>
#include <utility>
#include <vector>

#include "silm/bitlang.hpp"
#include "silm/metrics.hpp"
#include "silm/neuralnet.hpp"
#include "silm/rng.hpp"

namespace silm {

// When the r autoencoder presentations happen: after every supervised
// iteration, or r presentations once at the end of each epoch.
enum class AutoPer { iteration, epoch };

struct SimConfig {
  unsigned n1 = 10;
  unsigned n2 = 10;
  unsigned n3 = 10;
  std::size_t bottleneck_size = 80;
  std::size_t auto_pool_size = 240;
  unsigned r = 15;
  unsigned epochs = 20;
  double learning_rate = 5.0;
  unsigned generations = 20;
  double p = 0.5;
  std::uint64_t seed = 1;
  double threshold = 0.5;
  Loss loss = Loss::mse;
  AutoPer auto_per = AutoPer::iteration;

  static SimConfig small() { return SimConfig{}; }

  static SimConfig large() {
    SimConfig c;
    c.n1 = 20;
    c.n2 = 30;
    c.n3 = 20;
    c.bottleneck_size = 185;
    c.auto_pool_size = 555;
    c.r = 30;
    return c;
  }

  std::string architecture() const {
    return std::to_string(n1) + "x" + std::to_string(n2) + "x" + std::to_string(n3);
  }

  void validate() const {
    LanguageTable::check_shape(n1, n3);
    if (n1 > n3) throw std::invalid_argument("n1 must not exceed n3");
    if (n2 == 0) throw std::invalid_argument("n2 must be positive");
    const std::size_t space = std::size_t{1} << n1;
    if (bottleneck_size == 0 || bottleneck_size > space)
      throw std::invalid_argument("bottleneck size must be in [1, 2^n1]");
    if (auto_pool_size == 0 || auto_pool_size > space)
      throw std::invalid_argument("autoencoder pool size must be in [1, 2^n1]");
    if (epochs == 0) throw std::invalid_argument("epochs must be positive");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0, 1]");
    if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("threshold must lie in (0, 1)");
  }
};

// k distinct meanings, uniform without replacement (Floyd's algorithm).
inline std::vector<std::uint32_t> sample_bottleneck(Rng& rng, unsigned n1, std::size_t k) {
  const std::uint64_t space = std::uint64_t{1} << n1;
  if (k > space) throw std::invalid_argument("sample larger than the meaning space");
  std::vector<std::uint32_t> out;
  out.reserve(k);
  std::unordered_set<std::uint32_t> taken;
  taken.reserve(k * 2);
  for (std::uint64_t j = space - k; j < space; ++j) {
    auto t = static_cast<std::uint32_t>(rng.below(j + 1));
    if (!taken.insert(t).second) {
      t = static_cast<std::uint32_t>(j);
      taken.insert(t);
    }
    out.push_back(t);
  }
  return out;
}

struct TrainStats {
  std::uint64_t decoder_steps = 0;
  std::uint64_t encoder_steps = 0;
  std::uint64_t autoencoder_steps = 0;
};

inline TrainStats expected_train_stats(const SimConfig& config) {
  const std::uint64_t sup = std::uint64_t{config.epochs} * config.bottleneck_size;
  const std::uint64_t aut = config.auto_per == AutoPer::iteration
                                ? sup * config.r
                                : std::uint64_t{config.epochs} * config.r;
  return {sup, sup, aut};
}

struct Pupil {
  Agent agent;
  TrainStats stats;
};

// A fresh agent taught `tutor` through a freshly drawn bottleneck.
inline Pupil train_pupil(const LanguageTable& tutor, const SimConfig& config, Rng& rng) {
  if (tutor.n1() != config.n1 || tutor.n3() != config.n3)
    throw std::invalid_argument("tutor language shape does not match the configuration");
  Pupil pupil{agent_init(config.n1, config.n2, config.n3, rng), {}};
  Agent& agent = pupil.agent;
  const auto bottleneck = sample_bottleneck(rng, config.n1, config.bottleneck_size);
  const auto pool = sample_bottleneck(rng, config.n1, config.auto_pool_size);

  std::vector<double> meaning(config.n1);
  std::vector<double> signal(config.n3);
  auto autoencode = [&] {
    for (unsigned k = 0; k < config.r; ++k) {
      const std::uint32_t m = pool[rng.below(pool.size())];
      bits_to_real(m, config.n1, meaning);
      autoencoder_step(agent, meaning, config.learning_rate, config.loss);
      ++pupil.stats.autoencoder_steps;
    }
  };

  std::vector<std::uint32_t> first(bottleneck);
  std::vector<std::uint32_t> second(bottleneck);
  for (unsigned epoch = 0; epoch < config.epochs; ++epoch) {
    first = bottleneck;
    second = bottleneck;
    rng.shuffle(first.begin(), first.end());
    rng.shuffle(second.begin(), second.end());
    for (std::size_t t = 0; t < bottleneck.size(); ++t) {
      bits_to_real(tutor.at(first[t]), config.n3, signal);
      bits_to_real(first[t], config.n1, meaning);
      sgd_step(agent.decoder, signal, meaning, config.learning_rate, config.loss);
      ++pupil.stats.decoder_steps;

      bits_to_real(second[t], config.n1, meaning);
      bits_to_real(tutor.at(second[t]), config.n3, signal);
      sgd_step(agent.encoder, meaning, signal, config.learning_rate, config.loss);
      ++pupil.stats.encoder_steps;

      if (config.auto_per == AutoPer::iteration) autoencode();
    }
    if (config.auto_per == AutoPer::epoch) autoencode();
  }
  if (!agent.encoder.all_finite() || !agent.decoder.all_finite())
    throw DivergenceError("network parameters became non-finite");
  return pupil;
}

// The agent's language: its binarized encoder evaluated on every meaning.
inline LanguageTable extract_language(const Agent& agent, double threshold = 0.5) {
  const Dims& d = agent.encoder.dims();
  const auto n1 = static_cast<unsigned>(d.in);
  const auto n3 = static_cast<unsigned>(d.out);
  std::vector<std::uint32_t> entries(std::size_t{1} << n1);
  Activations act;
  std::vector<double> x(n1);
  for (std::size_t m = 0; m < entries.size(); ++m) {
    bits_to_real(static_cast<std::uint32_t>(m), n1, x);
    forward_into(agent.encoder, x, act);
    std::uint32_t s = 0;
    for (unsigned j = 0; j < n3; ++j)
      if (act.output[j] >= threshold) s |= std::uint32_t{1} << j;
    entries[m] = s;
  }
  return LanguageTable(n1, n3, std::move(entries));
}

struct Parents {
  LanguageTable a;
  LanguageTable b;
};

struct GenerationRecord {
  unsigned generation = 0;
  MetricReport metrics;
  std::uint64_t language_checksum = 0;
};

struct Trajectory {
  SimConfig config;
  unsigned run = 0;
  std::uint64_t run_seed = 0;
  std::uint64_t parent_a_checksum = 0;
  std::uint64_t parent_b_checksum = 0;
  std::vector<GenerationRecord> records;
  TrainStats stats;
};

// Seeds. Parents depend on (master seed, run) only, so every p value of a
// sweep mixes the same parent pair for a given run; everything else depends
// on (master seed, p, run). p enters through its value rounded to 1e-9 so a
// single run can be replayed without knowing its position in a grid.
inline std::uint64_t p_key(double p) { return static_cast<std::uint64_t>(std::llround(p * 1e9)); }

inline std::uint64_t parent_seed(std::uint64_t master, unsigned run) {
  return derive_seed(master, {0x70617265ULL, run});
}

inline std::uint64_t run_seed(std::uint64_t master, double p, unsigned run) {
  return derive_seed(master, {0x72756E00ULL, p_key(p), run});
}

inline Parents make_parents(unsigned n1, unsigned n3, std::uint64_t seed) {
  Rng rng(seed);
  auto a = expand(random_compositional_language(n1, n3, rng));
  auto b = expand(random_compositional_language(n1, n3, rng));
  return {std::move(a), std::move(b)};
}

inline Trajectory run_simulation(const SimConfig& config, const Parents& parents,
                                 const Baselines& baselines, std::uint64_t seed) {
  config.validate();
  require_same_shape(parents.a, parents.b);
  if (parents.a.n1() != config.n1 || parents.a.n3() != config.n3)
    throw std::invalid_argument("parent languages do not match the configuration");
  if (baselines.n1 != config.n1 || baselines.n3 != config.n3)
    throw std::invalid_argument("baselines were computed for a different language space");

  Trajectory traj;
  traj.config = config;
  traj.run_seed = seed;
  traj.parent_a_checksum = checksum(parents.a);
  traj.parent_b_checksum = checksum(parents.b);
  traj.records.reserve(config.generations + 1);

  Rng mix_rng(derive_seed(seed, {0}));
  LanguageTable current = mix_languages(parents.a, parents.b, config.p, mix_rng);
  traj.records.push_back({0, report(current, nullptr, parents.a, parents.b, baselines), checksum(current)});

  for (unsigned g = 1; g <= config.generations; ++g) {
    Rng rng(derive_seed(seed, {g}));
    const Pupil pupil = train_pupil(current, config, rng);
    traj.stats.decoder_steps += pupil.stats.decoder_steps;
    traj.stats.encoder_steps += pupil.stats.encoder_steps;
    traj.stats.autoencoder_steps += pupil.stats.autoencoder_steps;
    LanguageTable next = extract_language(pupil.agent, config.threshold);
    traj.records.push_back({g, report(next, &current, parents.a, parents.b, baselines), checksum(next)});
    current = std::move(next);
  }
  return traj;
}

// One (p, run) cell of a batch; reproducible in isolation.
inline Trajectory run_one(SimConfig config, double p, unsigned run, const Baselines& baselines) {
  config.p = p;
  const Parents parents = make_parents(config.n1, config.n3, parent_seed(config.seed, run));
  Trajectory t = run_simulation(config, parents, baselines, run_seed(config.seed, p, run));
  t.run = run;
  return t;
}

inline unsigned default_jobs() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

// Runs every (p, run) pair on `jobs` worker threads. The result is ordered by
// (p index, run index) whatever the completion order. `first_run` offsets the
// run indices.
inline std::vector<Trajectory> run_batch(const SimConfig& config, std::span<const double> p_grid,
                                         unsigned runs_per_p, const Baselines& baselines,
                                         unsigned jobs = default_jobs(), unsigned first_run = 0) {
  if (runs_per_p == 0) throw std::invalid_argument("runs per p must be at least 1");
  config.validate();
  for (double p : p_grid)
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0, 1]");

  const std::size_t total = p_grid.size() * runs_per_p;
  std::vector<std::optional<Trajectory>> slots(total);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= total) return;
      try {
        slots[k] = run_one(config, p_grid[k / runs_per_p],
                           first_run + static_cast<unsigned>(k % runs_per_p), baselines);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(total);
        return;
      }
    }
  };

  const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(total)));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n);
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<Trajectory> out;
  out.reserve(total);
  for (auto& slot : slots) out.push_back(std::move(*slot));
  return out;
}

}  // namespace silm
