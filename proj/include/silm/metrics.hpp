#pragma once

// Expressivity, compositionality, stability and parent similarity of a
// language table, each normalized against its value for random languages.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "silm/bitlang.hpp"
#include "silm/rng.hpp"

namespace silm {

inline double normalize(double raw, double baseline) {
  if (!(baseline < 1.0)) throw std::invalid_argument("baseline must be below 1");
  return (raw - baseline) / (1.0 - baseline);
}

inline double similarity(const LanguageTable& l1, const LanguageTable& l2, double f0) {
  return normalize(table_similarity_raw(l1, l2), f0);
}

inline std::size_t distinct_signals(const LanguageTable& table) {
  if (table.n3() <= 26) {
    std::vector<std::uint64_t> seen((std::size_t{1} << table.n3()) / 64 + 1, 0);
    std::size_t count = 0;
    for (std::uint32_t s : table.entries()) {
      std::uint64_t& word = seen[s >> 6];
      const std::uint64_t bit = std::uint64_t{1} << (s & 63);
      if (!(word & bit)) {
        word |= bit;
        ++count;
      }
    }
    return count;
  }
  std::vector<std::uint32_t> sorted(table.entries().begin(), table.entries().end());
  std::sort(sorted.begin(), sorted.end());
  return static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

// Distinct signals per meaning, so an injective language scores 1 for any n3.
inline double expressivity_raw(const LanguageTable& table) {
  return static_cast<double>(distinct_signals(table)) / static_cast<double>(table.size());
}

// Binary entropy in bits, 0 log 0 = 0.
inline double binary_entropy(double p) {
  double h = 0.0;
  if (p > 0.0) h -= p * std::log2(p);
  if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
  return h;
}

// Mutual information I(m_i; s_j) in bits for every (i, j), from the exact
// joint distribution over all meanings weighted uniformly. Row-major n1 x n3.
//
// Signal columns are bit-sliced so each joint count is a popcount of an AND
// of two bitsets over the meaning space.
inline std::vector<double> mutual_information_matrix(const LanguageTable& table) {
  const unsigned n1 = table.n1();
  const unsigned n3 = table.n3();
  const std::size_t n = table.size();
  const std::size_t words = (n + 63) / 64;
  const std::uint64_t tail_mask = n % 64 == 0 ? ~std::uint64_t{0} : (std::uint64_t{1} << (n % 64)) - 1;

  std::vector<std::uint64_t> columns(static_cast<std::size_t>(n3) * words, 0);
  for (std::size_t m = 0; m < n; ++m) {
    const std::uint32_t s = table.at(m);
    for (unsigned j = 0; j < n3; ++j)
      columns[j * words + m / 64] |= std::uint64_t{(s >> j) & 1u} << (m % 64);
  }

  // Within-word pattern of meaning bit i for i < 6.
  constexpr std::uint64_t kLowPatterns[6] = {
      0xAAAAAAAAAAAAAAAAULL, 0xCCCCCCCCCCCCCCCCULL, 0xF0F0F0F0F0F0F0F0ULL,
      0xFF00FF00FF00FF00ULL, 0xFFFF0000FFFF0000ULL, 0xFFFFFFFF00000000ULL};

  const double half = static_cast<double>(n) / 2.0;
  std::vector<double> mi(static_cast<std::size_t>(n1) * n3, 0.0);
  for (unsigned j = 0; j < n3; ++j) {
    const std::uint64_t* col = columns.data() + j * words;
    std::size_t ones = 0;
    for (std::size_t w = 0; w < words; ++w) ones += std::popcount(col[w]);
    const double h_s = binary_entropy(static_cast<double>(ones) / static_cast<double>(n));
    for (unsigned i = 0; i < n1; ++i) {
      std::size_t joint = 0;
      for (std::size_t w = 0; w < words; ++w) {
        std::uint64_t pattern = i < 6 ? kLowPatterns[i]
                                      : (((w >> (i - 6)) & 1u) ? ~std::uint64_t{0} : 0);
        if (w + 1 == words) pattern &= tail_mask;
        joint += std::popcount(col[w] & pattern);
      }
      const double p1 = static_cast<double>(joint) / half;
      const double p0 = static_cast<double>(ones - joint) / half;
      const double h_cond = 0.5 * binary_entropy(p1) + 0.5 * binary_entropy(p0);
      mi[i * n3 + j] = std::max(0.0, h_s - h_cond);
    }
  }
  return mi;
}

// Mean over meaning bits of the best mutual information with any signal bit.
inline double compositionality_raw(const LanguageTable& table) {
  const auto mi = mutual_information_matrix(table);
  const unsigned n3 = table.n3();
  double total = 0.0;
  for (unsigned i = 0; i < table.n1(); ++i)
    total += *std::max_element(mi.begin() + i * n3, mi.begin() + (i + 1) * n3);
  return total / static_cast<double>(table.n1());
}

// Uniformly random map from meanings to signals.
inline LanguageTable random_table(unsigned n1, unsigned n3, Rng& rng) {
  LanguageTable::check_shape(n1, n3);
  std::vector<std::uint32_t> entries(std::size_t{1} << n1);
  const std::uint64_t range = std::uint64_t{1} << n3;
  for (auto& e : entries) e = static_cast<std::uint32_t>(rng.below(range));
  return LanguageTable(n1, n3, std::move(entries));
}

inline double baseline_similarity(unsigned /*n1*/, unsigned n3) { return std::ldexp(1.0, -static_cast<int>(n3)); }

// Expected distinct-signal fraction of a uniformly random map.
inline double baseline_expressivity(unsigned n1, unsigned n3) {
  const double signals = std::ldexp(1.0, static_cast<int>(n3));
  const double meanings = std::ldexp(1.0, static_cast<int>(n1));
  const double miss = std::exp(meanings * std::log1p(-1.0 / signals));
  return signals * (1.0 - miss) / meanings;
}

struct Estimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
};

inline Estimate estimate_of(const std::vector<double>& xs) {
  Estimate e;
  e.samples = xs.size();
  if (xs.empty()) return e;
  double sum = 0.0;
  for (double x : xs) sum += x;
  e.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - e.mean) * (x - e.mean);
    e.standard_error = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  return e;
}

inline void require_samples(std::size_t samples) {
  if (samples < 100) throw std::invalid_argument("baseline estimation needs at least 100 samples");
}

inline Estimate monte_carlo_similarity(unsigned n1, unsigned n3, std::size_t samples, Rng& rng) {
  require_samples(samples);
  std::vector<double> xs;
  xs.reserve(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    const auto l1 = random_table(n1, n3, rng);
    const auto l2 = random_table(n1, n3, rng);
    xs.push_back(table_similarity_raw(l1, l2));
  }
  return estimate_of(xs);
}

inline Estimate monte_carlo_expressivity(unsigned n1, unsigned n3, std::size_t samples, Rng& rng) {
  require_samples(samples);
  std::vector<double> xs;
  xs.reserve(samples);
  for (std::size_t k = 0; k < samples; ++k) xs.push_back(expressivity_raw(random_table(n1, n3, rng)));
  return estimate_of(xs);
}

inline Estimate baseline_compositionality(unsigned n1, unsigned n3, std::size_t samples, Rng& rng) {
  require_samples(samples);
  std::vector<double> xs;
  xs.reserve(samples);
  for (std::size_t k = 0; k < samples; ++k) xs.push_back(compositionality_raw(random_table(n1, n3, rng)));
  return estimate_of(xs);
}

// f0 and x0 are analytic, with Monte Carlo estimates kept for audit; c0 is
// Monte Carlo only.
struct Baselines {
  unsigned n1 = 0;
  unsigned n3 = 0;
  double f0 = 0.0;
  double x0 = 0.0;
  double c0 = 0.0;
  Estimate f0_mc;
  Estimate x0_mc;
  Estimate c0_mc;
  std::uint64_t seed = 0;

  static bool within(double analytic, const Estimate& mc, double n_se = 3.0) {
    return std::abs(mc.mean - analytic) <= n_se * mc.standard_error;
  }
  bool f0_ok() const { return within(f0, f0_mc); }
  bool x0_ok() const { return within(x0, x0_mc); }
};

inline Baselines compute_baselines(unsigned n1, unsigned n3, std::size_t samples, std::uint64_t seed) {
  Baselines b;
  b.n1 = n1;
  b.n3 = n3;
  b.seed = seed;
  b.f0 = baseline_similarity(n1, n3);
  b.x0 = baseline_expressivity(n1, n3);
  Rng f_rng(derive_seed(seed, {0}));
  Rng x_rng(derive_seed(seed, {1}));
  Rng c_rng(derive_seed(seed, {2}));
  b.f0_mc = monte_carlo_similarity(n1, n3, samples, f_rng);
  b.x0_mc = monte_carlo_expressivity(n1, n3, samples, x_rng);
  b.c0_mc = baseline_compositionality(n1, n3, samples, c_rng);
  b.c0 = b.c0_mc.mean;
  return b;
}

struct MetricReport {
  double x = 0.0;
  double c = 0.0;
  std::optional<double> s;
  double a = 0.0;
  double b = 0.0;
  double x_raw = 0.0;
  double c_raw = 0.0;
  std::optional<double> s_raw;
  double a_raw = 0.0;
  double b_raw = 0.0;
};

inline MetricReport report(const LanguageTable& now, const LanguageTable* previous,
                           const LanguageTable& parent_a, const LanguageTable& parent_b,
                           const Baselines& base) {
  require_same_shape(now, parent_a);
  require_same_shape(now, parent_b);
  MetricReport r;
  r.x_raw = expressivity_raw(now);
  r.c_raw = compositionality_raw(now);
  r.a_raw = table_similarity_raw(now, parent_a);
  r.b_raw = table_similarity_raw(now, parent_b);
  r.x = normalize(r.x_raw, base.x0);
  r.c = normalize(r.c_raw, base.c0);
  r.a = normalize(r.a_raw, base.f0);
  r.b = normalize(r.b_raw, base.f0);
  if (previous != nullptr) {
    r.s_raw = table_similarity_raw(now, *previous);
    r.s = normalize(*r.s_raw, base.f0);
  }
  return r;
}

}  // namespace silm
