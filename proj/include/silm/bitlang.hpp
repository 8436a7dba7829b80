#pragma once

// Binary meaning/signal spaces and languages over them.
//
// A meaning (n1 bits) or signal (n3 bits) is stored as an unsigned integer,
// bit i of the vector being bit i of the integer (little-endian). A language
// is a total table from every one of the 2^n1 meanings to a signal.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "silm/rng.hpp"

namespace silm {

inline constexpr unsigned kMaxMeaningBits = 20;
inline constexpr unsigned kMaxSignalBits = 31;

constexpr std::uint32_t low_mask(unsigned width) {
  return width >= 32 ? ~std::uint32_t{0} : (std::uint32_t{1} << width) - 1;
}

template <class Tag>
class BitVector {
 public:
  BitVector(std::uint32_t value, unsigned width) : value_(value), width_(width) {
    if (width == 0 || width > kMaxSignalBits)
      throw std::invalid_argument("bit vector width out of range: " + std::to_string(width));
    if ((value & ~low_mask(width)) != 0)
      throw std::invalid_argument("value does not fit in " + std::to_string(width) + " bits");
  }

  static BitVector from_bits(std::span<const std::uint8_t> bits) {
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i] > 1) throw std::invalid_argument("bit vector component is not 0/1");
      v |= std::uint32_t{bits[i]} << i;
    }
    return BitVector(v, static_cast<unsigned>(bits.size()));
  }

  std::uint32_t to_int() const { return value_; }
  unsigned width() const { return width_; }
  bool bit(unsigned i) const { return (value_ >> i) & 1u; }

  std::vector<std::uint8_t> bits() const {
    std::vector<std::uint8_t> out(width_);
    for (unsigned i = 0; i < width_; ++i) out[i] = bit(i) ? 1 : 0;
    return out;
  }

  // Bit 0 first.
  std::string to_string() const {
    std::string s(width_, '0');
    for (unsigned i = 0; i < width_; ++i)
      if (bit(i)) s[i] = '1';
    return s;
  }

  friend bool operator==(const BitVector&, const BitVector&) = default;

 private:
  std::uint32_t value_;
  unsigned width_;
};

struct MeaningTag {};
struct SignalTag {};
using Meaning = BitVector<MeaningTag>;
using Signal = BitVector<SignalTag>;

// Real-valued 0/1 encoding of the low `width` bits of `value`, for network input.
inline void bits_to_real(std::uint32_t value, unsigned width, std::span<double> out) {
  for (unsigned i = 0; i < width; ++i) out[i] = static_cast<double>((value >> i) & 1u);
}

inline std::vector<double> bits_to_real(std::uint32_t value, unsigned width) {
  std::vector<double> out(width);
  bits_to_real(value, width, out);
  return out;
}

class LanguageTable {
 public:
  LanguageTable(unsigned n1, unsigned n3, std::vector<std::uint32_t> entries)
      : n1_(n1), n3_(n3), entries_(std::move(entries)) {
    check_shape(n1, n3);
    if (entries_.size() != (std::size_t{1} << n1))
      throw std::invalid_argument("language table must have 2^n1 entries");
    const std::uint32_t mask = low_mask(n3);
    for (std::uint32_t s : entries_)
      if ((s & ~mask) != 0) throw std::invalid_argument("signal does not fit in n3 bits");
  }

  unsigned n1() const { return n1_; }
  unsigned n3() const { return n3_; }
  std::size_t size() const { return entries_.size(); }

  Signal operator()(const Meaning& m) const {
    if (m.width() != n1_) throw std::invalid_argument("meaning width does not match table");
    return Signal(entries_[m.to_int()], n3_);
  }

  // Raw signal integer for meaning index m.
  std::uint32_t at(std::size_t m) const { return entries_.at(m); }
  std::span<const std::uint32_t> entries() const { return entries_; }

  bool same_shape(const LanguageTable& other) const {
    return n1_ == other.n1_ && n3_ == other.n3_;
  }

  friend bool operator==(const LanguageTable&, const LanguageTable&) = default;

  static void check_shape(unsigned n1, unsigned n3) {
    if (n1 < 1 || n1 > kMaxMeaningBits)
      throw std::invalid_argument("meaning bit length must be in [1, 20], got " +
                                  std::to_string(n1));
    if (n3 < 1 || n3 > kMaxSignalBits)
      throw std::invalid_argument("signal bit length must be in [1, 31], got " +
                                  std::to_string(n3));
  }

 private:
  unsigned n1_;
  unsigned n3_;
  std::vector<std::uint32_t> entries_;
};

inline void require_same_shape(const LanguageTable& a, const LanguageTable& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("language tables differ in shape");
}

// FNV-1a over the table entries; identifies a language in manifests.
inline std::uint64_t checksum(const LanguageTable& table) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto mix = [&h](std::uint32_t v) {
    for (int k = 0; k < 4; ++k) {
      h ^= (v >> (8 * k)) & 0xFFu;
      h *= 0x100000001B3ULL;
    }
  };
  mix(table.n1());
  mix(table.n3());
  for (std::uint32_t s : table.entries()) mix(s);
  return h;
}

inline LanguageTable identity_language(unsigned n) {
  if (n < 1 || n > kMaxMeaningBits)
    throw std::invalid_argument("identity language bit length must be in [1, 20]");
  std::vector<std::uint32_t> entries(std::size_t{1} << n);
  std::iota(entries.begin(), entries.end(), std::uint32_t{0});
  return LanguageTable(n, n, std::move(entries));
}

// A perfectly compositional language: signal bit perm[i] carries meaning bit
// i XOR flips[i]; every other signal position holds a constant filler bit.
class CompositionalLanguage {
 public:
  struct Filler {
    unsigned position;
    bool value;
    friend bool operator==(const Filler&, const Filler&) = default;
  };

  CompositionalLanguage(unsigned n3, std::vector<unsigned> perm, std::vector<bool> flips,
                        std::vector<Filler> filler)
      : n3_(n3), perm_(std::move(perm)), flips_(std::move(flips)), filler_(std::move(filler)) {
    const auto n1 = static_cast<unsigned>(perm_.size());
    LanguageTable::check_shape(n1, n3);
    if (n1 > n3) throw std::invalid_argument("compositional language needs n1 <= n3");
    if (flips_.size() != n1) throw std::invalid_argument("flips must have n1 entries");
    std::vector<int> owner(n3, 0);
    for (unsigned j : perm_) {
      if (j >= n3 || owner[j]++ != 0)
        throw std::invalid_argument("permutation is not injective into signal positions");
    }
    if (filler_.size() != n3 - n1)
      throw std::invalid_argument("filler must cover exactly the unmapped signal positions");
    for (const Filler& f : filler_) {
      if (f.position >= n3 || owner[f.position]++ != 0)
        throw std::invalid_argument("filler position is mapped or repeated");
    }
    for (unsigned i = 0; i < n1; ++i)
      if (flips_[i]) flip_mask_ |= std::uint32_t{1} << perm_[i];
    for (const Filler& f : filler_)
      if (f.value) filler_bits_ |= std::uint32_t{1} << f.position;
  }

  unsigned n1() const { return static_cast<unsigned>(perm_.size()); }
  unsigned n3() const { return n3_; }
  const std::vector<unsigned>& perm() const { return perm_; }
  const std::vector<bool>& flips() const { return flips_; }
  const std::vector<Filler>& filler() const { return filler_; }

  std::uint32_t encode(std::uint32_t meaning) const {
    std::uint32_t s = filler_bits_;
    for (unsigned i = 0; i < perm_.size(); ++i)
      s |= ((meaning >> i) & 1u) << perm_[i];
    return s ^ flip_mask_;
  }

  Signal operator()(const Meaning& m) const {
    if (m.width() != n1()) throw std::invalid_argument("meaning width does not match language");
    return Signal(encode(m.to_int()), n3_);
  }

 private:
  unsigned n3_;
  std::vector<unsigned> perm_;
  std::vector<bool> flips_;
  std::vector<Filler> filler_;
  std::uint32_t flip_mask_ = 0;
  std::uint32_t filler_bits_ = 0;
};

// Uniform over injective position maps, flip bits and filler bits.
inline CompositionalLanguage random_compositional_language(unsigned n1, unsigned n3, Rng& rng) {
  if (n1 > n3) throw std::invalid_argument("compositional language needs n1 <= n3");
  LanguageTable::check_shape(n1, n3);
  std::vector<unsigned> positions(n3);
  std::iota(positions.begin(), positions.end(), 0u);
  rng.shuffle(positions.begin(), positions.end());
  std::vector<unsigned> perm(positions.begin(), positions.begin() + n1);
  std::vector<bool> flips(n1);
  for (unsigned i = 0; i < n1; ++i) flips[i] = rng.bernoulli(0.5);
  std::vector<unsigned> unused(positions.begin() + n1, positions.end());
  std::sort(unused.begin(), unused.end());
  std::vector<CompositionalLanguage::Filler> filler;
  filler.reserve(unused.size());
  for (unsigned j : unused) filler.push_back({j, rng.bernoulli(0.5)});
  return CompositionalLanguage(n3, std::move(perm), std::move(flips), std::move(filler));
}

inline LanguageTable expand(const CompositionalLanguage& cl) {
  std::vector<std::uint32_t> entries(std::size_t{1} << cl.n1());
  for (std::size_t m = 0; m < entries.size(); ++m)
    entries[m] = cl.encode(static_cast<std::uint32_t>(m));
  return LanguageTable(cl.n1(), cl.n3(), std::move(entries));
}

// Per meaning, take A's signal with probability p, otherwise B's.
inline LanguageTable mix_languages(const LanguageTable& a, const LanguageTable& b, double p,
                                   Rng& rng) {
  require_same_shape(a, b);
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("mixing weight must lie in [0, 1]");
  std::vector<std::uint32_t> entries(a.size());
  for (std::size_t m = 0; m < entries.size(); ++m)
    entries[m] = rng.bernoulli(p) ? a.at(m) : b.at(m);
  return LanguageTable(a.n1(), a.n3(), std::move(entries));
}

// Number of meanings on which two tables give the same signal.
inline std::size_t agreement_count(const LanguageTable& l1, const LanguageTable& l2) {
  require_same_shape(l1, l2);
  std::size_t agree = 0;
  for (std::size_t m = 0; m < l1.size(); ++m) agree += l1.at(m) == l2.at(m);
  return agree;
}

inline double table_similarity_raw(const LanguageTable& l1, const LanguageTable& l2) {
  return static_cast<double>(agreement_count(l1, l2)) / static_cast<double>(l1.size());
}

// Text format: header `n1=<v> n3=<v>`, then one 0/1 string per meaning in
// integer order, bit 0 first.
inline void write_table(std::ostream& os, const LanguageTable& table) {
  os << "n1=" << table.n1() << " n3=" << table.n3() << '\n';
  for (std::uint32_t s : table.entries()) os << Signal(s, table.n3()).to_string() << '\n';
}

inline LanguageTable read_table(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw std::runtime_error("language table: missing header");
  unsigned n1 = 0;
  unsigned n3 = 0;
  if (std::sscanf(header.c_str(), "n1=%u n3=%u", &n1, &n3) != 2)
    throw std::runtime_error("language table: malformed header '" + header + "'");
  LanguageTable::check_shape(n1, n3);
  std::vector<std::uint32_t> entries;
  entries.reserve(std::size_t{1} << n1);
  std::string line;
  while (entries.size() < (std::size_t{1} << n1) && std::getline(is, line)) {
    if (line.size() != n3) throw std::runtime_error("language table: bad signal width");
    std::uint32_t v = 0;
    for (unsigned i = 0; i < n3; ++i) {
      if (line[i] == '1')
        v |= std::uint32_t{1} << i;
      else if (line[i] != '0')
        throw std::runtime_error("language table: signal must be a 0/1 string");
    }
    entries.push_back(v);
  }
  if (entries.size() != (std::size_t{1} << n1))
    throw std::runtime_error("language table: expected 2^n1 signal lines");
  return LanguageTable(n1, n3, std::move(entries));
}

}  // namespace silm
