#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace fmea::util {

// Lowercases ASCII, trims outer whitespace, collapses inner runs to one
// space. Non-ASCII bytes pass through untouched.
std::string normalize(std::string_view text);

std::string trim(std::string_view text);

std::vector<std::string> split(std::string_view text, char sep);

// Splits on any of the given separator characters, trims pieces, drops
// empties.
std::vector<std::string> split_any_trimmed(std::string_view text,
                                           std::string_view seps);

bool is_valid_utf8(std::string_view bytes);

// FNV-1a 64-bit, rendered as 16 hex digits. Used to key replay transcripts.
std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);

// splitmix64-style combiner for deriving stream seeds (epoch RNGs etc.).
inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Character trigram Jaccard similarity over normalized strings. Strings
// shorter than three bytes contribute themselves as a single gram.
double trigram_jaccard(std::string_view a, std::string_view b);

// Deterministic RNG helpers. std::uniform_* distributions are
// implementation-defined, so sampling goes through these everywhere a
// seeded run must reproduce bit-for-bit across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, bound) by rejection; bound > 0.
  std::uint64_t below(std::uint64_t bound);

  // Uniform double in [0, 1) with 53 random bits.
  double unit();

  // Standard normal via Box-Muller.
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace fmea::util
