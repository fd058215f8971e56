#include "aeg/rng.hpp"

#include <limits>
#include <vector>

namespace aeg {

std::mt19937_64 seeded_rng(std::uint64_t seed, std::string_view salt) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + salt.size());
  words.push_back(static_cast<std::uint32_t>(seed & 0xffffffffu));
  words.push_back(static_cast<std::uint32_t>(seed >> 32));
  for (unsigned char c : salt) words.push_back(c);
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t draw = rng();
  while (draw >= limit) draw = rng();
  return draw % n;
}

}  // namespace aeg
