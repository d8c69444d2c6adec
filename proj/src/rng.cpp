#include "qfil/rng.hpp"

#include <stdexcept>

#include "qfil/gauss.hpp"

namespace qfil {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// splitmix64 finalizer.
std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_label(std::uint64_t seed, std::string_view label) {
  // FNV-1a over the label bytes, folded with the seed.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : label) {
    h = (h ^ static_cast<unsigned char>(c)) * 0x100000001B3ULL;
  }
  return mix(mix(seed + kGolden) ^ h);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::string_view label)
    : seed_(seed), label_(label), base_(hash_label(seed, label)) {}

std::uint64_t RngStream::next_u64() {
  return mix(base_ + kGolden * ++counter_);
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_open() {
  // (u + 0.5) / 2^53 lies strictly inside (0, 1).
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
  // Multiply-shift map of a 64-bit draw onto [0, n).
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

double RngStream::normal() {
  return inverse_normal_cdf(uniform_open());
}

RngStream RngStream::substream(std::string_view label) const {
  std::string child = label_;
  child += '/';
  child += label;
  return RngStream(seed_, child);
}

}  // namespace qfil
