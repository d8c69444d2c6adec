#ifndef QFIL_RNG_HPP_
#define QFIL_RNG_HPP_

#include <cstdint>
#include <string>
#include <string_view>

namespace qfil {

// Counter-based random stream. Draws are a pure function of
// (seed, label, counter), so streams are reproducible across runs and
// platforms and independent consumers cannot perturb each other.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view label);

  std::uint64_t next_u64();

  // Uniform double in [0, 1) with 53 random bits.
  double uniform();
  // Uniform double in (0, 1); never returns an exact endpoint.
  double uniform_open();
  double uniform(double lo, double hi);
  // Uniform index in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);
  // Standard normal via the inverse CDF (deterministic, no rejection).
  double normal();

  std::uint64_t seed() const { return seed_; }
  const std::string& label() const { return label_; }
  std::uint64_t counter() const { return counter_; }

  // Derives an independent child stream, e.g. per stage or per worker.
  RngStream substream(std::string_view label) const;

 private:
  std::uint64_t seed_ = 0;
  std::string label_;
  std::uint64_t base_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace qfil

#endif  // QFIL_RNG_HPP_
