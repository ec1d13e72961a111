#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace elstm_lab {

// Named, seeded random substream.
//
// Every consumer of randomness ("weights", "elm", "egate-encode", "data",
// "sample") draws from its own stream derived from (seed, name), so adding a
// consumer never perturbs the draws of another. Only the raw 64-bit output of
// mt19937_64 is used (the standard pins it exactly); the real and integer
// mappings below are written out by hand so results do not depend on the
// standard library's distribution implementations.
class Substream {
 public:
  Substream(std::uint64_t seed, std::string_view name);

  // Uniform on [0, 1).
  double uniform();
  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace elstm_lab
