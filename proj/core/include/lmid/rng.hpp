#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lmid {

using Rng = std::mt19937_64;

// Derives an independent stream seed from a root seed, a purpose label and
// optional indices (e.g. iteration, batch item). Pure function.
std::uint64_t derive_seed(std::uint64_t root, std::string_view label, std::uint64_t a = 0,
                          std::uint64_t b = 0);

inline Rng make_rng(std::uint64_t root, std::string_view label, std::uint64_t a = 0,
                    std::uint64_t b = 0) {
  return Rng(derive_seed(root, label, a, b));
}

// Standard normal draw. Uses Box-Muller on the raw engine so the stream is
// identical across standard library implementations.
double standard_normal(Rng& rng);
// Uniform in [0,1) with 53 random bits.
double uniform01(Rng& rng);

}  // namespace lmid
