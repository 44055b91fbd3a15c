#pragma once

#include <cstdint>
#include <random>

namespace projmon {

// All randomness in the library flows from one root seed per invocation.
// Sub-streams (per replication, per generator, per training run) derive
// their own seed with derive_seed(root, tag[, index]) so that results do
// not depend on scheduling or on the order in which sub-tasks run.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag) {
    return splitmix64(splitmix64(root) ^ splitmix64(tag * 0xD1B54A32D192ED03ULL + 1));
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag, std::uint64_t index) {
    return derive_seed(derive_seed(root, tag), index);
}

// Fixed tags for the documented seed-derivation tree.
namespace seed_tag {
inline constexpr std::uint64_t critval_rep = 1;   // + replication index
inline constexpr std::uint64_t datagen = 2;       // + stream index
inline constexpr std::uint64_t mixing = 3;        // VectorMA mixing matrices
inline constexpr std::uint64_t train_init = 4;    // network initialization
inline constexpr std::uint64_t train_shuffle = 5; // + epoch
}  // namespace seed_tag

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace projmon
