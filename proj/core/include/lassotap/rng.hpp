#pragma once

#include <cstdint>
#include <random>

namespace lassotap {

// One master seed spawns independent substreams keyed by (purpose, index).
// Streams are derived by splitmix64 mixing, never by advancing a shared
// generator, so replications are order-independent across worker counts.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Substream purposes used across the library.  Each (purpose, index) pair is
// a documented, stable address into the master seed's stream space.
enum class Stream : std::uint64_t {
    signal = 1,   // ground-truth signal draw (index unused, pass 0)
    matrix = 2,   // measurement-matrix draw, index = replication
    noise = 3,    // observation noise draw, index = replication
    rows = 4,     // row selection inside generate_matrix
    haar_u = 5,   // left Haar factor (geometric ensemble)
    haar_v = 6,   // right Haar factor (geometric / row-orthogonal)
    folds = 7,    // cross-validation fold permutation
};

inline std::uint64_t substream_seed(std::uint64_t master, Stream purpose,
                                    std::uint64_t index = 0) {
    std::uint64_t s = splitmix64(master);
    s = splitmix64(s ^ (static_cast<std::uint64_t>(purpose) * 0x632be59bd9b4e019ull));
    s = splitmix64(s ^ (index + 0xd1b54a32d192ed03ull));
    return s;
}

inline std::mt19937_64 make_rng(std::uint64_t master, Stream purpose,
                                std::uint64_t index = 0) {
    return std::mt19937_64(substream_seed(master, purpose, index));
}

}  // namespace lassotap
