#pragma once

#include <array>
#include <cstdint>

namespace nelsonlab {

// Philox 4x32-10 counter-based generator (Salmon et al., SC 2011).
// Stateless: every 128-bit block is a pure function of (key, counter), so
// per-walker streams can be evaluated in any order on any number of threads
// and still reproduce bit-identical results.
struct Philox4x32 {
    using Block = std::array<uint32_t, 4>;
    using Key = std::array<uint32_t, 2>;

    static Block generate(Block counter, Key key);
};

// Draw purposes partition the counter space so independent uses of the same
// (seed, stream) can never collide.
enum class DrawPurpose : uint64_t {
    SdeNoise = 0,
    InitialSample = 1,
    Scratch = 2,
};

/// Stateless source of uniforms and standard normals keyed by
/// (master seed, stream, purpose, counter). A stream is one walker.
class RandomDraws {
public:
    explicit RandomDraws(uint64_t master_seed) : seed_(master_seed) {}

    uint64_t seed() const { return seed_; }

    /// Uniform in (0,1), 53-bit resolution.
    double uniform(uint64_t stream, DrawPurpose purpose, uint64_t counter) const;

    /// Pair of independent standard normals (Box-Muller on one block).
    std::array<double, 2> normal_pair(uint64_t stream, DrawPurpose purpose,
                                      uint64_t counter) const;

    /// First element of normal_pair.
    double normal(uint64_t stream, DrawPurpose purpose, uint64_t counter) const {
        return normal_pair(stream, purpose, counter)[0];
    }

private:
    Philox4x32::Block block(uint64_t stream, DrawPurpose purpose, uint64_t counter) const;
    uint64_t seed_;
};

}  // namespace nelsonlab
