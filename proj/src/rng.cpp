#include "nelsonlab/rng.hpp"

#include <cmath>

namespace nelsonlab {

namespace {

constexpr uint32_t kPhiloxW32A = 0x9E3779B9;
constexpr uint32_t kPhiloxW32B = 0xBB67AE85;
constexpr uint32_t kPhiloxM4x32A = 0xD2511F53;
constexpr uint32_t kPhiloxM4x32B = 0xCD9E8D57;

inline void mul_hi_lo(uint32_t a, uint32_t b, uint32_t& lo, uint32_t& hi) {
    const uint64_t p = static_cast<uint64_t>(a) * b;
    lo = static_cast<uint32_t>(p);
    hi = static_cast<uint32_t>(p >> 32);
}

inline void one_round(Philox4x32::Block& c, const Philox4x32::Key& k) {
    uint32_t lo0, hi0, lo1, hi1;
    mul_hi_lo(kPhiloxM4x32A, c[0], lo0, hi0);
    mul_hi_lo(kPhiloxM4x32B, c[2], lo1, hi1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

inline uint64_t join64(uint32_t hi, uint32_t lo) {
    return (static_cast<uint64_t>(hi) << 32) | lo;
}

// 53-bit uniform strictly inside (0,1); safe under log().
inline double to_unit_interval(uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Block Philox4x32::generate(Block counter, Key key) {
    for (int round = 0; round < 10; ++round) {
        one_round(counter, key);
        key[0] += kPhiloxW32A;
        key[1] += kPhiloxW32B;
    }
    return counter;
}

Philox4x32::Block RandomDraws::block(uint64_t stream, DrawPurpose purpose,
                                     uint64_t counter) const {
    // Purpose tag lives in the top byte of the counter word pair.
    const uint64_t tagged = counter | (static_cast<uint64_t>(purpose) << 56);
    const Philox4x32::Block ctr = {
        static_cast<uint32_t>(tagged), static_cast<uint32_t>(tagged >> 32),
        static_cast<uint32_t>(stream), static_cast<uint32_t>(stream >> 32)};
    const Philox4x32::Key key = {static_cast<uint32_t>(seed_),
                                 static_cast<uint32_t>(seed_ >> 32)};
    return Philox4x32::generate(ctr, key);
}

double RandomDraws::uniform(uint64_t stream, DrawPurpose purpose, uint64_t counter) const {
    const auto b = block(stream, purpose, counter);
    return to_unit_interval(join64(b[0], b[1]));
}

std::array<double, 2> RandomDraws::normal_pair(uint64_t stream, DrawPurpose purpose,
                                               uint64_t counter) const {
    const auto b = block(stream, purpose, counter);
    const double u1 = to_unit_interval(join64(b[0], b[1]));
    const double u2 = to_unit_interval(join64(b[2], b[3]));
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
}

}  // namespace nelsonlab
