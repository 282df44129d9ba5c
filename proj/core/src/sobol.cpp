#include "netoed/sobol.hpp"

#include <array>

#include "netoed/error.hpp"
#include "netoed/rng.hpp"

namespace netoed {
namespace {

struct Primitive {
    unsigned degree;
    std::uint32_t coeffs;
    std::array<std::uint32_t, 5> m;
};

// new-joe-kuo-6.21201, dimensions 2..8. Dimension 1 is the van der Corput sequence.
constexpr std::array<Primitive, 7> kPrimitives{{
    {1, 0, {1, 0, 0, 0, 0}},
    {2, 1, {1, 3, 0, 0, 0}},
    {3, 1, {1, 3, 1, 0, 0}},
    {3, 2, {1, 1, 1, 0, 0}},
    {4, 1, {1, 1, 3, 3, 0}},
    {4, 4, {1, 3, 5, 13, 0}},
    {5, 2, {1, 1, 5, 5, 17}},
}};

constexpr unsigned kBits = 32;

std::uint32_t reverse_bits(std::uint32_t x) {
    x = ((x >> 1) & 0x55555555u) | ((x & 0x55555555u) << 1);
    x = ((x >> 2) & 0x33333333u) | ((x & 0x33333333u) << 2);
    x = ((x >> 4) & 0x0f0f0f0fu) | ((x & 0x0f0f0f0fu) << 4);
    x = ((x >> 8) & 0x00ff00ffu) | ((x & 0x00ff00ffu) << 8);
    return (x >> 16) | (x << 16);
}

// Laine-Karras style permutation: each output bit depends only on itself and
// lower input bits, so applying it to the bit-reversed value is a nested
// uniform scramble of the binary digits.
std::uint32_t lk_permute(std::uint32_t x, std::uint32_t seed) {
    x += seed;
    x ^= x * 0x6c50b47cu;
    x ^= x * 0xb82f1e52u;
    x ^= x * 0xc7afe638u;
    x ^= x * 0x8d22f6e6u;
    return x;
}

std::uint32_t owen_scramble(std::uint32_t x, std::uint32_t seed) {
    return reverse_bits(lk_permute(reverse_bits(x), seed));
}

std::vector<std::uint32_t> direction_numbers(unsigned dim) {
    std::vector<std::uint32_t> v(kBits);
    if (dim == 0) {
        for (unsigned k = 0; k < kBits; ++k) v[k] = 1u << (kBits - 1 - k);
        return v;
    }
    const Primitive& p = kPrimitives[dim - 1];
    const unsigned s = p.degree;
    for (unsigned k = 0; k < s; ++k) v[k] = p.m[k] << (kBits - 1 - k);
    for (unsigned k = s; k < kBits; ++k) {
        std::uint32_t value = v[k - s] ^ (v[k - s] >> s);
        for (unsigned j = 1; j < s; ++j) {
            if ((p.coeffs >> (s - 1 - j)) & 1u) value ^= v[k - j];
        }
        v[k] = value;
    }
    return v;
}

}  // namespace

SobolSequence::SobolSequence(unsigned dims, std::uint64_t seed, bool scramble)
    : dims_(dims), scramble_(scramble) {
    if (dims == 0 || dims > kMaxDims) throw InputError("Sobol dimension must be in [1, 8]");
    for (unsigned d = 0; d < dims; ++d) {
        directions_.push_back(direction_numbers(d));
        dim_seeds_.push_back(static_cast<std::uint32_t>(stream_key(seed, {0x50b01u, d})));
    }
}

std::vector<double> SobolSequence::point(std::uint32_t index) const {
    std::vector<double> out(dims_);
    for (unsigned d = 0; d < dims_; ++d) {
        std::uint32_t x = 0;
        std::uint32_t i = index;
        for (unsigned k = 0; i != 0; ++k, i >>= 1) {
            if (i & 1u) x ^= directions_[d][k];
        }
        if (scramble_) x = owen_scramble(x, dim_seeds_[d]);
        // Unscrambled points sit exactly on dyadic rationals; scrambled ones are
        // centred in their 2^-32 cell so no coordinate is ever 0 or 1.
        out[d] = scramble_ ? (static_cast<double>(x) + 0.5) * 0x1.0p-32
                           : static_cast<double>(x) * 0x1.0p-32;
    }
    return out;
}

std::vector<std::vector<double>> SobolSequence::first(std::size_t n) const {
    std::vector<std::vector<double>> pts;
    pts.reserve(n);
    for (std::size_t i = 1; i <= n; ++i) pts.push_back(point(static_cast<std::uint32_t>(i)));
    return pts;
}

}  // namespace netoed
