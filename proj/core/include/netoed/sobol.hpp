#pragma once

#include <cstdint>
#include <vector>

namespace netoed {

/// Sobol low-discrepancy sequence (Joe-Kuo direction numbers, up to 8 dimensions)
/// with hash-based nested uniform (Owen) scrambling keyed by a seed.
///
/// Index 0 of the unscrambled sequence is the origin; `point(i)` returns the
/// scrambled point for sequence index i and callers skip i = 0.
class SobolSequence {
public:
    static constexpr unsigned kMaxDims = 8;

    SobolSequence(unsigned dims, std::uint64_t seed, bool scramble = true);

    unsigned dims() const { return dims_; }

    /// Point i of the sequence, every coordinate in (0, 1).
    std::vector<double> point(std::uint32_t index) const;

    /// Points 1..n (the origin is skipped).
    std::vector<std::vector<double>> first(std::size_t n) const;

private:
    unsigned dims_;
    bool scramble_;
    std::vector<std::uint32_t> dim_seeds_;
    std::vector<std::vector<std::uint32_t>> directions_;
};

}  // namespace netoed
