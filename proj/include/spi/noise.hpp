#pragma once

#include "spi/types.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace spi {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    explicit Philox4x32(std::uint64_t seed)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    Counter operator()(Counter ctr) const;

private:
    Key key_;
};

/// Standard normal draw addressed by (seed, noise index, step index, stream tag).
double counter_normal(std::uint64_t seed, std::uint32_t noise, std::uint64_t step, std::uint32_t tag = 0);

/// Increments live on this dyadic grid so that block sums are exact in double precision.
inline constexpr double kIncrementQuantum = 0x1p-46;

/**
 * Brownian increments of m independent Wiener processes on a uniform grid, plus
 * one Rademacher variable per step.  Immutable once built.
 */
class BrownianPath {
public:
    BrownianPath() = default;

    std::uint64_t seed() const { return seed_; }
    int noise_count() const { return m_; }
    std::int64_t steps() const { return steps_; }
    double step_size() const { return h_; }

    double increment(int k, std::int64_t n) const { return dw_[static_cast<std::size_t>(k * steps_ + n)]; }
    /// Increments of step n into out (size m).
    void increments(std::int64_t n, std::span<double> out) const;
    std::span<const double> stream(int k) const;
    int rademacher(std::int64_t n) const { return gamma_[static_cast<std::size_t>(n)]; }

    friend BrownianPath sample_path(std::uint64_t seed, int m, std::int64_t steps, double h);
    friend BrownianPath coarsen(const BrownianPath& path, std::int64_t factor);
    friend BrownianPath zero_path(int m, std::int64_t steps, double h);

private:
    std::uint64_t seed_ = 0;
    int m_ = 0;
    std::int64_t steps_ = 0;
    double h_ = 0.0;
    std::vector<double> dw_;            // m x steps, stream-major
    std::vector<std::int8_t> gamma_;    // one per step
};

/// Deterministic path keyed by (seed, noise index, step index).
BrownianPath sample_path(std::uint64_t seed, int m, std::int64_t steps, double h);
/// Block sums of `factor` consecutive increments; step size factor*h.
BrownianPath coarsen(const BrownianPath& path, std::int64_t factor);
/// Path with every increment zero and gamma = +1.
BrownianPath zero_path(int m, std::int64_t steps, double h);

/// sqrt(h) * clamp(zeta, -A_h, A_h) with A_h = sqrt(4 |ln h|); requires 0 < h < 1.
double truncate_increment(double zeta, double h);
double truncation_threshold(double h);

/// Splitmix-style avalanche of (master, sample_index); injective in sample_index.
std::uint64_t derive_sample_seed(std::uint64_t master, std::uint64_t sample_index);

}  // namespace spi
