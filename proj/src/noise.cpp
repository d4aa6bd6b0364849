#include "spi/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace spi {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

constexpr std::uint32_t kIncrementTag = 0;
constexpr std::uint32_t kRademacherTag = 1;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline double to_unit_open_left(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return static_cast<double>((bits >> 11) + 1) * 0x1p-53;  // (0, 1]
}

inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return static_cast<double>(bits >> 11) * 0x1p-53;  // [0, 1)
}

Philox4x32::Counter make_counter(std::uint64_t step, std::uint32_t lane, std::uint32_t tag) {
    return {static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32), lane, tag};
}

std::vector<std::int8_t> rademacher_stream(std::uint64_t seed, std::int64_t steps) {
    const Philox4x32 gen(seed);
    std::vector<std::int8_t> gamma(static_cast<std::size_t>(steps));
    for (std::int64_t n = 0; n < steps; ++n) {
        const auto r = gen(make_counter(static_cast<std::uint64_t>(n), static_cast<std::uint32_t>(steps),
                                        kRademacherTag));
        gamma[static_cast<std::size_t>(n)] = (r[0] & 1u) ? 1 : -1;
    }
    return gamma;
}

}  // namespace

Philox4x32::Counter Philox4x32::operator()(Counter ctr) const {
    Key key = key_;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

double counter_normal(std::uint64_t seed, std::uint32_t noise, std::uint64_t step, std::uint32_t tag) {
    const auto r = Philox4x32(seed)(make_counter(step, noise, tag));
    const double u1 = to_unit_open_left(r[0], r[1]);
    const double u2 = to_unit(r[2], r[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void BrownianPath::increments(std::int64_t n, std::span<double> out) const {
    for (int k = 0; k < m_; ++k) out[static_cast<std::size_t>(k)] = increment(k, n);
}

std::span<const double> BrownianPath::stream(int k) const {
    return {dw_.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(steps_),
            static_cast<std::size_t>(steps_)};
}

BrownianPath sample_path(std::uint64_t seed, int m, std::int64_t steps, double h) {
    if (steps < 1) throw ContractError("sample_path: need at least one step");
    if (!(h > 0.0) || !std::isfinite(h)) throw ContractError("sample_path: step size must be positive");
    if (m < 0) throw ContractError("sample_path: negative noise count");
    BrownianPath p;
    p.seed_ = seed;
    p.m_ = m;
    p.steps_ = steps;
    p.h_ = h;
    p.dw_.resize(static_cast<std::size_t>(m) * static_cast<std::size_t>(steps));
    const double scale = std::sqrt(h);
    for (int k = 0; k < m; ++k) {
        for (std::int64_t n = 0; n < steps; ++n) {
            const double z = counter_normal(seed, static_cast<std::uint32_t>(k), static_cast<std::uint64_t>(n),
                                            kIncrementTag);
            p.dw_[static_cast<std::size_t>(k * steps + n)] =
                std::nearbyint(scale * z / kIncrementQuantum) * kIncrementQuantum;
        }
    }
    p.gamma_ = rademacher_stream(seed, steps);
    return p;
}

BrownianPath zero_path(int m, std::int64_t steps, double h) {
    if (steps < 1) throw ContractError("zero_path: need at least one step");
    BrownianPath p;
    p.m_ = m;
    p.steps_ = steps;
    p.h_ = h;
    p.dw_.assign(static_cast<std::size_t>(m) * static_cast<std::size_t>(steps), 0.0);
    p.gamma_.assign(static_cast<std::size_t>(steps), 1);
    return p;
}

BrownianPath coarsen(const BrownianPath& path, std::int64_t factor) {
    if (factor < 1 || path.steps_ % factor != 0) {
        throw ContractError("coarsen: factor " + std::to_string(factor) + " does not divide " +
                            std::to_string(path.steps_) + " steps");
    }
    if (factor == 1) return path;
    BrownianPath p;
    p.seed_ = path.seed_;
    p.m_ = path.m_;
    p.steps_ = path.steps_ / factor;
    p.h_ = path.h_ * static_cast<double>(factor);
    p.dw_.resize(static_cast<std::size_t>(p.m_) * static_cast<std::size_t>(p.steps_));
    for (int k = 0; k < p.m_; ++k) {
        const auto fine = path.stream(k);
        for (std::int64_t n = 0; n < p.steps_; ++n) {
            double sum = 0.0;
            for (std::int64_t i = 0; i < factor; ++i) sum += fine[static_cast<std::size_t>(n * factor + i)];
            p.dw_[static_cast<std::size_t>(k * p.steps_ + n)] = sum;
        }
    }
    const bool is_zero = std::all_of(path.dw_.begin(), path.dw_.end(), [](double v) { return v == 0.0; }) &&
                         std::all_of(path.gamma_.begin(), path.gamma_.end(), [](std::int8_t g) { return g == 1; });
    p.gamma_ = is_zero ? std::vector<std::int8_t>(static_cast<std::size_t>(p.steps_), 1)
                       : rademacher_stream(p.seed_, p.steps_);
    return p;
}

double truncation_threshold(double h) {
    if (!(h > 0.0) || !(h < 1.0)) {
        throw DomainError("truncation threshold sqrt(4|ln h|) requires 0 < h < 1");
    }
    return std::sqrt(4.0 * std::abs(std::log(h)));
}

double truncate_increment(double zeta, double h) {
    const double a = truncation_threshold(h);
    return std::sqrt(h) * std::clamp(zeta, -a, a);
}

std::uint64_t derive_sample_seed(std::uint64_t master, std::uint64_t sample_index) {
    // splitmix64: the finaliser is a bijection and the Weyl step is injective in the index.
    std::uint64_t z = master + (sample_index + 1) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace spi
