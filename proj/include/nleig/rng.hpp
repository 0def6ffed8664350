#pragma once

// Counter-based random numbers: Philox4x32-10 keyed by the run seed, with
// the counter holding (path index, draw index). Every path owns an
// independent stream, so results do not depend on how paths are spread over
// threads.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace nleig {

class Philox4x32 {
public:
    using Block = std::array<std::uint32_t, 4>;

    static Block generate(std::uint64_t key, std::uint64_t hi, std::uint64_t lo) noexcept
    {
        Block ctr{static_cast<std::uint32_t>(lo), static_cast<std::uint32_t>(lo >> 32),
                  static_cast<std::uint32_t>(hi), static_cast<std::uint32_t>(hi >> 32)};
        std::uint32_t k0 = static_cast<std::uint32_t>(key);
        std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k0, static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k1, static_cast<std::uint32_t>(p0)};
            k0 += kWeyl0;
            k1 += kWeyl1;
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// The random stream of one path.
class PathStream {
public:
    PathStream(std::uint64_t seed, std::uint64_t path) noexcept : seed_(seed), path_(path) {}

    /// Uniform on the open interval (0, 1), 53 bits.
    double uniform() noexcept
    {
        const std::uint64_t bits = next64() >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal by Box-Muller, caching the second variate.
    double normal() noexcept
    {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double phi = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(phi);
        have_spare_ = true;
        return r * std::cos(phi);
    }

    /// Inverse Gaussian with the given mean and shape (Michael, Schucany and
    /// Haas transformation).
    double inverse_gaussian(double mean, double shape) noexcept
    {
        const double z = normal();
        const double y = z * z;
        const double my = mean * y;
        const double x = mean + mean * (my - std::sqrt(4.0 * mean * shape * y + my * my)) /
                                    (2.0 * shape);
        return uniform() <= mean / (mean + x) ? x : mean * mean / x;
    }

    [[nodiscard]] std::uint64_t draws() const noexcept { return counter_; }

private:
    std::uint64_t next64() noexcept
    {
        if (used_ >= 2) {
            block_ = Philox4x32::generate(seed_, path_, counter_++);
            used_ = 0;
        }
        const std::uint64_t out = (std::uint64_t{block_[2 * used_ + 1]} << 32) | block_[2 * used_];
        ++used_;
        return out;
    }

    std::uint64_t seed_;
    std::uint64_t path_;
    std::uint64_t counter_ = 0;
    Philox4x32::Block block_{};
    int used_ = 2;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace nleig
