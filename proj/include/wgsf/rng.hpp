#pragma once

// Counter-based random numbers.  Every draw is a pure function of
// (seed, trajectory, stream, draw index), so any subset of trajectories or
// steps can be regenerated without replaying the ones before it.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace wgsf {

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
class Philox4x32 {
public:
    using counter_type = std::array<std::uint32_t, 4>;
    using key_type = std::array<std::uint32_t, 2>;

    static counter_type generate(counter_type ctr, key_type key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Stream tag for trajectory initialisation; integration step s uses tag s + 1.
inline constexpr std::uint32_t kInitStream = 0;

/// Sequential reader over one (seed, trajectory, stream) counter block.
/// Draw d reads Philox block d / 2; each block yields two uniforms on (0, 1]
/// and, through Box-Muller, two standard normals.
class NoiseStream {
public:
    NoiseStream(std::uint64_t seed, std::uint64_t trajectory, std::uint32_t stream) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          traj_lo_(static_cast<std::uint32_t>(trajectory)),
          traj_hi_(static_cast<std::uint32_t>(trajectory >> 32)),
          stream_(stream) {}

    /// Uniform on (0, 1].
    double uniform() {
        if (uniform_slot_ == 2) refill_uniform();
        return uniforms_[uniform_slot_++];
    }

    double normal() {
        if (normal_slot_ == 2) refill_normal();
        return normals_[normal_slot_++];
    }

    /// Skip so that the next normal() returns draw number `index` of this stream.
    void seek_normal(std::uint32_t index) noexcept {
        block_ = index / 2;
        refill_normal();
        normal_slot_ = index % 2;
    }

private:
    std::array<double, 2> next_block() noexcept {
        const auto out = Philox4x32::generate({block_++, stream_, traj_lo_, traj_hi_}, key_);
        const std::uint64_t a = (std::uint64_t{out[0]} << 32) | out[1];
        const std::uint64_t b = (std::uint64_t{out[2]} << 32) | out[3];
        constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
        return {(static_cast<double>(a >> 11) + 1.0) * scale, (static_cast<double>(b >> 11) + 1.0) * scale};
    }

    void refill_uniform() noexcept {
        uniforms_ = next_block();
        uniform_slot_ = 0;
    }

    void refill_normal() noexcept {
        const auto [u1, u2] = next_block();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        normals_ = {r * std::cos(a), r * std::sin(a)};
        normal_slot_ = 0;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint32_t traj_lo_;
    std::uint32_t traj_hi_;
    std::uint32_t stream_;
    std::uint32_t block_ = 0;
    std::array<double, 2> uniforms_{};
    std::array<double, 2> normals_{};
    int uniform_slot_ = 2;
    int normal_slot_ = 2;
};

}  // namespace wgsf
