#pragma once

#include <array>
#include <cstdint>

#include "kgspde/spectral.hpp"

namespace kg {

/// Philox4x32-10 block: a keyed bijection on 128-bit counters.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key);

/// Counter-based noise source. Every draw is a pure function of
/// (seed, trajectory, step, mode, component), so results do not depend on
/// evaluation order or thread schedule.
class NoiseStream {
public:
    NoiseStream() = default;
    NoiseStream(std::uint64_t seed, std::uint32_t trajectory) : seed_(seed), trajectory_(trajectory) {}

    std::uint64_t seed() const { return seed_; }
    std::uint32_t trajectory() const { return trajectory_; }

    /// Same seed, different trajectory id.
    NoiseStream with_trajectory(std::uint32_t id) const { return {seed_, id}; }

    /// Two independent uniforms in (0, 1) with 53-bit resolution.
    std::array<double, 2> uniforms(std::uint64_t step, std::uint32_t mode, std::uint32_t component) const;

    /// Standard circular complex normal N_c(0, 1): E|z|^2 = 1, E z^2 = 0.
    cplx complex_normal(std::uint64_t step, std::uint32_t mode, std::uint32_t component) const;

    /// Standard real normal.
    double normal(std::uint64_t step, std::uint32_t mode, std::uint32_t component) const;

private:
    std::uint64_t seed_ = 0;
    std::uint32_t trajectory_ = 0;
};

}  // namespace kg
