#include "kgspde/rng.hpp"

#include <cmath>
#include <numbers>

namespace kg {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
    // 53 random bits, shifted by half an ulp so that 0 is never returned.
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 21) ^ (lo >> 11);
    return (static_cast<double>(bits & ((1ULL << 53) - 1)) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

std::array<double, 2> NoiseStream::uniforms(std::uint64_t step, std::uint32_t mode, std::uint32_t component) const {
    const std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                                           mode, (component << 20) ^ trajectory_};
    // The trajectory id also enters the key so that ids >= 2^20 stay distinct.
    const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_),
                                           static_cast<std::uint32_t>(seed_ >> 32) ^ (trajectory_ * 0x85EBCA6Bu)};
    const auto r = philox4x32(ctr, key);
    return {to_open_unit(r[0], r[1]), to_open_unit(r[2], r[3])};
}

cplx NoiseStream::complex_normal(std::uint64_t step, std::uint32_t mode, std::uint32_t component) const {
    // Box-Muller: radius^2 = -log(u) is Exp(1), i.e. E|z|^2 = 1.
    const auto u = uniforms(step, mode, component);
    const double radius = std::sqrt(-std::log(u[0]));
    const double angle = 2.0 * std::numbers::pi * u[1];
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

double NoiseStream::normal(std::uint64_t step, std::uint32_t mode, std::uint32_t component) const {
    return std::sqrt(2.0) * complex_normal(step, mode, component).real();
}

}  // namespace kg
