// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dcbleo {

// Error taxonomy. The C API maps each of these onto a status code.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct StateError : std::logic_error {
    using std::logic_error::logic_error;
};
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct IllegalActionError : std::logic_error {
    using std::logic_error::logic_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    [[nodiscard]] double norm() const { return std::sqrt(x * x + y * y + z * z); }
    [[nodiscard]] double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    friend Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator*(double s, const Vec3& v) { return {s * v.x, s * v.y, s * v.z}; }
};

/// A terminal location on the local ground plane (z = 0), in metres.
struct GroundPoint {
    double x = 0.0;
    double y = 0.0;

    [[nodiscard]] Vec3 as_vec3() const { return {x, y, 0.0}; }
    friend bool operator==(const GroundPoint&, const GroundPoint&) = default;
};

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps an angle into [0, 2pi).
inline double wrap_angle(double a) {
    double r = std::fmod(a, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    if (r >= kTwoPi) r = 0.0;
    return r;
}

inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for an independent stream identified by (master seed, component tag, index).
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index = 0) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(splitmix64(master ^ h) + index);
}

/// Uniform double in [0, 1) with 53 bits, independent of the standard library's distribution code.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

using Objectives = std::array<double, 3>;
using Weight3 = std::array<double, 3>;

inline double dot3(const Weight3& w, const Objectives& f) { return w[0] * f[0] + w[1] * f[1] + w[2] * f[2]; }

}  // namespace dcbleo
