// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>

#include "common.hpp"

// Little-endian primitives for checkpoint files.
namespace dcbleo::binio {

inline void put_u64(std::ostream& os, std::uint64_t v) {
    std::array<char, 8> b{};
    for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xffU);
    os.write(b.data(), 8);
}

inline std::uint64_t get_u64(std::istream& is) {
    std::array<unsigned char, 8> b{};
    is.read(reinterpret_cast<char*>(b.data()), 8);
    if (!is) throw IoError("unexpected end of checkpoint data");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
    return v;
}

inline void put_i64(std::ostream& os, std::int64_t v) { put_u64(os, static_cast<std::uint64_t>(v)); }
inline std::int64_t get_i64(std::istream& is) { return static_cast<std::int64_t>(get_u64(is)); }

inline void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }
inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

inline void put_f64s(std::ostream& os, std::span<const double> v) {
    for (double d : v) put_f64(os, d);
}
inline void get_f64s(std::istream& is, std::span<double> v) {
    for (double& d : v) d = get_f64(is);
}

inline void put_magic(std::ostream& os, const char (&magic)[9]) { os.write(magic, 8); }

inline void expect_magic(std::istream& is, const char (&magic)[9]) {
    std::array<char, 8> b{};
    is.read(b.data(), 8);
    if (!is || std::string(b.data(), 8) != std::string(magic, 8))
        throw IoError(std::string("bad checkpoint header, expected ") + std::string(magic, 8));
}

}  // namespace dcbleo::binio
