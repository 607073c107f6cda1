// Copyright interdict contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace interdict {

// 128-bit block in byte order b[0]..b[15].
struct Block128 {
  std::array<std::uint8_t, 16> b{};

  friend bool operator==(const Block128 &, const Block128 &) = default;

  Block128 &operator^=(const Block128 &o) {
    for (std::size_t i = 0; i < 16; ++i) {
      b[i] ^= o.b[i];
    }
    return *this;
  }

  friend Block128 operator^(Block128 a, const Block128 &o) {
    a ^= o;
    return a;
  }
};

inline Block128 block_from_bytes(std::span<const std::uint8_t> s) {
  if (s.size() != 16) {
    throw std::invalid_argument("block_from_bytes: need exactly 16 bytes");
  }
  Block128 out;
  for (std::size_t i = 0; i < 16; ++i) {
    out.b[i] = s[i];
  }
  return out;
}

inline int hex_nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

inline std::vector<std::uint8_t> from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) {
    throw std::invalid_argument("from_hex: odd length");
  }
  std::vector<std::uint8_t> out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = hex_nibble(hex[2 * i]);
    int lo = hex_nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) {
      throw std::invalid_argument("from_hex: bad digit");
    }
    out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return out;
}

inline std::string to_hex(std::span<const std::uint8_t> data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (std::uint8_t v : data) {
    out.push_back(kDigits[v >> 4]);
    out.push_back(kDigits[v & 0xF]);
  }
  return out;
}

inline Block128 block_from_hex(std::string_view hex) {
  auto bytes = from_hex(hex);
  return block_from_bytes(bytes);
}

inline std::string to_hex(const Block128 &blk) { return to_hex(std::span<const std::uint8_t>(blk.b)); }

inline std::uint32_t read_le32(std::span<const std::uint8_t> s) {
  return static_cast<std::uint32_t>(s[0]) | static_cast<std::uint32_t>(s[1]) << 8 |
         static_cast<std::uint32_t>(s[2]) << 16 | static_cast<std::uint32_t>(s[3]) << 24;
}

inline std::uint64_t read_le64(std::span<const std::uint8_t> s) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) {
    v = v << 8 | s[static_cast<std::size_t>(i)];
  }
  return v;
}

inline void write_le32(std::span<std::uint8_t> s, std::uint32_t v) {
  for (std::size_t i = 0; i < 4; ++i) {
    s[i] = static_cast<std::uint8_t>(v >> (8 * i));
  }
}

inline void write_le64(std::span<std::uint8_t> s, std::uint64_t v) {
  for (std::size_t i = 0; i < 8; ++i) {
    s[i] = static_cast<std::uint8_t>(v >> (8 * i));
  }
}

// Deterministic byte stream from a seeded engine. Bytes are the engine's
// 64-bit outputs serialized little-endian, so a given seed always yields the
// same stream regardless of how calls are batched.
inline void fill_random(std::mt19937_64 &rng, std::span<std::uint8_t> out) {
  std::size_t i = 0;
  while (i < out.size()) {
    std::uint64_t v = rng();
    for (int k = 0; k < 8 && i < out.size(); ++k, ++i) {
      out[i] = static_cast<std::uint8_t>(v >> (8 * k));
    }
  }
}

inline std::vector<std::uint8_t> random_bytes(std::mt19937_64 &rng, std::size_t n) {
  std::vector<std::uint8_t> out(n);
  fill_random(rng, out);
  return out;
}

// Uniform-enough draw for placement jitter; bound must be nonzero.
inline std::uint64_t random_below(std::mt19937_64 &rng, std::uint64_t bound) {
  return rng() % bound;
}

}  // namespace interdict
