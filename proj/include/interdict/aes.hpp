// Copyright interdict contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// AES-256 with a pluggable substitution box. The device under study swaps
// S-boxes at runtime (honest FPGA tables vs. a tampered identity table), so
// every routine below takes the box as a parameter instead of baking it in.
// The key schedule uses the same box for SubWord, matching hardware that
// derives round keys through the substituted datapath.

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "interdict/block.hpp"

namespace interdict {

struct SBoxPair {
  std::array<std::uint8_t, 256> forward{};
  std::array<std::uint8_t, 256> inverse{};

  friend bool operator==(const SBoxPair &, const SBoxPair &) = default;
};

namespace detail {

inline constexpr std::array<std::uint8_t, 256> kAesSbox = {
    0x63, 0x7c, 0x77, 0x7b, 0xf2, 0x6b, 0x6f, 0xc5, 0x30, 0x01, 0x67, 0x2b,
    0xfe, 0xd7, 0xab, 0x76, 0xca, 0x82, 0xc9, 0x7d, 0xfa, 0x59, 0x47, 0xf0,
    0xad, 0xd4, 0xa2, 0xaf, 0x9c, 0xa4, 0x72, 0xc0, 0xb7, 0xfd, 0x93, 0x26,
    0x36, 0x3f, 0xf7, 0xcc, 0x34, 0xa5, 0xe5, 0xf1, 0x71, 0xd8, 0x31, 0x15,
    0x04, 0xc7, 0x23, 0xc3, 0x18, 0x96, 0x05, 0x9a, 0x07, 0x12, 0x80, 0xe2,
    0xeb, 0x27, 0xb2, 0x75, 0x09, 0x83, 0x2c, 0x1a, 0x1b, 0x6e, 0x5a, 0xa0,
    0x52, 0x3b, 0xd6, 0xb3, 0x29, 0xe3, 0x2f, 0x84, 0x53, 0xd1, 0x00, 0xed,
    0x20, 0xfc, 0xb1, 0x5b, 0x6a, 0xcb, 0xbe, 0x39, 0x4a, 0x4c, 0x58, 0xcf,
    0xd0, 0xef, 0xaa, 0xfb, 0x43, 0x4d, 0x33, 0x85, 0x45, 0xf9, 0x02, 0x7f,
    0x50, 0x3c, 0x9f, 0xa8, 0x51, 0xa3, 0x40, 0x8f, 0x92, 0x9d, 0x38, 0xf5,
    0xbc, 0xb6, 0xda, 0x21, 0x10, 0xff, 0xf3, 0xd2, 0xcd, 0x0c, 0x13, 0xec,
    0x5f, 0x97, 0x44, 0x17, 0xc4, 0xa7, 0x7e, 0x3d, 0x64, 0x5d, 0x19, 0x73,
    0x60, 0x81, 0x4f, 0xdc, 0x22, 0x2a, 0x90, 0x88, 0x46, 0xee, 0xb8, 0x14,
    0xde, 0x5e, 0x0b, 0xdb, 0xe0, 0x32, 0x3a, 0x0a, 0x49, 0x06, 0x24, 0x5c,
    0xc2, 0xd3, 0xac, 0x62, 0x91, 0x95, 0xe4, 0x79, 0xe7, 0xc8, 0x37, 0x6d,
    0x8d, 0xd5, 0x4e, 0xa9, 0x6c, 0x56, 0xf4, 0xea, 0x65, 0x7a, 0xae, 0x08,
    0xba, 0x78, 0x25, 0x2e, 0x1c, 0xa6, 0xb4, 0xc6, 0xe8, 0xdd, 0x74, 0x1f,
    0x4b, 0xbd, 0x8b, 0x8a, 0x70, 0x3e, 0xb5, 0x66, 0x48, 0x03, 0xf6, 0x0e,
    0x61, 0x35, 0x57, 0xb9, 0x86, 0xc1, 0x1d, 0x9e, 0xe1, 0xf8, 0x98, 0x11,
    0x69, 0xd9, 0x8e, 0x94, 0x9b, 0x1e, 0x87, 0xe9, 0xce, 0x55, 0x28, 0xdf,
    0x8c, 0xa1, 0x89, 0x0d, 0xbf, 0xe6, 0x42, 0x68, 0x41, 0x99, 0x2d, 0x0f,
    0xb0, 0x54, 0xbb, 0x16,
};

inline constexpr std::array<std::uint8_t, 256> invert_table(const std::array<std::uint8_t, 256> &t) {
  std::array<std::uint8_t, 256> inv{};
  for (std::size_t i = 0; i < 256; ++i) {
    inv[t[i]] = static_cast<std::uint8_t>(i);
  }
  return inv;
}

inline constexpr std::array<std::uint8_t, 256> kAesInvSbox = invert_table(kAesSbox);

}  // namespace detail

inline const SBoxPair &canonical_sbox() {
  static const SBoxPair pair = [] {
    SBoxPair p;
    p.forward = detail::kAesSbox;
    p.inverse = detail::kAesInvSbox;
    return p;
  }();
  return pair;
}

inline const SBoxPair &identity_sbox() {
  static const SBoxPair pair = [] {
    SBoxPair p;
    for (std::size_t i = 0; i < 256; ++i) {
      p.forward[i] = static_cast<std::uint8_t>(i);
      p.inverse[i] = static_cast<std::uint8_t>(i);
    }
    return p;
  }();
  return pair;
}

// GF(2^8) multiply, reduction polynomial x^8 + x^4 + x^3 + x + 1 (0x11B).
inline constexpr std::uint8_t gf256_mul(std::uint8_t a, std::uint8_t b) {
  std::uint8_t r = 0;
  for (int i = 0; i < 8; ++i) {
    if (b & 1) {
      r ^= a;
    }
    bool hi = (a & 0x80) != 0;
    a = static_cast<std::uint8_t>(a << 1);
    if (hi) {
      a ^= 0x1B;
    }
    b >>= 1;
  }
  return r;
}

// 15 round keys for AES-256, each stored as a Block128. The state and the
// round keys use column-major order: byte i sits at row i%4, column i/4.
struct KeySchedule {
  std::array<Block128, 15> round_keys{};
};

namespace detail {

inline constexpr std::array<std::uint8_t, 10> kRcon = {0x01, 0x02, 0x04, 0x08, 0x10,
                                                       0x20, 0x40, 0x80, 0x1B, 0x36};

inline void sub_bytes(Block128 &st, const SBoxPair &sbox) {
  for (auto &v : st.b) {
    v = sbox.forward[v];
  }
}

inline void inv_sub_bytes(Block128 &st, const SBoxPair &sbox) {
  for (auto &v : st.b) {
    v = sbox.inverse[v];
  }
}

// Row r of the state is bytes {r, r+4, r+8, r+12}; rotate it left by r.
inline void shift_rows(Block128 &st) {
  Block128 out;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      out.b[static_cast<std::size_t>(4 * c + r)] = st.b[static_cast<std::size_t>(4 * ((c + r) % 4) + r)];
    }
  }
  st = out;
}

inline void inv_shift_rows(Block128 &st) {
  Block128 out;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      out.b[static_cast<std::size_t>(4 * ((c + r) % 4) + r)] = st.b[static_cast<std::size_t>(4 * c + r)];
    }
  }
  st = out;
}

inline void mix_columns(Block128 &st) {
  for (int c = 0; c < 4; ++c) {
    std::uint8_t *col = &st.b[static_cast<std::size_t>(4 * c)];
    std::uint8_t a0 = col[0], a1 = col[1], a2 = col[2], a3 = col[3];
    col[0] = gf256_mul(a0, 2) ^ gf256_mul(a1, 3) ^ a2 ^ a3;
    col[1] = a0 ^ gf256_mul(a1, 2) ^ gf256_mul(a2, 3) ^ a3;
    col[2] = a0 ^ a1 ^ gf256_mul(a2, 2) ^ gf256_mul(a3, 3);
    col[3] = gf256_mul(a0, 3) ^ a1 ^ a2 ^ gf256_mul(a3, 2);
  }
}

inline void inv_mix_columns(Block128 &st) {
  for (int c = 0; c < 4; ++c) {
    std::uint8_t *col = &st.b[static_cast<std::size_t>(4 * c)];
    std::uint8_t a0 = col[0], a1 = col[1], a2 = col[2], a3 = col[3];
    col[0] = gf256_mul(a0, 14) ^ gf256_mul(a1, 11) ^ gf256_mul(a2, 13) ^ gf256_mul(a3, 9);
    col[1] = gf256_mul(a0, 9) ^ gf256_mul(a1, 14) ^ gf256_mul(a2, 11) ^ gf256_mul(a3, 13);
    col[2] = gf256_mul(a0, 13) ^ gf256_mul(a1, 9) ^ gf256_mul(a2, 14) ^ gf256_mul(a3, 11);
    col[3] = gf256_mul(a0, 11) ^ gf256_mul(a1, 13) ^ gf256_mul(a2, 9) ^ gf256_mul(a3, 14);
  }
}

}  // namespace detail

inline KeySchedule expand_key(std::span<const std::uint8_t> key, const SBoxPair &sbox) {
  if (key.size() != 32) {
    throw std::invalid_argument("expand_key: AES-256 key must be 32 bytes");
  }
  // 60 words w[0..59]; word i lands in round key i/4, column i%4.
  std::array<std::array<std::uint8_t, 4>, 60> w{};
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t k = 0; k < 4; ++k) {
      w[i][k] = key[4 * i + k];
    }
  }
  for (std::size_t i = 8; i < 60; ++i) {
    std::array<std::uint8_t, 4> t = w[i - 1];
    if (i % 8 == 0) {
      std::array<std::uint8_t, 4> rot = {t[1], t[2], t[3], t[0]};
      for (auto &v : rot) {
        v = sbox.forward[v];
      }
      rot[0] ^= detail::kRcon[i / 8 - 1];
      t = rot;
    } else if (i % 8 == 4) {
      for (auto &v : t) {
        v = sbox.forward[v];
      }
    }
    for (std::size_t k = 0; k < 4; ++k) {
      w[i][k] = w[i - 8][k] ^ t[k];
    }
  }
  KeySchedule ks;
  for (std::size_t r = 0; r < 15; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      for (std::size_t k = 0; k < 4; ++k) {
        ks.round_keys[r].b[4 * c + k] = w[4 * r + c][k];
      }
    }
  }
  return ks;
}

inline Block128 encrypt_block(const Block128 &plain, const KeySchedule &ks, const SBoxPair &sbox) {
  Block128 st = plain ^ ks.round_keys[0];
  for (int round = 1; round <= 13; ++round) {
    detail::sub_bytes(st, sbox);
    detail::shift_rows(st);
    detail::mix_columns(st);
    st ^= ks.round_keys[static_cast<std::size_t>(round)];
  }
  detail::sub_bytes(st, sbox);
  detail::shift_rows(st);
  st ^= ks.round_keys[14];
  return st;
}

inline Block128 decrypt_block(const Block128 &cipher, const KeySchedule &ks, const SBoxPair &sbox) {
  Block128 st = cipher ^ ks.round_keys[14];
  detail::inv_shift_rows(st);
  detail::inv_sub_bytes(st, sbox);
  for (int round = 13; round >= 1; --round) {
    st ^= ks.round_keys[static_cast<std::size_t>(round)];
    detail::inv_mix_columns(st);
    detail::inv_shift_rows(st);
    detail::inv_sub_bytes(st, sbox);
  }
  st ^= ks.round_keys[0];
  return st;
}

// CBC encryption of whole blocks; the device self-test feeds it exact
// multiples of 16 and so does everything else here, so no padding.
inline std::vector<std::uint8_t> cbc_encrypt(std::span<const std::uint8_t> data,
                                             std::span<const std::uint8_t> iv, const KeySchedule &ks,
                                             const SBoxPair &sbox) {
  if (data.size() % 16 != 0) {
    throw std::invalid_argument("cbc_encrypt: data must be a multiple of 16 bytes");
  }
  if (iv.size() != 16) {
    throw std::invalid_argument("cbc_encrypt: IV must be 16 bytes");
  }
  Block128 chain = block_from_bytes(iv);
  std::vector<std::uint8_t> out(data.size());
  for (std::size_t off = 0; off < data.size(); off += 16) {
    Block128 blk = block_from_bytes(data.subspan(off, 16));
    chain = encrypt_block(blk ^ chain, ks, sbox);
    for (std::size_t i = 0; i < 16; ++i) {
      out[off + i] = chain.b[i];
    }
  }
  return out;
}

}  // namespace interdict
