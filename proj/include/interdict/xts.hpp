// Copyright interdict contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// XTS-AES-256 over 512-byte sectors (IEEE 1619 style):
//
//   T_j = AES_k2(i) * alpha^j              in GF(2^128)
//   c_j = T_j ^ AES_k1(T_j ^ p_j)
//
// with the sector number i encoded little-endian into the tweak block and
// alpha the polynomial x, reduced by x^128 + x^7 + x^2 + x + 1.

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>

#include "interdict/aes.hpp"
#include "interdict/block.hpp"

namespace interdict {

inline constexpr std::size_t kSectorSize = 512;
inline constexpr std::size_t kBlocksPerSector = kSectorSize / 16;

using SectorNumber = std::uint64_t;
using Sector = std::array<std::uint8_t, kSectorSize>;

struct XtsKeys {
  std::array<std::uint8_t, 32> k1{};  // data encryption key
  std::array<std::uint8_t, 32> k2{};  // tweak encryption key

  friend bool operator==(const XtsKeys &, const XtsKeys &) = default;
};

inline Sector to_sector(std::span<const std::uint8_t> s) {
  if (s.size() != kSectorSize) {
    throw std::invalid_argument("to_sector: need exactly 512 bytes");
  }
  Sector out;
  for (std::size_t i = 0; i < kSectorSize; ++i) {
    out[i] = s[i];
  }
  return out;
}

// Multiply by x in GF(2^128) with the byte array read as a little-endian
// 128-bit polynomial: bit k of byte j is coefficient 8*j + k.
inline Block128 gf128_mul_alpha(Block128 v) {
  std::uint8_t carry = 0;
  for (std::size_t i = 0; i < 16; ++i) {
    std::uint8_t next = static_cast<std::uint8_t>(v.b[i] >> 7);
    v.b[i] = static_cast<std::uint8_t>(v.b[i] << 1 | carry);
    carry = next;
  }
  if (carry) {
    v.b[0] ^= 0x87;
  }
  return v;
}

inline Block128 gf128_mul_alpha_pow(Block128 v, unsigned j) {
  for (unsigned k = 0; k < j; ++k) {
    v = gf128_mul_alpha(v);
  }
  return v;
}

inline Block128 encode_tweak(SectorNumber i) {
  Block128 out;
  write_le64(std::span<std::uint8_t>(out.b).first(8), i);
  return out;
}

inline Block128 xts_encrypt_block(const Block128 &plain, SectorNumber i, unsigned j,
                                  const XtsKeys &keys, const SBoxPair &sbox) {
  KeySchedule ks1 = expand_key(keys.k1, sbox);
  KeySchedule ks2 = expand_key(keys.k2, sbox);
  Block128 t = gf128_mul_alpha_pow(encrypt_block(encode_tweak(i), ks2, sbox), j);
  return t ^ encrypt_block(t ^ plain, ks1, sbox);
}

inline Block128 xts_decrypt_block(const Block128 &cipher, SectorNumber i, unsigned j,
                                  const XtsKeys &keys, const SBoxPair &sbox) {
  KeySchedule ks1 = expand_key(keys.k1, sbox);
  KeySchedule ks2 = expand_key(keys.k2, sbox);
  Block128 t = gf128_mul_alpha_pow(encrypt_block(encode_tweak(i), ks2, sbox), j);
  return t ^ decrypt_block(t ^ cipher, ks1, sbox);
}

inline Sector xts_encrypt_sector(const Sector &plain, SectorNumber i, const XtsKeys &keys,
                                 const SBoxPair &sbox) {
  KeySchedule ks1 = expand_key(keys.k1, sbox);
  KeySchedule ks2 = expand_key(keys.k2, sbox);
  Block128 t = encrypt_block(encode_tweak(i), ks2, sbox);
  Sector out;
  for (std::size_t j = 0; j < kBlocksPerSector; ++j) {
    Block128 p = block_from_bytes(std::span<const std::uint8_t>(plain).subspan(16 * j, 16));
    Block128 c = t ^ encrypt_block(t ^ p, ks1, sbox);
    for (std::size_t k = 0; k < 16; ++k) {
      out[16 * j + k] = c.b[k];
    }
    t = gf128_mul_alpha(t);
  }
  return out;
}

inline Sector xts_decrypt_sector(const Sector &cipher, SectorNumber i, const XtsKeys &keys,
                                 const SBoxPair &sbox) {
  KeySchedule ks1 = expand_key(keys.k1, sbox);
  KeySchedule ks2 = expand_key(keys.k2, sbox);
  Block128 t = encrypt_block(encode_tweak(i), ks2, sbox);
  Sector out;
  for (std::size_t j = 0; j < kBlocksPerSector; ++j) {
    Block128 c = block_from_bytes(std::span<const std::uint8_t>(cipher).subspan(16 * j, 16));
    Block128 p = t ^ decrypt_block(t ^ c, ks1, sbox);
    for (std::size_t k = 0; k < 16; ++k) {
      out[16 * j + k] = p.b[k];
    }
    t = gf128_mul_alpha(t);
  }
  return out;
}

}  // namespace interdict
