// Copyright interdict contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Keyless recovery against the weakened XTS device. With the identity S-box,
// both XTS keys collapse into constants of the linear model:
//
//   c_j = TW(i,j) ^ MS(p_j) ^ CK(j)
//
//   TW(i,j) = (MS(enc(i)) * a^j) ^ MS(MS(enc(i)) * a^j)   key-free
//   CK(j)   = (K2~ * a^j) ^ MS(K2~ * a^j) ^ K1~           sector-free
//
// TW depends only on public values (sector number, block index). CK depends
// only on the unknown keys, not on the sector, so the 32 pairs recorded from
// one sector give CK(0..31) once and for all, and every other sector of the
// medium decrypts as p_j = MS^-1(c_j ^ TW(i,j) ^ CK(j)).

#include <array>
#include <cstdint>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "interdict/block.hpp"
#include "interdict/flash_image.hpp"
#include "interdict/linear_model.hpp"
#include "interdict/xts.hpp"

namespace interdict {

inline Block128 compute_tw(SectorNumber i, unsigned j) {
  Block128 t = gf128_mul_alpha_pow(ms_forward(encode_tweak(i)), j);
  return t ^ ms_forward(t);
}

// The same constant computed from the key side, for cross-checking a
// recovered table against known keys.
inline Block128 ck_from_key_constants(const KTilde &k1_tilde, const KTilde &k2_tilde, unsigned j) {
  Block128 t = gf128_mul_alpha_pow(k2_tilde.value, j);
  return t ^ ms_forward(t) ^ k1_tilde.value;
}

struct RecoveredKeyMaterial {
  std::array<Block128, kBlocksPerSector> ck{};
  SectorNumber source_sector = 0;  // logical sector the pairs came from
  std::uint64_t initial_tweak = 0;

  friend bool operator==(const RecoveredKeyMaterial &, const RecoveredKeyMaterial &) = default;
};

// Derives CK(0..31) from the 32 known pairs of one sector whose absolute
// tweak value is i0: CK(j) = c_j ^ TW(i0, j) ^ MS(p_j).
inline RecoveredKeyMaterial derive_ck_table(
    std::span<const std::pair<Block128, Block128>> pairs, SectorNumber i0) {
  if (pairs.size() != kBlocksPerSector) {
    throw std::invalid_argument("derive_ck_table: need exactly 32 pairs");
  }
  RecoveredKeyMaterial mat;
  mat.source_sector = i0;
  mat.initial_tweak = 0;
  for (unsigned j = 0; j < kBlocksPerSector; ++j) {
    mat.ck[j] = pairs[j].second ^ compute_tw(i0, j) ^ ms_forward(pairs[j].first);
  }
  return mat;
}

inline RecoveredKeyMaterial derive_from_pair_log(const PairLog &log) {
  RecoveredKeyMaterial mat =
      derive_ck_table(log.pairs, log.initial_tweak + log.sector_number);
  mat.source_sector = log.sector_number;
  mat.initial_tweak = log.initial_tweak;
  return mat;
}

// Decrypts one sector without any key; i is the absolute tweak value.
inline Sector recover_sector(const Sector &cipher, SectorNumber i,
                             const RecoveredKeyMaterial &mat) {
  Sector out;
  for (unsigned j = 0; j < kBlocksPerSector; ++j) {
    Block128 c = block_from_bytes(std::span<const std::uint8_t>(cipher).subspan(16 * j, 16));
    Block128 p = ms_inverse(c ^ compute_tw(i, j) ^ mat.ck[j]);
    for (std::size_t k = 0; k < 16; ++k) {
      out[16 * j + k] = p.b[k];
    }
  }
  return out;
}

struct RecoveryReport {
  std::size_t sectors_recovered = 0;
  SectorNumber source_sector = 0;
  std::uint64_t initial_tweak = 0;

  std::string to_text() const {
    char buf[96];
    std::string out = "sectors_recovered=" + std::to_string(sectors_recovered) + "\n";
    std::snprintf(buf, sizeof buf, "source_sector=0x%llX\n",
                  static_cast<unsigned long long>(source_sector));
    out += buf;
    std::snprintf(buf, sizeof buf, "initial_tweak=0x%llX\n",
                  static_cast<unsigned long long>(initial_tweak));
    out += buf;
    return out;
  }
};

// Recovers every sector of a captured medium. The returned buffer mirrors
// the dump layout (sector n at offset 512*n).
inline std::pair<std::vector<std::uint8_t>, RecoveryReport> recover_all(
    const SdCardStore &dump, const RecoveredKeyMaterial &mat) {
  RecoveryReport rep;
  rep.source_sector = mat.source_sector;
  rep.initial_tweak = mat.initial_tweak;
  SdCardStore plain;
  for (const auto &[n, cipher] : dump) {
    plain[n] = recover_sector(cipher, mat.initial_tweak + n, mat);
    ++rep.sectors_recovered;
  }
  return {serialize_sd_dump(plain), rep};
}

}  // namespace interdict
