// Copyright interdict contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// The FPGA bitstream carries the AES substitution logic as block-RAM
// initialization images. Four table shapes appear:
//
//   T~     1024 B  entry x: S(x), Sinv(x), 2*S(x), 3*S(x)   (16 instances)
//   MCinv  1024 B  entry x: 9*x, 11*x, 13*x, 14*x           (16 instances)
//   S      256 B   forward S-box                            (4 instances)
//   Sinv   256 B   inverse S-box                            (4 instances)
//
// The tampered variant replaces every S/Sinv lookup with the identity while
// keeping the MixColumns factors intact, which is exactly the substitution
// this library's linear model assumes.

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "interdict/aes.hpp"

namespace interdict {

enum class TableKind : std::uint8_t {
  TTilde = 0,
  McInv = 1,
  SFwd = 2,
  SInv = 3,
};

inline constexpr std::size_t table_image_size(TableKind kind) {
  switch (kind) {
    case TableKind::TTilde:
    case TableKind::McInv:
      return 1024;
    case TableKind::SFwd:
    case TableKind::SInv:
      return 256;
  }
  return 0;
}

inline constexpr std::size_t kTableInstanceCounts[4] = {16, 16, 4, 4};

inline constexpr std::size_t total_table_bytes() {
  std::size_t sum = 0;
  for (int k = 0; k < 4; ++k) {
    sum += kTableInstanceCounts[k] * table_image_size(static_cast<TableKind>(k));
  }
  return sum;
}

enum class TableImageSet : std::uint8_t {
  Canonical,
  Malicious,
};

inline std::vector<std::uint8_t> table_image(TableKind kind, TableImageSet set) {
  const SBoxPair &box = set == TableImageSet::Canonical ? canonical_sbox() : identity_sbox();
  std::vector<std::uint8_t> out(table_image_size(kind));
  switch (kind) {
    case TableKind::TTilde:
      for (std::size_t x = 0; x < 256; ++x) {
        std::uint8_t s = box.forward[x];
        out[4 * x + 0] = s;
        out[4 * x + 1] = box.inverse[x];
        out[4 * x + 2] = gf256_mul(s, 2);
        out[4 * x + 3] = gf256_mul(s, 3);
      }
      break;
    case TableKind::McInv:
      // Decoder-side MixColumns factors; independent of the S-box, so the
      // tampered bitstream leaves these images untouched.
      for (std::size_t x = 0; x < 256; ++x) {
        std::uint8_t v = static_cast<std::uint8_t>(x);
        out[4 * x + 0] = gf256_mul(v, 9);
        out[4 * x + 1] = gf256_mul(v, 11);
        out[4 * x + 2] = gf256_mul(v, 13);
        out[4 * x + 3] = gf256_mul(v, 14);
      }
      break;
    case TableKind::SFwd:
      for (std::size_t x = 0; x < 256; ++x) {
        out[x] = box.forward[x];
      }
      break;
    case TableKind::SInv:
      for (std::size_t x = 0; x < 256; ++x) {
        out[x] = box.inverse[x];
      }
      break;
  }
  return out;
}

inline std::vector<std::uint8_t> canonical_table_image(TableKind kind) {
  return table_image(kind, TableImageSet::Canonical);
}

inline std::vector<std::uint8_t> malicious_table_image(TableKind kind) {
  return table_image(kind, TableImageSet::Malicious);
}

struct TableInstance {
  TableKind kind{};
  std::size_t offset = 0;
  std::size_t length = 0;

  friend bool operator==(const TableInstance &, const TableInstance &) = default;
};

struct TableCounts {
  std::size_t t_tilde = 0;
  std::size_t mc_inv = 0;
  std::size_t s_fwd = 0;
  std::size_t s_inv = 0;

  friend bool operator==(const TableCounts &, const TableCounts &) = default;

  std::size_t total() const { return t_tilde + mc_inv + s_fwd + s_inv; }

  // The MC^-1 image is the same in both table sets (the implant leaves it
  // alone), so only the substitution-bearing kinds tell the two apart.
  std::size_t substitution_total() const { return t_tilde + s_fwd + s_inv; }
};

inline TableCounts count_instances(std::span<const TableInstance> instances) {
  TableCounts c;
  for (const auto &inst : instances) {
    switch (inst.kind) {
      case TableKind::TTilde:
        ++c.t_tilde;
        break;
      case TableKind::McInv:
        ++c.mc_inv;
        break;
      case TableKind::SFwd:
        ++c.s_fwd;
        break;
      case TableKind::SInv:
        ++c.s_inv;
        break;
    }
  }
  return c;
}

inline constexpr TableCounts kExpectedCounts = {16, 16, 4, 4};

// Byte-exact sweep of the bitstream for the given table set. Longer images
// are matched first and accepted matches claim their span, so a 256-byte
// S-box embedded inside an already-claimed 1024-byte image is not double
// reported. Results are sorted by offset.
inline std::vector<TableInstance> scan_tables(std::span<const std::uint8_t> bitstream,
                                              TableImageSet set = TableImageSet::Canonical) {
  std::vector<TableInstance> found;
  auto overlaps = [&](std::size_t off, std::size_t len) {
    for (const auto &inst : found) {
      if (off < inst.offset + inst.length && inst.offset < off + len) {
        return true;
      }
    }
    return false;
  };
  constexpr TableKind kOrder[4] = {TableKind::TTilde, TableKind::McInv, TableKind::SFwd,
                                   TableKind::SInv};
  for (TableKind kind : kOrder) {
    std::vector<std::uint8_t> image = table_image(kind, set);
    if (bitstream.size() < image.size()) {
      continue;
    }
    for (std::size_t off = 0; off + image.size() <= bitstream.size(); ++off) {
      if (bitstream[off] != image[0] || overlaps(off, image.size())) {
        continue;
      }
      if (std::equal(image.begin(), image.end(), bitstream.begin() + static_cast<std::ptrdiff_t>(off))) {
        found.push_back({kind, off, image.size()});
        off += image.size() - 1;
      }
    }
  }
  std::sort(found.begin(), found.end(),
            [](const TableInstance &a, const TableInstance &b) { return a.offset < b.offset; });
  return found;
}

// Returns a copy of the bitstream with every listed instance replaced by its
// tampered image. Bytes outside the listed spans are untouched.
inline std::vector<std::uint8_t> patch_tables(std::span<const std::uint8_t> bitstream,
                                              std::span<const TableInstance> instances) {
  std::vector<std::uint8_t> out(bitstream.begin(), bitstream.end());
  for (const auto &inst : instances) {
    if (inst.length != table_image_size(inst.kind)) {
      throw std::invalid_argument("patch_tables: instance length does not match its kind");
    }
    if (inst.offset + inst.length > out.size()) {
      throw std::out_of_range("patch_tables: instance exceeds bitstream bounds");
    }
    std::vector<std::uint8_t> image = malicious_table_image(inst.kind);
    std::copy(image.begin(), image.end(), out.begin() + static_cast<std::ptrdiff_t>(inst.offset));
  }
  return out;
}

}  // namespace interdict
