// Copyright interdict contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Synthetic bitstream container for the Spartan-3E style configuration blob
// stored in flash. Layout (all integers little-endian):
//
//   0x000  magic        "BSC1"
//   0x004  part_id      16 bytes, zero padded ("XC3S500E")
//   0x014  signature    16 bytes ("SPYRUS_HYDRA2005")
//   0x024  instance_count  u32 (always 40)
//   0x028  directory    40 entries x 12 bytes:
//            kind u8, pad[3], offset u32, length u32
//   0x208  payload      table images at the directory offsets, seeded random
//                       filler everywhere else
//
// Offsets are relative to the container start. The whole container always
// fills the 0x45600-byte bitstream region of the flash image.

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "interdict/block.hpp"
#include "interdict/tables.hpp"

namespace interdict {

inline constexpr std::string_view kContainerMagic = "BSC1";
inline constexpr std::string_view kFpgaPartId = "XC3S500E";
inline constexpr std::string_view kFpgaSignature = "SPYRUS_HYDRA2005";
inline constexpr std::size_t kBitstreamRegionSize = 0x45600;
inline constexpr std::size_t kContainerInstanceCount = 40;
inline constexpr std::size_t kContainerHeaderSize = 0x28 + kContainerInstanceCount * 12;

struct BuiltContainer {
  std::vector<std::uint8_t> bytes;
  std::vector<TableInstance> instances;  // ground truth placement, sorted by offset
};

// Builds a fresh honest container with randomized, non-overlapping,
// 4-byte-aligned instance placement drawn from the given engine.
inline BuiltContainer build_container(std::mt19937_64 &rng) {
  BuiltContainer out;
  out.bytes.assign(kBitstreamRegionSize, 0);
  fill_random(rng, std::span<std::uint8_t>(out.bytes).subspan(kContainerHeaderSize));

  std::vector<TableKind> order;
  order.reserve(kContainerInstanceCount);
  for (int k = 0; k < 4; ++k) {
    for (std::size_t i = 0; i < kTableInstanceCounts[k]; ++i) {
      order.push_back(static_cast<TableKind>(k));
    }
  }
  // Fisher-Yates with explicit modulo draws keeps the layout reproducible
  // across standard libraries (std::shuffle is implementation-defined).
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    std::size_t j = static_cast<std::size_t>(random_below(rng, i + 1));
    std::swap(order[i], order[j]);
  }

  std::size_t slack = kBitstreamRegionSize - kContainerHeaderSize - total_table_bytes();
  std::size_t cursor = kContainerHeaderSize;
  std::size_t remaining = order.size();
  for (TableKind kind : order) {
    std::size_t budget = 2 * (slack / remaining) + 1;
    std::size_t gap = std::min(static_cast<std::size_t>(random_below(rng, budget)), slack) & ~std::size_t{3};
    slack -= gap;
    cursor += gap;
    std::vector<std::uint8_t> image = canonical_table_image(kind);
    std::copy(image.begin(), image.end(), out.bytes.begin() + static_cast<std::ptrdiff_t>(cursor));
    out.instances.push_back({kind, cursor, image.size()});
    cursor += image.size();
    --remaining;
  }

  std::span<std::uint8_t> hdr(out.bytes);
  std::memcpy(hdr.data(), kContainerMagic.data(), 4);
  std::memcpy(hdr.data() + 0x04, kFpgaPartId.data(), kFpgaPartId.size());
  std::memcpy(hdr.data() + 0x14, kFpgaSignature.data(), kFpgaSignature.size());
  std::memset(hdr.data() + 0x04 + kFpgaPartId.size(), 0, 16 - kFpgaPartId.size());
  write_le32(hdr.subspan(0x24, 4), static_cast<std::uint32_t>(kContainerInstanceCount));
  for (std::size_t i = 0; i < out.instances.size(); ++i) {
    std::span<std::uint8_t> entry = hdr.subspan(0x28 + 12 * i, 12);
    entry[0] = static_cast<std::uint8_t>(out.instances[i].kind);
    entry[1] = entry[2] = entry[3] = 0;
    write_le32(entry.subspan(4, 4), static_cast<std::uint32_t>(out.instances[i].offset));
    write_le32(entry.subspan(8, 4), static_cast<std::uint32_t>(out.instances[i].length));
  }
  return out;
}

struct ContainerView {
  std::string part_id;
  std::string signature;
  std::vector<TableInstance> instances;
};

inline ContainerView parse_container(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kContainerHeaderSize) {
    throw std::invalid_argument("parse_container: truncated container");
  }
  if (std::memcmp(bytes.data(), kContainerMagic.data(), 4) != 0) {
    throw std::invalid_argument("parse_container: bad magic");
  }
  ContainerView view;
  auto fixed_string = [&](std::size_t off) {
    const char *p = reinterpret_cast<const char *>(bytes.data() + off);
    std::size_t len = 0;
    while (len < 16 && p[len] != '\0') {
      ++len;
    }
    return std::string(p, len);
  };
  view.part_id = fixed_string(0x04);
  view.signature = fixed_string(0x14);
  std::uint32_t count = read_le32(bytes.subspan(0x24, 4));
  if (count != kContainerInstanceCount) {
    throw std::invalid_argument("parse_container: unexpected instance count");
  }
  for (std::size_t i = 0; i < count; ++i) {
    std::span<const std::uint8_t> entry = bytes.subspan(0x28 + 12 * i, 12);
    TableInstance inst;
    if (entry[0] > 3) {
      throw std::invalid_argument("parse_container: unknown table kind");
    }
    inst.kind = static_cast<TableKind>(entry[0]);
    inst.offset = read_le32(entry.subspan(4, 4));
    inst.length = read_le32(entry.subspan(8, 4));
    if (inst.length != table_image_size(inst.kind) || inst.offset < kContainerHeaderSize ||
        inst.offset + inst.length > bytes.size()) {
      throw std::invalid_argument("parse_container: directory entry out of bounds");
    }
    view.instances.push_back(inst);
  }
  return view;
}

// Reads the active S-box out of the directory (first S and Sinv images).
inline SBoxPair decode_fpga_sbox(std::span<const std::uint8_t> bytes) {
  ContainerView view = parse_container(bytes);
  const TableInstance *fwd = nullptr;
  const TableInstance *inv = nullptr;
  for (const auto &inst : view.instances) {
    if (inst.kind == TableKind::SFwd && fwd == nullptr) {
      fwd = &inst;
    }
    if (inst.kind == TableKind::SInv && inv == nullptr) {
      inv = &inst;
    }
  }
  if (fwd == nullptr || inv == nullptr) {
    throw std::invalid_argument("decode_fpga_sbox: directory lacks S-box images");
  }
  SBoxPair box;
  std::memcpy(box.forward.data(), bytes.data() + fwd->offset, 256);
  std::memcpy(box.inverse.data(), bytes.data() + inv->offset, 256);
  return box;
}

// Structural and cross-table consistency validation, the software half of
// the FPGA configuration handshake. A bitstream whose tables disagree with
// each other refuses to configure; a coherently tampered one sails through
// and has to be caught by the known-answer self-tests instead.
inline bool validate_container(std::span<const std::uint8_t> bytes, std::string *why = nullptr) {
  auto fail = [&](std::string msg) {
    if (why != nullptr) {
      *why = std::move(msg);
    }
    return false;
  };
  if (bytes.size() != kBitstreamRegionSize) {
    return fail("container size mismatch");
  }
  ContainerView view;
  try {
    view = parse_container(bytes);
  } catch (const std::exception &e) {
    return fail(e.what());
  }
  if (view.part_id != kFpgaPartId) {
    return fail("unknown part id: " + view.part_id);
  }
  if (view.signature != kFpgaSignature) {
    return fail("bad container signature");
  }
  TableCounts counts = count_instances(view.instances);
  if (counts != kExpectedCounts) {
    return fail("instance counts are not 16/16/4/4");
  }
  std::vector<TableInstance> sorted = view.instances;
  std::sort(sorted.begin(), sorted.end(),
            [](const TableInstance &a, const TableInstance &b) { return a.offset < b.offset; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i - 1].offset + sorted[i - 1].length > sorted[i].offset) {
      return fail("overlapping table instances");
    }
  }
  // Same-kind instances must be byte-identical.
  const TableInstance *first[4] = {nullptr, nullptr, nullptr, nullptr};
  for (const auto &inst : view.instances) {
    auto k = static_cast<std::size_t>(inst.kind);
    if (first[k] == nullptr) {
      first[k] = &inst;
    } else if (std::memcmp(bytes.data() + first[k]->offset, bytes.data() + inst.offset,
                           inst.length) != 0) {
      return fail("same-kind table instances differ");
    }
  }
  for (int k = 0; k < 4; ++k) {
    if (first[k] == nullptr) {
      return fail("missing table kind");
    }
  }
  const std::uint8_t *s = bytes.data() + first[2]->offset;
  const std::uint8_t *sinv = bytes.data() + first[3]->offset;
  const std::uint8_t *ttilde = bytes.data() + first[0]->offset;
  const std::uint8_t *mcinv = bytes.data() + first[1]->offset;
  for (std::size_t x = 0; x < 256; ++x) {
    if (sinv[s[x]] != x) {
      return fail("Sinv does not invert S");
    }
    if (ttilde[4 * x + 0] != s[x] || ttilde[4 * x + 1] != sinv[x] ||
        ttilde[4 * x + 2] != gf256_mul(s[x], 2) || ttilde[4 * x + 3] != gf256_mul(s[x], 3)) {
      return fail("T~ disagrees with S tables");
    }
    auto v = static_cast<std::uint8_t>(x);
    if (mcinv[4 * x + 0] != gf256_mul(v, 9) || mcinv[4 * x + 1] != gf256_mul(v, 11) ||
        mcinv[4 * x + 2] != gf256_mul(v, 13) || mcinv[4 * x + 3] != gf256_mul(v, 14)) {
      return fail("MCinv factors are wrong");
    }
  }
  return true;
}

}  // namespace interdict
