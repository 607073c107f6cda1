// Copyright interdict contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "interdict/block.hpp"
#include "interdict/tables.hpp"

using namespace interdict;

TEST_CASE("image sizes and instance counts") {
  REQUIRE(table_image_size(TableKind::TTilde) == 1024);
  REQUIRE(table_image_size(TableKind::McInv) == 1024);
  REQUIRE(table_image_size(TableKind::SFwd) == 256);
  REQUIRE(table_image_size(TableKind::SInv) == 256);
  REQUIRE(total_table_bytes() == 16 * 1024 + 16 * 1024 + 4 * 256 + 4 * 256);
  REQUIRE(total_table_bytes() == 34816);
}

TEST_CASE("canonical T~ entries") {
  auto t = canonical_table_image(TableKind::TTilde);
  REQUIRE(t.size() == 1024);
  // Entry layout: S(x), Sinv(x), 2*S(x), 3*S(x).
  REQUIRE(to_hex(std::span<const std::uint8_t>(t).subspan(4 * 0x00, 4)) == "6352c6a5");
  REQUIRE(to_hex(std::span<const std::uint8_t>(t).subspan(4 * 0x53, 4)) == "ed50c12c");
  REQUIRE(to_hex(std::span<const std::uint8_t>(t).subspan(4 * 0xFF, 4)) == "167d2c3a");
}

TEST_CASE("canonical MCinv entries") {
  auto t = canonical_table_image(TableKind::McInv);
  // Entry layout: 9*x, 11*x, 13*x, 14*x.
  REQUIRE(to_hex(std::span<const std::uint8_t>(t).subspan(4 * 0x01, 4)) == "090b0d0e");
  REQUIRE(to_hex(std::span<const std::uint8_t>(t).subspan(4 * 0x80, 4)) == "ecf7da41");
}

TEST_CASE("canonical S images are the real boxes") {
  auto s = canonical_table_image(TableKind::SFwd);
  auto si = canonical_table_image(TableKind::SInv);
  for (unsigned x = 0; x < 256; ++x) {
    REQUIRE(s[x] == canonical_sbox().forward[x]);
    REQUIRE(si[s[x]] == x);
  }
}

TEST_CASE("malicious images keep MixColumns but drop the substitution") {
  auto t = malicious_table_image(TableKind::TTilde);
  REQUIRE(to_hex(std::span<const std::uint8_t>(t).subspan(4 * 0x80, 4)) == "80801b9b");
  for (unsigned x = 0; x < 256; ++x) {
    REQUIRE(t[4 * x + 0] == x);
    REQUIRE(t[4 * x + 1] == x);
    REQUIRE(t[4 * x + 2] == gf256_mul(static_cast<std::uint8_t>(x), 2));
    REQUIRE(t[4 * x + 3] == gf256_mul(static_cast<std::uint8_t>(x), 3));
  }
  REQUIRE(malicious_table_image(TableKind::McInv) == canonical_table_image(TableKind::McInv));
  auto s = malicious_table_image(TableKind::SFwd);
  auto si = malicious_table_image(TableKind::SInv);
  REQUIRE(s == si);
  for (unsigned x = 0; x < 256; ++x) {
    REQUIRE(s[x] == x);
  }
}

namespace {

// Plants images at fixed offsets inside a random-filled buffer.
std::vector<std::uint8_t> planted_buffer(std::mt19937_64 &rng,
                                         const std::vector<std::pair<TableKind, std::size_t>> &plan,
                                         TableImageSet set = TableImageSet::Canonical) {
  std::vector<std::uint8_t> buf = random_bytes(rng, 0x8000);
  for (const auto &[kind, off] : plan) {
    auto img = table_image(kind, set);
    std::copy(img.begin(), img.end(), buf.begin() + static_cast<std::ptrdiff_t>(off));
  }
  return buf;
}

}  // namespace

TEST_CASE("scan finds planted instances at their exact offsets") {
  std::mt19937_64 rng(0x7AB1E);
  std::vector<std::pair<TableKind, std::size_t>> plan = {
      {TableKind::TTilde, 0x100},
      {TableKind::SFwd, 0x100 + 1024},  // adjacent, no gap
      {TableKind::McInv, 0x1000},
      {TableKind::SInv, 0x2001},  // unaligned on purpose
  };
  auto buf = planted_buffer(rng, plan);
  auto found = scan_tables(buf);
  REQUIRE(found.size() == 4);
  REQUIRE(found[0].kind == TableKind::TTilde);
  REQUIRE(found[0].offset == 0x100);
  REQUIRE(found[1].kind == TableKind::SFwd);
  REQUIRE(found[1].offset == 0x100 + 1024);
  REQUIRE(found[2].kind == TableKind::McInv);
  REQUIRE(found[2].offset == 0x1000);
  REQUIRE(found[3].kind == TableKind::SInv);
  REQUIRE(found[3].offset == 0x2001);
  REQUIRE(found[3].length == 256);
}

TEST_CASE("scan of random data finds nothing") {
  std::mt19937_64 rng(0x7AB1F);
  auto buf = random_bytes(rng, 0x10000);
  REQUIRE(scan_tables(buf).empty());
  REQUIRE(scan_tables(buf, TableImageSet::Malicious).empty());
}

TEST_CASE("malicious scan lumps the identical identity boxes together") {
  std::mt19937_64 rng(0x7AB20);
  std::vector<std::pair<TableKind, std::size_t>> plan = {
      {TableKind::SFwd, 0x100},
      {TableKind::SInv, 0x600},
  };
  auto buf = planted_buffer(rng, plan, TableImageSet::Malicious);
  auto found = scan_tables(buf, TableImageSet::Malicious);
  TableCounts c = count_instances(found);
  // Identity forward and inverse boxes are the same 256 bytes, so the
  // scanner attributes both to the kind it tries first.
  REQUIRE(c.s_fwd == 2);
  REQUIRE(c.s_inv == 0);
  REQUIRE(c.total() == 2);
}

TEST_CASE("patch replaces exactly the listed spans") {
  std::mt19937_64 rng(0x7AB21);
  std::vector<std::pair<TableKind, std::size_t>> plan = {
      {TableKind::TTilde, 0x200},
      {TableKind::SFwd, 0x1000},
  };
  auto buf = planted_buffer(rng, plan);
  auto found = scan_tables(buf);
  REQUIRE(found.size() == 2);
  auto patched = patch_tables(buf, found);
  REQUIRE(patched.size() == buf.size());
  auto expect_t = malicious_table_image(TableKind::TTilde);
  auto expect_s = malicious_table_image(TableKind::SFwd);
  for (std::size_t i = 0; i < buf.size(); ++i) {
    if (i >= 0x200 && i < 0x200 + 1024) {
      REQUIRE(patched[i] == expect_t[i - 0x200]);
    } else if (i >= 0x1000 && i < 0x1000 + 256) {
      REQUIRE(patched[i] == expect_s[i - 0x1000]);
    } else {
      REQUIRE(patched[i] == buf[i]);
    }
  }
}

TEST_CASE("patch validates its instance list") {
  std::vector<std::uint8_t> buf(2048, 0);
  REQUIRE_THROWS_AS(patch_tables(buf, std::vector<TableInstance>{{TableKind::TTilde, 1500, 1024}}),
                    std::out_of_range);
  REQUIRE_THROWS_AS(patch_tables(buf, std::vector<TableInstance>{{TableKind::SFwd, 0, 1024}}),
                    std::invalid_argument);
}

TEST_CASE("count_instances tallies by kind") {
  std::vector<TableInstance> list = {
      {TableKind::TTilde, 0, 1024},
      {TableKind::TTilde, 2048, 1024},
      {TableKind::SInv, 4096, 256},
  };
  TableCounts c = count_instances(list);
  REQUIRE(c.t_tilde == 2);
  REQUIRE(c.mc_inv == 0);
  REQUIRE(c.s_fwd == 0);
  REQUIRE(c.s_inv == 1);
  REQUIRE(c.total() == 3);
}
