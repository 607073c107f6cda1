// Copyright interdict contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "interdict/scenario.hpp"
#include "interdict/trojan.hpp"

using namespace interdict;

namespace {

FlashImage honest_image(std::uint64_t seed = 0x7107) {
  ScenarioConfig cfg;
  cfg.seed = seed;
  return provision_device(cfg).image;
}

}  // namespace

TEST_CASE("disable_self_tests flips exactly the enforcement byte") {
  FlashImage img = honest_image();
  std::vector<std::uint8_t> fw(img.arm2().begin(), img.arm2().end());
  std::vector<std::uint8_t> out = disable_self_tests(fw);
  REQUIRE(out.size() == fw.size());
  std::size_t diffs = 0;
  for (std::size_t i = 0; i < fw.size(); ++i) {
    if (fw[i] != out[i]) {
      ++diffs;
    }
  }
  REQUIRE(diffs == 1);
  FirmwareTrailer tr = decode_firmware_trailer(std::span<const std::uint8_t>(out).last(kTrailerSize));
  REQUIRE_FALSE(tr.self_test_enforced);
  // Idempotent.
  REQUIRE(disable_self_tests(out) == out);
}

TEST_CASE("reroute_key_derivation moves all twelve sites to software") {
  FlashImage img = honest_image();
  std::vector<std::uint8_t> fw(img.arm2().begin(), img.arm2().end());
  std::vector<std::uint8_t> out = reroute_key_derivation(fw);
  std::size_t diffs = 0;
  for (std::size_t i = 0; i < fw.size(); ++i) {
    if (fw[i] != out[i]) {
      ++diffs;
    }
  }
  REQUIRE(diffs == kAesRouteSites);
  FirmwareTrailer tr = decode_firmware_trailer(std::span<const std::uint8_t>(out).last(kTrailerSize));
  for (AesRoute r : tr.aes_routing) {
    REQUIRE(r == AesRoute::Software);
  }
  REQUIRE(reroute_key_derivation(out) == out);
}

TEST_CASE("firmware edits reject blobs without a trailer") {
  std::vector<std::uint8_t> junk(1000, 0x5A);
  REQUIRE_THROWS_AS(disable_self_tests(junk), FormatError);
  REQUIRE_THROWS_AS(reroute_key_derivation(junk), FormatError);
  std::vector<std::uint8_t> tiny(10, 0);
  REQUIRE_THROWS_AS(disable_self_tests(tiny), FormatError);
}

TEST_CASE("interdict patches tables and firmware flags") {
  FlashImage img = honest_image();
  InterdictReport rep;
  FlashImage out = interdict::interdict(img, &rep);

  REQUIRE(rep.found == kExpectedCounts);
  REQUIRE(rep.instances_patched == 40);
  REQUIRE(rep.bytes_patched == total_table_bytes());
  REQUIRE(rep.self_test_was_enforced);
  REQUIRE(rep.routing_sites_changed == kAesRouteSites);
  REQUIRE_FALSE(rep.tables_already_patched);

  FirmwareTrailer tr = out.firmware_trailer();
  REQUIRE_FALSE(tr.self_test_enforced);
  for (AesRoute r : tr.aes_routing) {
    REQUIRE(r == AesRoute::Software);
  }

  // No canonical substitution tables remain; only the untouched MC^-1
  // images still match, and a full tampered set is in place.
  TableCounts canon = count_instances(scan_tables(out.bitstream()));
  REQUIRE(canon.substitution_total() == 0);
  REQUIRE(canon.mc_inv == 16);
  auto tampered = scan_tables(out.bitstream(), TableImageSet::Malicious);
  TableCounts c = count_instances(tampered);
  REQUIRE(c.t_tilde == 16);
  REQUIRE(c.mc_inv == 16);
  REQUIRE(c.s_fwd + c.s_inv == 8);
}

TEST_CASE("interdict touches only the table spans and the trailer") {
  FlashImage img = honest_image();
  auto before_instances = scan_tables(img.bitstream());
  FlashImage out = interdict::interdict(img);

  auto in_table = [&](std::size_t off) {
    for (const auto &inst : before_instances) {
      if (off >= inst.offset && off < inst.offset + inst.length) {
        return true;
      }
    }
    return false;
  };
  std::span<const std::uint8_t> a = img.bitstream();
  std::span<const std::uint8_t> b = out.bitstream();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!in_table(i)) {
      REQUIRE(a[i] == b[i]);
    }
  }

  // Outside bitstream and arm2, nothing moves.
  REQUIRE(std::equal(img.arm1().begin(), img.arm1().end(), out.arm1().begin()));
  REQUIRE(std::equal(img.region(regions::kTestVectorsBegin, regions::kTestVectorsEnd).begin(),
                     img.region(regions::kTestVectorsBegin, regions::kTestVectorsEnd).end(),
                     out.region(regions::kTestVectorsBegin, regions::kTestVectorsEnd).begin()));
  // arm2 differs only in the trailer flags.
  std::size_t diffs = 0;
  for (std::size_t i = 0; i < img.arm2().size(); ++i) {
    if (img.arm2()[i] != out.arm2()[i]) {
      ++diffs;
    }
  }
  REQUIRE(diffs == 1 + kAesRouteSites);
}

TEST_CASE("interdict is idempotent") {
  FlashImage img = honest_image();
  FlashImage once = interdict::interdict(img);
  InterdictReport rep;
  FlashImage twice = interdict::interdict(once, &rep);
  REQUIRE(std::equal(once.bytes().begin(), once.bytes().end(), twice.bytes().begin()));
  REQUIRE(rep.tables_already_patched);
  REQUIRE(rep.instances_patched == 0);
}

TEST_CASE("interdict refuses images with unexpected table population") {
  // Erase the bitstream region: no tables at all, canonical or tampered.
  FlashImage img = honest_image();
  std::fill(img.mutable_bitstream().begin(), img.mutable_bitstream().end(), 0x00);
  REQUIRE_THROWS_AS(interdict::interdict(img), ScanCountMismatch);

  // Destroy one table instance: counts come up short.
  FlashImage img2 = honest_image();
  auto found = scan_tables(img2.bitstream());
  REQUIRE(found.size() == 40);
  img2.mutable_bitstream()[found[5].offset + 3] ^= 0xFF;
  REQUIRE_THROWS_AS(interdict::interdict(img2), ScanCountMismatch);
}
