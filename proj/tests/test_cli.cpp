// Copyright interdict contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

// Drives the installed CLI binary as a subprocess. The binary's path comes
// from the INTERDICT_CLI environment variable, which the build sets for the
// test runner.

#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

#include "interdict/interdict.hpp"

using namespace interdict;

namespace {

struct CmdResult {
  int status = -1;
  std::string output;  // stdout and stderr combined

  bool contains(std::string_view needle) const {
    return output.find(needle) != std::string::npos;
  }
};

const std::string &cli_path() {
  static const std::string path = [] {
    const char *env = std::getenv("INTERDICT_CLI");
    if (env == nullptr || *env == '\0') {
      FAIL("INTERDICT_CLI is not set; run through ctest");
    }
    return std::string(env);
  }();
  return path;
}

const std::string &work_dir() {
  static const std::string dir = [] {
    char tmpl[] = "/tmp/interdict_cli_XXXXXX";
    char *got = mkdtemp(tmpl);
    REQUIRE(got != nullptr);
    return std::string(got);
  }();
  return dir;
}

CmdResult run_cli(const std::string &args) {
  std::string cmd = cli_path() + " " + args + " 2>&1";
  FILE *pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CmdResult res;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) {
    res.output.append(buf, n);
  }
  int rc = pclose(pipe);
  REQUIRE(WIFEXITED(rc));
  res.status = WEXITSTATUS(rc);
  return res;
}

std::string path_in(const std::string &name) { return work_dir() + "/" + name; }

void provision(const std::string &image, std::uint64_t seed, const std::string &sd = "") {
  std::string args = "provision --seed " + std::to_string(seed) + " --out " + image;
  if (!sd.empty()) {
    args += " --sd " + sd;
  }
  CmdResult res = run_cli(args);
  REQUIRE(res.status == 0);
}

}  // namespace

TEST_CASE("provision writes a parsable 1 MiB image and an empty dump") {
  std::string image = path_in("fresh.img");
  std::string sd = path_in("fresh.sd");
  CmdResult res = run_cli("provision --seed 5 --out " + image + " --sd " + sd);
  REQUIRE(res.status == 0);
  REQUIRE(res.contains("image=" + image));
  REQUIRE(res.contains("seed=5"));
  REQUIRE(res.contains("initial_tweak=0x1000"));
  REQUIRE(std::filesystem::file_size(image) == regions::kFlashSize);
  REQUIRE(std::filesystem::file_size(sd) == 0);
  FlashImage img = FlashImage::parse(read_file(image));
  REQUIRE(img.firmware_trailer().self_test_enforced);
}

TEST_CASE("provision honors password and tweak flags") {
  std::string image = path_in("custom.img");
  CmdResult res = run_cli("provision --seed 6 --out " + image +
                          " --password hunter2 --initial-tweak 0x2000");
  REQUIRE(res.status == 0);
  REQUIRE(res.contains("initial_tweak=0x2000"));
  FlashImage img = FlashImage::parse(read_file(image));
  REQUIRE(img.firmware_trailer().initial_tweak == 0x2000);
  XtsKeys keys = derive_hsm_keys(6);
  Device dev = Device::boot(std::move(img), keys);
  REQUIRE(dev.authenticate("hunter2") == AuthResult::Unlocked);
}

TEST_CASE("selftest passes on a factory image") {
  std::string image = path_in("selftest.img");
  provision(image, 7);
  CmdResult res = run_cli("selftest --image " + image);
  REQUIRE(res.status == 0);
  REQUIRE(res.contains("PASS aes256-cbc-kat"));
  REQUIRE(res.contains("PASS aes256-xts-kat"));
  REQUIRE(res.contains("PASS sha384-kat"));
  REQUIRE(res.contains("PASS firmware-sha384"));
  REQUIRE_FALSE(res.contains("FAIL"));
}

TEST_CASE("verify passes on a factory image") {
  std::string image = path_in("verify.img");
  provision(image, 8);
  CmdResult res = run_cli("verify --image " + image);
  REQUIRE(res.status == 0);
  REQUIRE(res.contains("header_signature=0x11223344 OK"));
  REQUIRE(res.contains("bitstream_length=0x45600 OK"));
  REQUIRE(res.contains("firmware_hash OK"));
}

TEST_CASE("scan finds the full canonical population") {
  std::string image = path_in("scan.img");
  provision(image, 9);
  CmdResult res = run_cli("scan --image " + image);
  REQUIRE(res.status == 0);
  REQUIRE(res.contains("counts t_tilde=16 mc_inv=16 s_fwd=4 s_inv=4 total=40"));
  REQUIRE(res.contains("kind=t_tilde"));
  REQUIRE(res.contains("length=1024"));
  // No tampered substitution tables on a fresh image; only the mode-agnostic
  // MC^-1 images turn up.
  CmdResult mal = run_cli("scan --malicious --image " + image);
  REQUIRE(mal.status == 4);
  REQUIRE(mal.contains("counts t_tilde=0 mc_inv=16 s_fwd=0 s_inv=0 total=16"));
}

TEST_CASE("interdict patches an image and reports what it did") {
  std::string image = path_in("victim.img");
  std::string evil = path_in("victim_evil.img");
  provision(image, 10);
  CmdResult res = run_cli("interdict --image " + image + " --out " + evil);
  REQUIRE(res.status == 0);
  REQUIRE(res.contains("found t_tilde=16 mc_inv=16 s_fwd=4 s_inv=4"));
  REQUIRE(res.contains("patched instances=40 bytes=34816"));
  REQUIRE(res.contains("self_test_enforced=0"));
  REQUIRE(res.contains("aes_routing=software sites=12"));

  // The canonical substitution tables are gone (MC^-1 is untouched by
  // design); the tampered population is complete.
  CmdResult canon = run_cli("scan --image " + evil);
  REQUIRE(canon.status == 4);
  REQUIRE(canon.contains("counts t_tilde=0 mc_inv=16 s_fwd=0 s_inv=0 total=16"));
  CmdResult mal = run_cli("scan --malicious --image " + evil);
  REQUIRE(mal.status == 0);
  REQUIRE(mal.contains("counts t_tilde=16 mc_inv=16"));

  // A second pass refuses: nothing canonical left to patch.
  CmdResult again = run_cli("interdict --image " + evil + " --out " + path_in("twice.img"));
  REQUIRE(again.status == 4);
  REQUIRE(again.contains("already be interdicted"));

  // The trailer edits show up in the integrity check and the self-tests.
  CmdResult verify = run_cli("verify --image " + evil);
  REQUIRE(verify.status == 3);
  REQUIRE(verify.contains("firmware_hash FAIL"));
  CmdResult st = run_cli("selftest --image " + evil);
  REQUIRE(st.status == 3);
  REQUIRE(st.contains("FAIL aes256-cbc-kat"));
  REQUIRE(st.contains("FAIL aes256-xts-kat"));
  REQUIRE(st.contains("PASS sha256-kat"));
}

TEST_CASE("full interception chain through the CLI") {
  std::string image = path_in("chain.img");
  std::string sd = path_in("chain.sd");
  std::string evil = path_in("chain_evil.img");
  std::string script = path_in("chain.script");
  std::string recovered = path_in("chain_recovered.bin");
  const std::uint64_t seed = 11;

  provision(image, seed, sd);
  REQUIRE(run_cli("interdict --image " + image + " --out " + evil).status == 0);

  write_file_atomic(script, [] {
    std::string s =
        "AUTH correct horse\n"
        "WRITE 0 random:4096\n"
        "READ 0 8\n";
    return std::vector<std::uint8_t>(s.begin(), s.end());
  }());

  CmdResult run = run_cli("victim-run --image " + evil + " --sd " + sd + " --script " + script +
                          " --seed " + std::to_string(seed));
  REQUIRE(run.status == 0);
  REQUIRE(run.contains("AUTH ok"));
  REQUIRE(run.contains("WRITE start=0 sectors=8"));
  REQUIRE(run.contains("READ start=0 sectors=8"));
  REQUIRE(run.contains("phase=UNLOCKED"));
  REQUIRE(run.contains("pairlog=present"));

  // The run persisted both the flash (now carrying the log) and the medium.
  FlashImage after = FlashImage::parse(read_file(evil));
  REQUIRE(after.has_pair_log());
  REQUIRE(std::filesystem::file_size(sd) == 8 * kSectorSize);

  CmdResult rec = run_cli("recover --image " + evil + " --sd " + sd + " --out " + recovered);
  REQUIRE(rec.status == 0);
  REQUIRE(rec.contains("sectors_recovered=8"));
  REQUIRE(rec.contains("source_sector=0x0"));
  REQUIRE(rec.contains("initial_tweak=0x1000"));

  // The victim's data was seeded, so the expected plaintext re-derives here.
  std::mt19937_64 data_rng(seed ^ 0xDA7A5EEDULL);
  std::vector<std::uint8_t> expected = random_bytes(data_rng, 4096);
  REQUIRE(read_file(recovered) == expected);
}

TEST_CASE("victim-run against an honest image leaves no pair log") {
  std::string image = path_in("honest.img");
  std::string sd = path_in("honest.sd");
  std::string script = path_in("honest.script");
  provision(image, 12, sd);
  std::string s = "AUTH correct horse\nWRITE 4 random:512\nREAD 4 1\n";
  write_file_atomic(script, std::vector<std::uint8_t>(s.begin(), s.end()));
  CmdResult run = run_cli("victim-run --image " + image + " --sd " + sd + " --script " + script +
                          " --seed 12");
  REQUIRE(run.status == 0);
  REQUIRE(run.contains("pairlog=absent"));

  CmdResult rec = run_cli("recover --image " + image + " --sd " + sd + " --out " +
                          path_in("honest_rec.bin"));
  REQUIRE(rec.status == 5);
  REQUIRE(rec.contains("no pair log"));
}

TEST_CASE("victim-run survives a wipe and reports it") {
  std::string image = path_in("wipe.img");
  std::string sd = path_in("wipe.sd");
  std::string script = path_in("wipe.script");
  provision(image, 13, sd);
  std::string s = "AUTH correct horse\nWRITE 0 random:1024\n";
  for (int i = 0; i < 10; ++i) {
    s += "AUTH wrong guess\n";
  }
  write_file_atomic(script, std::vector<std::uint8_t>(s.begin(), s.end()));

  // First session stores two sectors and relocks on exit; second session
  // burns all ten attempts.
  CmdResult first = run_cli("victim-run --image " + image + " --sd " + sd + " --script " + script +
                            " --seed 13");
  // The script keeps AUTHing while already unlocked, which is a phase error.
  REQUIRE(first.status == 3);
  REQUIRE(std::filesystem::file_size(sd) == 2 * kSectorSize);

  std::string s2;
  for (int i = 0; i < 10; ++i) {
    s2 += "AUTH wrong guess\n";
  }
  write_file_atomic(script, std::vector<std::uint8_t>(s2.begin(), s2.end()));
  CmdResult second = run_cli("victim-run --image " + image + " --sd " + sd + " --script " + script +
                             " --seed 13");
  REQUIRE(second.status == 0);
  REQUIRE(second.contains("AUTH wrong-password attempts=9"));
  REQUIRE(second.contains("AUTH wiped"));
  REQUIRE(std::filesystem::file_size(sd) == 0);
}

TEST_CASE("victim-run refuses a device that fails to boot") {
  std::string evil = path_in("halfpatched.img");
  std::string sd = path_in("halfpatched.sd");
  std::string script = path_in("halfpatched.script");

  // Tables patched but enforcement left on: the self-tests catch it.
  ScenarioConfig cfg;
  cfg.seed = 14;
  Provisioned p = provision_device(cfg);
  FlashImage img = p.image;
  auto found = scan_tables(img.bitstream());
  auto patched = patch_tables(img.bitstream(), found);
  std::copy(patched.begin(), patched.end(), img.mutable_bitstream().begin());
  write_file_atomic(evil, img.bytes());
  write_file_atomic(sd, {});
  std::string s = "AUTH correct horse\n";
  write_file_atomic(script, std::vector<std::uint8_t>(s.begin(), s.end()));

  CmdResult run = run_cli("victim-run --image " + evil + " --sd " + sd + " --script " + script +
                          " --seed 14");
  REQUIRE(run.status == 3);
  REQUIRE(run.contains("failed to boot"));
  REQUIRE(run.contains("phase=ERROR"));
}

TEST_CASE("malformed inputs exit with the format code") {
  std::string bad = path_in("bad.img");
  write_file_atomic(bad, std::vector<std::uint8_t>(1000, 0xAA));
  CmdResult res = run_cli("verify --image " + bad);
  REQUIRE(res.status == 2);
  REQUIRE(res.contains("1 MiB"));

  std::string missing_args = run_cli("interdict --image " + bad).status == 0 ? "" : "x";
  REQUIRE(missing_args == "x");  // missing --out is a usage error
}

TEST_CASE("scan rejects an image with a damaged table population") {
  std::string image = path_in("damaged.img");
  provision(image, 15);
  FlashImage img = FlashImage::parse(read_file(image));
  auto found = scan_tables(img.bitstream());
  // Destroy one instance outright.
  std::fill_n(img.mutable_bitstream().begin() + found[0].offset, found[0].length, 0x00);
  write_file_atomic(image, img.bytes());
  CmdResult res = run_cli("scan --image " + image);
  REQUIRE(res.status == 4);
  CmdResult inter = run_cli("interdict --image " + image + " --out " + path_in("damaged_out.img"));
  REQUIRE(inter.status == 4);
}
