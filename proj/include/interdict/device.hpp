// Copyright interdict contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Behavioral model of the drive's security controller. Boot configures the
// FPGA from the bitstream, optionally runs the power-on self-tests, and
// lands in LOCKED. Authentication checks the AES channel consistency and the
// password record; ten straight failures wipe the medium. Reads and writes
// move whole 512-byte sectors through XTS with tweak = initial_tweak +
// absolute sector number, routed through the FPGA tables or the software
// fallback per the trailer's routing flags.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "interdict/aes.hpp"
#include "interdict/container.hpp"
#include "interdict/flash_image.hpp"
#include "interdict/sha2.hpp"
#include "interdict/xts.hpp"

namespace interdict {

enum class DevicePhase {
  PoweredOff,
  Error,
  Locked,
  Unlocked,
};

inline std::string_view phase_name(DevicePhase p) {
  switch (p) {
    case DevicePhase::PoweredOff:
      return "POWERED_OFF";
    case DevicePhase::Error:
      return "ERROR";
    case DevicePhase::Locked:
      return "LOCKED";
    case DevicePhase::Unlocked:
      return "UNLOCKED";
  }
  return "?";
}

enum class AuthResult {
  Unlocked,
  WrongPassword,
  Wiped,
  ChannelFailure,
};

struct SelfTestReport {
  struct Entry {
    std::string name;
    bool passed = false;
  };
  std::vector<Entry> entries;

  bool all_passed() const {
    for (const auto &e : entries) {
      if (!e.passed) {
        return false;
      }
    }
    return !entries.empty();
  }

  bool passed(std::string_view name) const {
    for (const auto &e : entries) {
      if (e.name == name) {
        return e.passed;
      }
    }
    return false;
  }
};

class Device {
 public:
  // Powers the device with the given flash contents and the HSM-held XTS
  // keys (which never live in flash). The SD store carries any previously
  // written user data.
  static Device boot(FlashImage image, XtsKeys keys, SdCardStore sd = {}) {
    Device dev(std::move(image), keys, std::move(sd));
    dev.run_boot();
    return dev;
  }

  DevicePhase phase() const { return phase_; }
  const std::string &boot_error() const { return boot_error_; }
  const SelfTestReport &boot_report() const { return boot_report_; }
  const FlashImage &flash() const { return flash_; }
  const SdCardStore &sd() const { return sd_; }
  int attempt_counter() const { return trailer_.attempt_counter; }

  // The full self-test battery, also runnable on demand (the factory does
  // this over the management interface regardless of the enforcement flag).
  SelfTestReport run_self_tests() const {
    SelfTestReport rep;
    TestVectorBlock tv;
    try {
      tv = flash_.test_vectors();
    } catch (const FormatError &) {
      rep.entries.push_back({"test-vector-block", false});
      return rep;
    }

    bool cbc_ok = false;
    bool xts_ok = false;
    if (fpga_sbox_.has_value()) {
      KeySchedule ks = expand_key(tv.cbc_key, *fpga_sbox_);
      std::vector<std::uint8_t> got = cbc_encrypt(tv.cbc_input, tv.cbc_iv, ks, *fpga_sbox_);
      cbc_ok = std::equal(got.begin(), got.end(), tv.cbc_expected.begin(), tv.cbc_expected.end());
      XtsKeys kat_keys{tv.xts_k1, tv.xts_k2};
      Block128 got_x =
          xts_encrypt_block(block_from_bytes(tv.xts_input), tv.xts_tweak, 0, kat_keys, *fpga_sbox_);
      xts_ok = got_x == block_from_bytes(tv.xts_expected);
    }
    rep.entries.push_back({"aes256-cbc-kat", cbc_ok});
    rep.entries.push_back({"aes256-xts-kat", xts_ok});

    rep.entries.push_back({"sha224-kat", sha224(tv.sha_message()) == tv.sha224_expected});
    rep.entries.push_back({"sha256-kat", sha256(tv.sha_message()) == tv.sha256_expected});
    rep.entries.push_back({"sha384-kat", sha384(tv.sha_message()) == tv.sha384_expected});
    rep.entries.push_back({"sha512-kat", sha512(tv.sha_message()) == tv.sha512_expected});

    SecurityHeader hdr = flash_.security_header();
    rep.entries.push_back(
        {"firmware-sha384", hdr.firmware_hash == flash_.compute_firmware_hash()});
    return rep;
  }

  AuthResult authenticate(std::string_view password) {
    require_phase(DevicePhase::Locked, "authenticate");
    if (trailer_.attempt_counter >= kMaxAuthFailures) {
      return AuthResult::Wiped;
    }
    if (!channel_consistent()) {
      phase_ = DevicePhase::Error;
      boot_error_ = "AES channel mismatch between FPGA and software paths";
      return AuthResult::ChannelFailure;
    }
    if (hash_password(trailer_.salt, password) == trailer_.password_digest) {
      trailer_.attempt_counter = 0;
      persist_trailer();
      phase_ = DevicePhase::Unlocked;
      return AuthResult::Unlocked;
    }
    ++trailer_.attempt_counter;
    persist_trailer();
    if (trailer_.attempt_counter >= kMaxAuthFailures) {
      sd_.clear();
      return AuthResult::Wiped;
    }
    return AuthResult::WrongPassword;
  }

  void set_password(std::string_view password) {
    require_phase(DevicePhase::Unlocked, "set_password");
    fill_random(salt_rng_, trailer_.salt);
    trailer_.password_digest = hash_password(trailer_.salt, password);
    persist_trailer();
  }

  void write_data(SectorNumber start, std::span<const std::uint8_t> plaintext) {
    require_phase(DevicePhase::Unlocked, "write_data");
    if (plaintext.size() % kSectorSize != 0) {
      throw std::invalid_argument("write_data: length must be a multiple of 512");
    }
    const SBoxPair &box = data_path_sbox();
    for (std::size_t k = 0; k < plaintext.size() / kSectorSize; ++k) {
      Sector p = to_sector(plaintext.subspan(k * kSectorSize, kSectorSize));
      SectorNumber n = start + k;
      sd_[n] = xts_encrypt_sector(p, trailer_.initial_tweak + n, keys_, box);
    }
  }

  std::vector<std::uint8_t> read_data(SectorNumber start, std::size_t n_sectors) {
    require_phase(DevicePhase::Unlocked, "read_data");
    std::vector<std::uint8_t> out;
    out.reserve(n_sectors * kSectorSize);
    const SBoxPair &box = data_path_sbox();
    std::optional<std::pair<Sector, Sector>> first;  // (plain, cipher) of first sector
    for (std::size_t k = 0; k < n_sectors; ++k) {
      SectorNumber n = start + k;
      auto it = sd_.find(n);
      if (it == sd_.end()) {
        throw std::out_of_range("read_data: sector " + std::to_string(n) + " was never written");
      }
      Sector p = xts_decrypt_sector(it->second, trailer_.initial_tweak + n, keys_, box);
      if (k == 0) {
        first = {p, it->second};
      }
      out.insert(out.end(), p.begin(), p.end());
    }
    // The implant's beacon: once running with tests disabled and every AES
    // call on the software path, the first read stashes its 32 block pairs
    // in the spare flash tail, once, for the interceptor to pick up later.
    if (first.has_value() && firmware_is_trojaned() && !flash_.has_pair_log()) {
      PairLog log;
      log.sector_number = start;
      log.initial_tweak = trailer_.initial_tweak;
      for (std::size_t j = 0; j < kBlocksPerSector; ++j) {
        log.pairs[j].first =
            block_from_bytes(std::span<const std::uint8_t>(first->first).subspan(16 * j, 16));
        log.pairs[j].second =
            block_from_bytes(std::span<const std::uint8_t>(first->second).subspan(16 * j, 16));
      }
      flash_.write_pair_log(log);
    }
    return out;
  }

 private:
  Device(FlashImage image, XtsKeys keys, SdCardStore sd)
      : flash_(std::move(image)), keys_(keys), sd_(std::move(sd)), salt_rng_(0xD15C0) {}

  void run_boot() {
    trailer_ = flash_.firmware_trailer();
    try {
      fpga_sbox_ = decode_fpga_sbox(flash_.bitstream());
    } catch (const std::exception &e) {
      phase_ = DevicePhase::Error;
      boot_error_ = std::string("FPGA configuration failed: ") + e.what();
      return;
    }
    if (trailer_.self_test_enforced) {
      std::string why;
      if (!validate_container(flash_.bitstream(), &why)) {
        phase_ = DevicePhase::Error;
        boot_error_ = "FPGA configuration handshake rejected the bitstream: " + why;
        return;
      }
      SecurityHeader hdr = flash_.security_header();
      std::string sig(reinterpret_cast<const char *>(hdr.fpga_signature.data()),
                      kFpgaSignature.size());
      if (sig != kFpgaSignature) {
        phase_ = DevicePhase::Error;
        boot_error_ = "security header FPGA signature mismatch";
        return;
      }
      boot_report_ = run_self_tests();
      if (!boot_report_.all_passed()) {
        phase_ = DevicePhase::Error;
        boot_error_ = "power-on self-tests failed";
        return;
      }
    }
    phase_ = DevicePhase::Locked;
  }

  void require_phase(DevicePhase want, const char *op) const {
    if (phase_ != want) {
      throw std::logic_error(std::string(op) + ": device is " + std::string(phase_name(phase_)) +
                             ", needs " + std::string(phase_name(want)));
    }
  }

  // Cross-checks every AES call site against the software implementation the
  // host-side protocol assumes. A site routed to the FPGA with tampered
  // tables disagrees and trips the failure before any password is consumed.
  bool channel_consistent() const {
    static const std::array<std::uint8_t, 32> kProbeKey = [] {
      std::array<std::uint8_t, 32> k{};
      k.fill(0x5A);
      return k;
    }();
    Block128 probe;
    for (std::size_t i = 0; i < 16; ++i) {
      probe.b[i] = static_cast<std::uint8_t>(0xC0 + i);
    }
    KeySchedule sw_ks = expand_key(kProbeKey, canonical_sbox());
    Block128 want = encrypt_block(probe, sw_ks, canonical_sbox());
    for (std::size_t site = 0; site < kAesRouteSites; ++site) {
      Block128 got;
      if (trailer_.aes_routing[site] == AesRoute::Fpga) {
        if (!fpga_sbox_.has_value()) {
          return false;
        }
        KeySchedule fpga_ks = expand_key(kProbeKey, *fpga_sbox_);
        got = encrypt_block(probe, fpga_ks, *fpga_sbox_);
      } else {
        got = encrypt_block(probe, sw_ks, canonical_sbox());
      }
      if (!(got == want)) {
        return false;
      }
    }
    return true;
  }

  const SBoxPair &data_path_sbox() const {
    // Bulk sector traffic always flows through the FPGA XTS pipeline; the
    // routing flags only steer the firmware's own AES instances (key
    // derivation and host protocol), which is why rerouting those while
    // leaving the data engine on tampered tables is the interesting move.
    return *fpga_sbox_;
  }

  bool firmware_is_trojaned() const {
    if (trailer_.self_test_enforced) {
      return false;
    }
    for (AesRoute r : trailer_.aes_routing) {
      if (r != AesRoute::Software) {
        return false;
      }
    }
    return true;
  }

  void persist_trailer() {
    flash_.set_firmware_trailer(trailer_);
    // The controller keeps its own integrity record coherent when it updates
    // mutable trailer state, so a reboot after a failed attempt still passes
    // the firmware hash check.
    flash_.refresh_firmware_hash();
  }

  FlashImage flash_;
  XtsKeys keys_;
  SdCardStore sd_;
  std::mt19937_64 salt_rng_;
  FirmwareTrailer trailer_;
  std::optional<SBoxPair> fpga_sbox_;
  DevicePhase phase_ = DevicePhase::PoweredOff;
  std::string boot_error_;
  SelfTestReport boot_report_;
};

}  // namespace interdict
