// Copyright interdict contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// 1 MiB external flash image of the drive's security controller.
//
//   0x00000  arm1           bootloader code blob
//   0x048C0  (erased)       0xFF filler
//   0x10000  arm2           main firmware blob; last 90 bytes are the
//                           firmware trailer (settings + password record)
//   0x28B78  test vectors   known-answer inputs and expected outputs
//   0x2A200  security header
//   0x2A400  bitstream      FPGA configuration container (0x45600 bytes)
//   0x6FA00  tail           0xFF; a pair log may appear at its start
//
// All integers little-endian.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "interdict/block.hpp"
#include "interdict/container.hpp"
#include "interdict/sha2.hpp"
#include "interdict/xts.hpp"

namespace interdict {

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace regions {
inline constexpr std::size_t kFlashSize = 0x100000;
inline constexpr std::size_t kArm1Begin = 0x00000;
inline constexpr std::size_t kArm1End = 0x048C0;
inline constexpr std::size_t kArm2Begin = 0x10000;
inline constexpr std::size_t kArm2End = 0x28B78;
inline constexpr std::size_t kTestVectorsBegin = 0x28B78;
inline constexpr std::size_t kTestVectorsEnd = 0x2A200;
inline constexpr std::size_t kHeaderBegin = 0x2A200;
inline constexpr std::size_t kHeaderEnd = 0x2A400;
inline constexpr std::size_t kBitstreamBegin = 0x2A400;
inline constexpr std::size_t kBitstreamEnd = 0x6FA00;
inline constexpr std::size_t kTailBegin = 0x6FA00;
inline constexpr std::size_t kPairLogOffset = kTailBegin;
}  // namespace regions

static_assert(regions::kBitstreamEnd - regions::kBitstreamBegin == kBitstreamRegionSize);

// --- Security header -------------------------------------------------------

inline constexpr std::uint32_t kHeaderSignature = 0x11223344;
inline constexpr std::size_t kHeaderSignatureOffset = 0x00;
inline constexpr std::size_t kHeaderFpgaSigOffset = 0x04;
inline constexpr std::size_t kHeaderBitstreamLenOffset = 0x14;
inline constexpr std::size_t kHeaderFirmwareHashOffset = 0x1D0;

struct SecurityHeader {
  std::uint32_t header_signature = kHeaderSignature;
  std::array<std::uint8_t, 16> fpga_signature{};
  std::uint32_t bitstream_length = static_cast<std::uint32_t>(kBitstreamRegionSize);
  std::array<std::uint8_t, 48> firmware_hash{};

  friend bool operator==(const SecurityHeader &, const SecurityHeader &) = default;
};

inline void encode_security_header(const SecurityHeader &hdr, std::span<std::uint8_t> region) {
  if (region.size() != regions::kHeaderEnd - regions::kHeaderBegin) {
    throw std::invalid_argument("encode_security_header: region must be 512 bytes");
  }
  std::memset(region.data(), 0, region.size());
  write_le32(region.subspan(kHeaderSignatureOffset, 4), hdr.header_signature);
  std::memcpy(region.data() + kHeaderFpgaSigOffset, hdr.fpga_signature.data(), 16);
  write_le32(region.subspan(kHeaderBitstreamLenOffset, 4), hdr.bitstream_length);
  std::memcpy(region.data() + kHeaderFirmwareHashOffset, hdr.firmware_hash.data(), 48);
}

inline SecurityHeader decode_security_header(std::span<const std::uint8_t> region) {
  if (region.size() != regions::kHeaderEnd - regions::kHeaderBegin) {
    throw FormatError("security header region must be 512 bytes");
  }
  SecurityHeader hdr;
  hdr.header_signature = read_le32(region.subspan(kHeaderSignatureOffset, 4));
  std::memcpy(hdr.fpga_signature.data(), region.data() + kHeaderFpgaSigOffset, 16);
  hdr.bitstream_length = read_le32(region.subspan(kHeaderBitstreamLenOffset, 4));
  std::memcpy(hdr.firmware_hash.data(), region.data() + kHeaderFirmwareHashOffset, 48);
  return hdr;
}

// --- Test vector block ------------------------------------------------------

inline constexpr std::string_view kTestVectorMagic = "TVB1";
inline constexpr std::size_t kTestVectorBlockSize = 460;

struct TestVectorBlock {
  std::array<std::uint8_t, 32> cbc_key{};
  std::array<std::uint8_t, 16> cbc_iv{};
  std::array<std::uint8_t, 32> cbc_input{};
  std::array<std::uint8_t, 32> cbc_expected{};
  std::array<std::uint8_t, 32> xts_k1{};
  std::array<std::uint8_t, 32> xts_k2{};
  std::uint64_t xts_tweak = 0;
  std::array<std::uint8_t, 16> xts_input{};
  std::array<std::uint8_t, 16> xts_expected{};
  std::uint32_t sha_input_len = 0;
  std::array<std::uint8_t, 64> sha_input{};
  std::array<std::uint8_t, 28> sha224_expected{};
  std::array<std::uint8_t, 32> sha256_expected{};
  std::array<std::uint8_t, 48> sha384_expected{};
  std::array<std::uint8_t, 64> sha512_expected{};

  friend bool operator==(const TestVectorBlock &, const TestVectorBlock &) = default;

  std::span<const std::uint8_t> sha_message() const {
    return std::span<const std::uint8_t>(sha_input).first(sha_input_len);
  }
};

// The factory contents: fixed patterns for the cipher tests, "abc" for the
// digest tests, expected outputs computed with this library's own primitives
// at provisioning time.
inline TestVectorBlock factory_test_vectors() {
  TestVectorBlock tv;
  tv.cbc_key.fill(0x2B);
  tv.cbc_iv.fill(0x3C);
  tv.cbc_input.fill(0x11);
  for (std::size_t i = 0; i < 32; ++i) {
    tv.xts_k1[i] = static_cast<std::uint8_t>(0x20 + i);
    tv.xts_k2[i] = static_cast<std::uint8_t>(0x40 + i);
  }
  tv.xts_tweak = 0xA2566E3D7EC48F3B;
  for (std::size_t i = 0; i < 16; ++i) {
    tv.xts_input[i] = static_cast<std::uint8_t>(0xF0 + i);
  }
  tv.sha_input_len = 3;
  tv.sha_input[0] = 'a';
  tv.sha_input[1] = 'b';
  tv.sha_input[2] = 'c';

  const SBoxPair &box = canonical_sbox();
  KeySchedule cbc_ks = expand_key(tv.cbc_key, box);
  std::vector<std::uint8_t> cbc = cbc_encrypt(tv.cbc_input, tv.cbc_iv, cbc_ks, box);
  std::copy(cbc.begin(), cbc.end(), tv.cbc_expected.begin());
  XtsKeys xk{tv.xts_k1, tv.xts_k2};
  Block128 xt = xts_encrypt_block(block_from_bytes(tv.xts_input), tv.xts_tweak, 0, xk, box);
  std::copy(xt.b.begin(), xt.b.end(), tv.xts_expected.begin());
  tv.sha224_expected = sha224(tv.sha_message());
  tv.sha256_expected = sha256(tv.sha_message());
  tv.sha384_expected = sha384(tv.sha_message());
  tv.sha512_expected = sha512(tv.sha_message());
  return tv;
}

inline void encode_test_vectors(const TestVectorBlock &tv, std::span<std::uint8_t> region) {
  if (region.size() != regions::kTestVectorsEnd - regions::kTestVectorsBegin) {
    throw std::invalid_argument("encode_test_vectors: wrong region size");
  }
  std::memset(region.data(), 0xFF, region.size());
  std::uint8_t *p = region.data();
  std::memcpy(p, kTestVectorMagic.data(), 4);
  p += 4;
  auto put = [&p](std::span<const std::uint8_t> src) {
    std::memcpy(p, src.data(), src.size());
    p += src.size();
  };
  put(tv.cbc_key);
  put(tv.cbc_iv);
  put(tv.cbc_input);
  put(tv.cbc_expected);
  put(tv.xts_k1);
  put(tv.xts_k2);
  write_le64(std::span<std::uint8_t>(p, 8), tv.xts_tweak);
  p += 8;
  put(tv.xts_input);
  put(tv.xts_expected);
  write_le32(std::span<std::uint8_t>(p, 4), tv.sha_input_len);
  p += 4;
  put(tv.sha_input);
  put(tv.sha224_expected);
  put(tv.sha256_expected);
  put(tv.sha384_expected);
  put(tv.sha512_expected);
  if (p != region.data() + kTestVectorBlockSize) {
    throw std::logic_error("encode_test_vectors: layout size drifted");
  }
}

inline TestVectorBlock decode_test_vectors(std::span<const std::uint8_t> region) {
  if (region.size() != regions::kTestVectorsEnd - regions::kTestVectorsBegin ||
      std::memcmp(region.data(), kTestVectorMagic.data(), 4) != 0) {
    throw FormatError("test vector block is malformed");
  }
  TestVectorBlock tv;
  const std::uint8_t *p = region.data() + 4;
  auto get = [&p](std::span<std::uint8_t> dst) {
    std::memcpy(dst.data(), p, dst.size());
    p += dst.size();
  };
  get(tv.cbc_key);
  get(tv.cbc_iv);
  get(tv.cbc_input);
  get(tv.cbc_expected);
  get(tv.xts_k1);
  get(tv.xts_k2);
  tv.xts_tweak = read_le64(std::span<const std::uint8_t>(p, 8));
  p += 8;
  get(tv.xts_input);
  get(tv.xts_expected);
  tv.sha_input_len = read_le32(std::span<const std::uint8_t>(p, 4));
  p += 4;
  if (tv.sha_input_len > tv.sha_input.size()) {
    throw FormatError("test vector block: digest input length out of range");
  }
  get(tv.sha_input);
  get(tv.sha224_expected);
  get(tv.sha256_expected);
  get(tv.sha384_expected);
  get(tv.sha512_expected);
  return tv;
}

// --- Firmware trailer -------------------------------------------------------

inline constexpr std::string_view kTrailerMagic = "FWT1";
inline constexpr std::size_t kTrailerSize = 90;
inline constexpr std::size_t kAesRouteSites = 12;
inline constexpr int kMaxAuthFailures = 10;
inline constexpr std::uint64_t kDefaultInitialTweak = 0x1000;

enum class AesRoute : std::uint8_t {
  Software = 0,
  Fpga = 1,
};

struct FirmwareTrailer {
  bool self_test_enforced = true;
  std::array<AesRoute, kAesRouteSites> aes_routing{};
  std::uint64_t initial_tweak = kDefaultInitialTweak;
  std::array<std::uint8_t, 16> salt{};
  std::array<std::uint8_t, 48> password_digest{};
  std::uint8_t attempt_counter = 0;

  friend bool operator==(const FirmwareTrailer &, const FirmwareTrailer &) = default;
};

inline void encode_firmware_trailer(const FirmwareTrailer &tr, std::span<std::uint8_t> out) {
  if (out.size() != kTrailerSize) {
    throw std::invalid_argument("encode_firmware_trailer: need 90 bytes");
  }
  std::memcpy(out.data(), kTrailerMagic.data(), 4);
  out[4] = tr.self_test_enforced ? 1 : 0;
  for (std::size_t i = 0; i < kAesRouteSites; ++i) {
    out[5 + i] = static_cast<std::uint8_t>(tr.aes_routing[i]);
  }
  write_le64(out.subspan(17, 8), tr.initial_tweak);
  std::memcpy(out.data() + 25, tr.salt.data(), 16);
  std::memcpy(out.data() + 41, tr.password_digest.data(), 48);
  out[89] = tr.attempt_counter;
}

inline FirmwareTrailer decode_firmware_trailer(std::span<const std::uint8_t> in) {
  if (in.size() != kTrailerSize || std::memcmp(in.data(), kTrailerMagic.data(), 4) != 0) {
    throw FormatError("firmware trailer is malformed");
  }
  FirmwareTrailer tr;
  if (in[4] > 1) {
    throw FormatError("firmware trailer: bad self-test flag");
  }
  tr.self_test_enforced = in[4] == 1;
  for (std::size_t i = 0; i < kAesRouteSites; ++i) {
    if (in[5 + i] > 1) {
      throw FormatError("firmware trailer: bad routing flag");
    }
    tr.aes_routing[i] = static_cast<AesRoute>(in[5 + i]);
  }
  tr.initial_tweak = read_le64(in.subspan(17, 8));
  std::memcpy(tr.salt.data(), in.data() + 25, 16);
  std::memcpy(tr.password_digest.data(), in.data() + 41, 48);
  tr.attempt_counter = in[89];
  if (tr.attempt_counter > kMaxAuthFailures) {
    throw FormatError("firmware trailer: attempt counter out of range");
  }
  return tr;
}

// Salted, iterated password digest stored in the trailer.
inline std::array<std::uint8_t, 48> hash_password(std::span<const std::uint8_t> salt,
                                                  std::string_view password) {
  std::vector<std::uint8_t> seed(salt.begin(), salt.end());
  seed.insert(seed.end(), password.begin(), password.end());
  std::array<std::uint8_t, 48> digest = sha384(seed);
  for (int i = 1; i < 1000; ++i) {
    digest = sha384(digest);
  }
  return digest;
}

// --- Pair log ----------------------------------------------------------------

inline constexpr std::string_view kPairLogMagic = "PLG1";
inline constexpr std::size_t kPairLogSize = 4 + 8 + 8 + 32 * 32;

struct PairLog {
  SectorNumber sector_number = 0;  // logical sector index of the recorded read
  std::uint64_t initial_tweak = 0;
  std::array<std::pair<Block128, Block128>, kBlocksPerSector> pairs{};  // (plain, cipher)

  friend bool operator==(const PairLog &, const PairLog &) = default;
};

inline void encode_pair_log(const PairLog &log, std::span<std::uint8_t> out) {
  if (out.size() != kPairLogSize) {
    throw std::invalid_argument("encode_pair_log: need 1044 bytes");
  }
  std::memcpy(out.data(), kPairLogMagic.data(), 4);
  write_le64(out.subspan(4, 8), log.sector_number);
  write_le64(out.subspan(12, 8), log.initial_tweak);
  for (std::size_t j = 0; j < kBlocksPerSector; ++j) {
    std::memcpy(out.data() + 20 + 32 * j, log.pairs[j].first.b.data(), 16);
    std::memcpy(out.data() + 20 + 32 * j + 16, log.pairs[j].second.b.data(), 16);
  }
}

inline PairLog decode_pair_log(std::span<const std::uint8_t> in) {
  if (in.size() != kPairLogSize || std::memcmp(in.data(), kPairLogMagic.data(), 4) != 0) {
    throw FormatError("pair log is malformed");
  }
  PairLog log;
  log.sector_number = read_le64(in.subspan(4, 8));
  log.initial_tweak = read_le64(in.subspan(12, 8));
  for (std::size_t j = 0; j < kBlocksPerSector; ++j) {
    log.pairs[j].first = block_from_bytes(in.subspan(20 + 32 * j, 16));
    log.pairs[j].second = block_from_bytes(in.subspan(20 + 32 * j + 16, 16));
  }
  return log;
}

// --- Whole image -------------------------------------------------------------

class FlashImage {
 public:
  FlashImage() : bytes_(regions::kFlashSize, 0xFF) {}

  static FlashImage parse(std::span<const std::uint8_t> data) {
    if (data.size() != regions::kFlashSize) {
      throw FormatError("flash image must be exactly 1 MiB");
    }
    FlashImage img;
    std::copy(data.begin(), data.end(), img.bytes_.begin());
    SecurityHeader hdr = img.security_header();
    if (hdr.header_signature != kHeaderSignature) {
      throw FormatError("flash image: bad security header signature");
    }
    img.firmware_trailer();  // throws FormatError if the trailer is mangled
    return img;
  }

  std::span<const std::uint8_t> bytes() const { return bytes_; }
  std::span<std::uint8_t> mutable_bytes() { return bytes_; }

  std::span<const std::uint8_t> region(std::size_t begin, std::size_t end) const {
    return std::span<const std::uint8_t>(bytes_).subspan(begin, end - begin);
  }
  std::span<std::uint8_t> mutable_region(std::size_t begin, std::size_t end) {
    return std::span<std::uint8_t>(bytes_).subspan(begin, end - begin);
  }

  std::span<const std::uint8_t> arm1() const { return region(regions::kArm1Begin, regions::kArm1End); }
  std::span<const std::uint8_t> arm2() const { return region(regions::kArm2Begin, regions::kArm2End); }
  std::span<const std::uint8_t> bitstream() const {
    return region(regions::kBitstreamBegin, regions::kBitstreamEnd);
  }
  std::span<std::uint8_t> mutable_bitstream() {
    return mutable_region(regions::kBitstreamBegin, regions::kBitstreamEnd);
  }

  SecurityHeader security_header() const {
    return decode_security_header(region(regions::kHeaderBegin, regions::kHeaderEnd));
  }
  void set_security_header(const SecurityHeader &hdr) {
    encode_security_header(hdr, mutable_region(regions::kHeaderBegin, regions::kHeaderEnd));
  }

  TestVectorBlock test_vectors() const {
    return decode_test_vectors(region(regions::kTestVectorsBegin, regions::kTestVectorsEnd));
  }
  void set_test_vectors(const TestVectorBlock &tv) {
    encode_test_vectors(tv, mutable_region(regions::kTestVectorsBegin, regions::kTestVectorsEnd));
  }

  FirmwareTrailer firmware_trailer() const {
    return decode_firmware_trailer(region(regions::kArm2End - kTrailerSize, regions::kArm2End));
  }
  void set_firmware_trailer(const FirmwareTrailer &tr) {
    encode_firmware_trailer(tr, mutable_region(regions::kArm2End - kTrailerSize, regions::kArm2End));
  }

  std::array<std::uint8_t, 48> compute_firmware_hash() const { return sha384(arm2()); }

  // Rewrites the stored firmware hash to match the current arm2 contents.
  void refresh_firmware_hash() {
    SecurityHeader hdr = security_header();
    hdr.firmware_hash = compute_firmware_hash();
    set_security_header(hdr);
  }

  bool has_pair_log() const {
    return std::memcmp(bytes_.data() + regions::kPairLogOffset, kPairLogMagic.data(), 4) == 0;
  }

  std::optional<PairLog> pair_log() const {
    if (!has_pair_log()) {
      return std::nullopt;
    }
    return decode_pair_log(region(regions::kPairLogOffset, regions::kPairLogOffset + kPairLogSize));
  }

  void write_pair_log(const PairLog &log) {
    if (has_pair_log()) {
      throw std::logic_error("write_pair_log: log already present");
    }
    encode_pair_log(log,
                    mutable_region(regions::kPairLogOffset, regions::kPairLogOffset + kPairLogSize));
  }

 private:
  std::vector<std::uint8_t> bytes_;
};

// --- Provisioning -------------------------------------------------------------

struct ImageConfig {
  std::string password;
  std::uint64_t initial_tweak = kDefaultInitialTweak;
  bool self_test_enforced = true;
  AesRoute routing = AesRoute::Fpga;
};

struct BuiltImage {
  FlashImage image;
  std::vector<TableInstance> table_instances;  // bitstream-relative placement
};

// Assembles a factory-fresh image. Draw order from the engine is fixed
// (salt, arm1 blob, arm2 body, container) so a seed fully determines the
// image bytes.
inline BuiltImage build_image(const ImageConfig &cfg, std::mt19937_64 &rng) {
  BuiltImage out;
  FlashImage &img = out.image;

  FirmwareTrailer tr;
  tr.self_test_enforced = cfg.self_test_enforced;
  tr.aes_routing.fill(cfg.routing);
  tr.initial_tweak = cfg.initial_tweak;
  fill_random(rng, tr.salt);
  tr.password_digest = hash_password(tr.salt, cfg.password);
  tr.attempt_counter = 0;

  fill_random(rng, img.mutable_region(regions::kArm1Begin, regions::kArm1End));
  fill_random(rng, img.mutable_region(regions::kArm2Begin, regions::kArm2End - kTrailerSize));
  img.set_firmware_trailer(tr);

  img.set_test_vectors(factory_test_vectors());

  BuiltContainer container = build_container(rng);
  std::copy(container.bytes.begin(), container.bytes.end(),
            img.mutable_bitstream().begin());
  out.table_instances = std::move(container.instances);

  SecurityHeader hdr;
  hdr.header_signature = kHeaderSignature;
  std::memcpy(hdr.fpga_signature.data(), kFpgaSignature.data(), kFpgaSignature.size());
  hdr.bitstream_length = static_cast<std::uint32_t>(kBitstreamRegionSize);
  hdr.firmware_hash = img.compute_firmware_hash();
  img.set_security_header(hdr);
  return out;
}

// --- Image verification --------------------------------------------------------

struct VerificationReport {
  struct Entry {
    std::string name;
    bool ok = false;
    std::string detail;
  };
  std::vector<Entry> entries;

  bool all_ok() const {
    for (const auto &e : entries) {
      if (!e.ok) {
        return false;
      }
    }
    return true;
  }
};

inline VerificationReport verify_image(const FlashImage &img) {
  VerificationReport rep;
  SecurityHeader hdr = img.security_header();
  char buf[64];
  std::snprintf(buf, sizeof buf, "0x%08X", hdr.header_signature);
  rep.entries.push_back(
      {"header_signature", hdr.header_signature == kHeaderSignature, std::string(buf)});
  std::snprintf(buf, sizeof buf, "0x%X", hdr.bitstream_length);
  rep.entries.push_back(
      {"bitstream_length", hdr.bitstream_length == kBitstreamRegionSize, std::string(buf)});
  bool hash_ok = hdr.firmware_hash == img.compute_firmware_hash();
  rep.entries.push_back({"firmware_hash", hash_ok, hash_ok ? "matches arm2" : "stale or tampered"});
  return rep;
}

// --- SD card dump ---------------------------------------------------------------

using SdCardStore = std::map<SectorNumber, Sector>;

// Raw concatenation of 512-byte sectors in ascending order starting at
// sector 0; unwritten sectors in the middle serialize as zeros.
inline std::vector<std::uint8_t> serialize_sd_dump(const SdCardStore &store) {
  if (store.empty()) {
    return {};
  }
  SectorNumber last = store.rbegin()->first;
  std::vector<std::uint8_t> out((last + 1) * kSectorSize, 0);
  for (const auto &[n, sector] : store) {
    std::copy(sector.begin(), sector.end(), out.begin() + static_cast<std::ptrdiff_t>(n * kSectorSize));
  }
  return out;
}

inline SdCardStore parse_sd_dump(std::span<const std::uint8_t> data) {
  if (data.size() % kSectorSize != 0) {
    throw FormatError("SD dump must be a multiple of 512 bytes");
  }
  SdCardStore store;
  for (std::size_t n = 0; n < data.size() / kSectorSize; ++n) {
    store[n] = to_sector(data.subspan(n * kSectorSize, kSectorSize));
  }
  return store;
}

}  // namespace interdict
