// Copyright interdict contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// SHA-224/256/384/512 one-shot functions (FIPS 180-4). The firmware image
// format and the device self-tests depend on all four, and the library has to
// stay dependency-free, so they are implemented here directly.

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>

namespace interdict {

namespace detail {

inline constexpr std::array<std::uint32_t, 64> kSha256K = {
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
    0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
    0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
    0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
    0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
    0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
    0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
    0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
    0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
    0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
    0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2,
};

inline constexpr std::array<std::uint64_t, 80> kSha512K = {
    0x428a2f98d728ae22, 0x7137449123ef65cd, 0xb5c0fbcfec4d3b2f, 0xe9b5dba58189dbbc,
    0x3956c25bf348b538, 0x59f111f1b605d019, 0x923f82a4af194f9b, 0xab1c5ed5da6d8118,
    0xd807aa98a3030242, 0x12835b0145706fbe, 0x243185be4ee4b28c, 0x550c7dc3d5ffb4e2,
    0x72be5d74f27b896f, 0x80deb1fe3b1696b1, 0x9bdc06a725c71235, 0xc19bf174cf692694,
    0xe49b69c19ef14ad2, 0xefbe4786384f25e3, 0x0fc19dc68b8cd5b5, 0x240ca1cc77ac9c65,
    0x2de92c6f592b0275, 0x4a7484aa6ea6e483, 0x5cb0a9dcbd41fbd4, 0x76f988da831153b5,
    0x983e5152ee66dfab, 0xa831c66d2db43210, 0xb00327c898fb213f, 0xbf597fc7beef0ee4,
    0xc6e00bf33da88fc2, 0xd5a79147930aa725, 0x06ca6351e003826f, 0x142929670a0e6e70,
    0x27b70a8546d22ffc, 0x2e1b21385c26c926, 0x4d2c6dfc5ac42aed, 0x53380d139d95b3df,
    0x650a73548baf63de, 0x766a0abb3c77b2a8, 0x81c2c92e47edaee6, 0x92722c851482353b,
    0xa2bfe8a14cf10364, 0xa81a664bbc423001, 0xc24b8b70d0f89791, 0xc76c51a30654be30,
    0xd192e819d6ef5218, 0xd69906245565a910, 0xf40e35855771202a, 0x106aa07032bbd1b8,
    0x19a4c116b8d2d0c8, 0x1e376c085141ab53, 0x2748774cdf8eeb99, 0x34b0bcb5e19b48a8,
    0x391c0cb3c5c95a63, 0x4ed8aa4ae3418acb, 0x5b9cca4f7763e373, 0x682e6ff3d6b2b8a3,
    0x748f82ee5defb2fc, 0x78a5636f43172f60, 0x84c87814a1f0ab72, 0x8cc702081a6439ec,
    0x90befffa23631e28, 0xa4506cebde82bde9, 0xbef9a3f7b2c67915, 0xc67178f2e372532b,
    0xca273eceea26619c, 0xd186b8c721c0c207, 0xeada7dd6cde0eb1e, 0xf57d4f7fee6ed178,
    0x06f067aa72176fba, 0x0a637dc5a2c898a6, 0x113f9804bef90dae, 0x1b710b35131c471b,
    0x28db77f523047d84, 0x32caab7b40c72493, 0x3c9ebe0a15c9bebc, 0x431d67c49c100d4c,
    0x4cc5d4becb3e42b6, 0x597f299cfc657e2a, 0x5fcb6fab3ad6faec, 0x6c44198c4a475817,
};

template <typename Word>
struct Sha2Params;

template <>
struct Sha2Params<std::uint32_t> {
  static constexpr std::size_t kBlockBytes = 64;
  static constexpr std::size_t kRounds = 64;
  static constexpr int kS0[3] = {7, 18, 3};
  static constexpr int kS1[3] = {17, 19, 10};
  static constexpr int kB0[3] = {2, 13, 22};
  static constexpr int kB1[3] = {6, 11, 25};
  static constexpr const std::array<std::uint32_t, 64> &k() { return kSha256K; }
};

template <>
struct Sha2Params<std::uint64_t> {
  static constexpr std::size_t kBlockBytes = 128;
  static constexpr std::size_t kRounds = 80;
  static constexpr int kS0[3] = {1, 8, 7};
  static constexpr int kS1[3] = {19, 61, 6};
  static constexpr int kB0[3] = {28, 34, 39};
  static constexpr int kB1[3] = {14, 18, 41};
  static constexpr const std::array<std::uint64_t, 80> &k() { return kSha512K; }
};

template <typename Word>
inline void sha2_compress(std::array<Word, 8> &h, const std::uint8_t *block) {
  using P = Sha2Params<Word>;
  constexpr int kWordBytes = sizeof(Word);
  std::array<Word, P::kRounds> w{};
  for (std::size_t i = 0; i < 16; ++i) {
    Word v = 0;
    for (int k = 0; k < kWordBytes; ++k) {
      v = v << 8 | block[i * kWordBytes + static_cast<std::size_t>(k)];
    }
    w[i] = v;
  }
  for (std::size_t i = 16; i < P::kRounds; ++i) {
    Word s0 = std::rotr(w[i - 15], P::kS0[0]) ^ std::rotr(w[i - 15], P::kS0[1]) ^ (w[i - 15] >> P::kS0[2]);
    Word s1 = std::rotr(w[i - 2], P::kS1[0]) ^ std::rotr(w[i - 2], P::kS1[1]) ^ (w[i - 2] >> P::kS1[2]);
    w[i] = w[i - 16] + s0 + w[i - 7] + s1;
  }
  Word a = h[0], b = h[1], c = h[2], d = h[3], e = h[4], f = h[5], g = h[6], hh = h[7];
  for (std::size_t i = 0; i < P::kRounds; ++i) {
    Word big1 = std::rotr(e, P::kB1[0]) ^ std::rotr(e, P::kB1[1]) ^ std::rotr(e, P::kB1[2]);
    Word ch = (e & f) ^ (~e & g);
    Word t1 = hh + big1 + ch + P::k()[i] + w[i];
    Word big0 = std::rotr(a, P::kB0[0]) ^ std::rotr(a, P::kB0[1]) ^ std::rotr(a, P::kB0[2]);
    Word maj = (a & b) ^ (a & c) ^ (b & c);
    Word t2 = big0 + maj;
    hh = g;
    g = f;
    f = e;
    e = d + t1;
    d = c;
    c = b;
    b = a;
    a = t1 + t2;
  }
  h[0] += a;
  h[1] += b;
  h[2] += c;
  h[3] += d;
  h[4] += e;
  h[5] += f;
  h[6] += g;
  h[7] += hh;
}

template <typename Word, std::size_t DigestBytes>
inline std::array<std::uint8_t, DigestBytes> sha2_hash(std::span<const std::uint8_t> msg,
                                                       std::array<Word, 8> h) {
  using P = Sha2Params<Word>;
  constexpr std::size_t kBlock = P::kBlockBytes;
  std::size_t full = msg.size() / kBlock;
  for (std::size_t i = 0; i < full; ++i) {
    sha2_compress(h, msg.data() + i * kBlock);
  }
  // Final padding: 0x80, zeros, then the bit length. The length field is
  // two words wide (8 bytes for SHA-256, 16 for SHA-512); only its low 8
  // bytes can be nonzero for spans that fit in memory, but the full field
  // still reserves space when deciding whether a second block is needed.
  std::array<std::uint8_t, 2 * kBlock> tail{};
  std::size_t rem = msg.size() - full * kBlock;
  for (std::size_t i = 0; i < rem; ++i) {
    tail[i] = msg[full * kBlock + i];
  }
  tail[rem] = 0x80;
  std::size_t tail_blocks = (rem + 1 + 2 * sizeof(Word) > kBlock) ? 2 : 1;
  std::uint64_t bit_len = static_cast<std::uint64_t>(msg.size()) * 8;
  for (int i = 0; i < 8; ++i) {
    tail[tail_blocks * kBlock - 1 - static_cast<std::size_t>(i)] =
        static_cast<std::uint8_t>(bit_len >> (8 * i));
  }
  for (std::size_t i = 0; i < tail_blocks; ++i) {
    sha2_compress(h, tail.data() + i * kBlock);
  }
  std::array<std::uint8_t, DigestBytes> out{};
  for (std::size_t i = 0; i < DigestBytes; ++i) {
    Word word = h[i / sizeof(Word)];
    int shift = static_cast<int>((sizeof(Word) - 1 - i % sizeof(Word)) * 8);
    out[i] = static_cast<std::uint8_t>(word >> shift);
  }
  return out;
}

}  // namespace detail

inline std::array<std::uint8_t, 28> sha224(std::span<const std::uint8_t> msg) {
  return detail::sha2_hash<std::uint32_t, 28>(
      msg, {0xc1059ed8, 0x367cd507, 0x3070dd17, 0xf70e5939, 0xffc00b31, 0x68581511, 0x64f98fa7,
            0xbefa4fa4});
}

inline std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> msg) {
  return detail::sha2_hash<std::uint32_t, 32>(
      msg, {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a, 0x510e527f, 0x9b05688c, 0x1f83d9ab,
            0x5be0cd19});
}

inline std::array<std::uint8_t, 48> sha384(std::span<const std::uint8_t> msg) {
  return detail::sha2_hash<std::uint64_t, 48>(
      msg, {0xcbbb9d5dc1059ed8, 0x629a292a367cd507, 0x9159015a3070dd17, 0x152fecd8f70e5939,
            0x67332667ffc00b31, 0x8eb44a8768581511, 0xdb0c2e0d64f98fa7, 0x47b5481dbefa4fa4});
}

inline std::array<std::uint8_t, 64> sha512(std::span<const std::uint8_t> msg) {
  return detail::sha2_hash<std::uint64_t, 64>(
      msg, {0x6a09e667f3bcc908, 0xbb67ae8584caa73b, 0x3c6ef372fe94f82b, 0xa54ff53a5f1d36f1,
            0x510e527fade682d1, 0x9b05688c2b3e6c1f, 0x1f83d9abfb41bd6b, 0x5be0cd19137e2179});
}

}  // namespace interdict
