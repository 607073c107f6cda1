// Copyright interdict contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Closed-form model of AES-256 once the S-box collapses to the identity map.
// Every remaining round operation (ShiftRows, MixColumns, AddRoundKey) is
// linear over GF(2), so the whole cipher factors into
//
//   E(p) = MS(p) ^ Ktilde,    Ktilde = E(0),
//
// where MS applies the fixed ShiftRows/MixColumns ladder of the 14-round
// cipher and Ktilde soaks up the key schedule. That one constant per key is
// all the attack ever needs to learn.

#include <span>
#include <stdexcept>

#include "interdict/aes.hpp"
#include "interdict/block.hpp"

namespace interdict {

struct KTilde {
  Block128 value;

  friend bool operator==(const KTilde &, const KTilde &) = default;
};

// The key-independent linear part: rounds 1..13 each apply ShiftRows then
// MixColumns; round 14 applies ShiftRows only.
inline Block128 ms_forward(const Block128 &in) {
  Block128 st = in;
  for (int round = 1; round <= 13; ++round) {
    detail::shift_rows(st);
    detail::mix_columns(st);
  }
  detail::shift_rows(st);
  return st;
}

inline Block128 ms_inverse(const Block128 &in) {
  Block128 st = in;
  detail::inv_shift_rows(st);
  for (int round = 13; round >= 1; --round) {
    detail::inv_mix_columns(st);
    detail::inv_shift_rows(st);
  }
  return st;
}

inline KTilde derive_k_tilde_from_key(std::span<const std::uint8_t> key) {
  KeySchedule ks = expand_key(key, identity_sbox());
  return KTilde{encrypt_block(Block128{}, ks, identity_sbox())};
}

// With one known plaintext/ciphertext pair under the weakened cipher,
// Ktilde = c ^ MS(p).
inline KTilde derive_k_tilde_from_pair(const Block128 &plain, const Block128 &cipher) {
  return KTilde{cipher ^ ms_forward(plain)};
}

inline Block128 linear_encrypt(const Block128 &plain, const KTilde &kt) {
  return ms_forward(plain) ^ kt.value;
}

inline Block128 linear_decrypt(const Block128 &cipher, const KTilde &kt) {
  return ms_inverse(cipher ^ kt.value);
}

}  // namespace interdict
