// Copyright 2026 The hwloop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hwloop::sim {

// Four-state scalar. The low bit is the "a" plane and the high bit the "b"
// plane, matching the VPI aval/bval encoding.
enum class Bit : uint8_t { Zero = 0, One = 1, Z = 2, X = 3 };

char bit_char(Bit b);

/// Arbitrary-width four-state vector. Bit 0 is the least significant bit.
/// Storage is two bit planes; unused bits of the top word are kept zero.
class BitVector {
 public:
  BitVector() : BitVector(1, Bit::X) {}
  explicit BitVector(uint32_t width, Bit fill = Bit::X);

  static BitVector from_uint(uint32_t width, uint64_t value);
  static BitVector from_int(uint32_t width, int64_t value);
  // Parses a string of 0/1/x/z characters, MSB first.
  static BitVector from_bits(std::string_view bits);
  // Packs a string literal, eight bits per character, last character in the
  // low byte.
  static BitVector from_string(std::string_view text);

  uint32_t width() const { return width_; }
  Bit get(uint32_t i) const;
  void set(uint32_t i, Bit b);
  Bit msb() const { return get(width_ - 1); }

  bool is_known() const;
  bool has_z() const;
  bool all_x() const;
  bool all_z() const;
  bool is_zero() const;  // known and every bit zero

  uint64_t to_uint64() const;   // unknown bits read as zero
  int64_t to_int64() const;     // two's complement over width (up to 64)
  bool fits_uint64() const;     // no known-1 bits above bit 63

  BitVector resized(uint32_t width, bool sign_extend) const;
  // Bits [lo, lo + width). Positions outside the vector read as x.
  BitVector slice(int64_t lo, uint32_t width) const;
  // Writes value into [lo, lo + value.width()), clipping to the vector.
  void set_slice(int64_t lo, const BitVector& value);

  std::string to_bit_string() const;  // MSB first, 0/1/x/z
  // Interprets the vector as packed characters, skipping leading NULs.
  std::string to_text() const;

  bool operator==(const BitVector& other) const;  // exact four-state match
  bool operator!=(const BitVector& other) const { return !(*this == other); }

  const std::vector<uint64_t>& aval() const { return a_; }
  const std::vector<uint64_t>& bval() const { return b_; }
  std::vector<uint64_t>& aval() { return a_; }
  std::vector<uint64_t>& bval() { return b_; }
  void normalize();

 private:
  uint32_t width_;
  std::vector<uint64_t> a_;
  std::vector<uint64_t> b_;
};

inline uint32_t word_count(uint32_t width) { return (width + 63) / 64; }

// Operators. Binary operands must share a width unless stated otherwise;
// callers size operands according to Verilog expression rules first.
BitVector bit_and(const BitVector& l, const BitVector& r);
BitVector bit_or(const BitVector& l, const BitVector& r);
BitVector bit_xor(const BitVector& l, const BitVector& r);
BitVector bit_xnor(const BitVector& l, const BitVector& r);
BitVector bit_not(const BitVector& v);

BitVector add(const BitVector& l, const BitVector& r);
BitVector sub(const BitVector& l, const BitVector& r);
BitVector mul(const BitVector& l, const BitVector& r);
BitVector div(const BitVector& l, const BitVector& r, bool is_signed);
BitVector mod(const BitVector& l, const BitVector& r, bool is_signed);
BitVector power(const BitVector& base, const BitVector& exp, bool base_signed,
                bool exp_signed);
BitVector negate(const BitVector& v);

// Shift amount is self-determined and may have any width.
BitVector shift_left(const BitVector& v, const BitVector& amount);
BitVector shift_right(const BitVector& v, const BitVector& amount,
                      bool arithmetic);

Bit logic_eq(const BitVector& l, const BitVector& r);
bool case_eq(const BitVector& l, const BitVector& r);
Bit less_than(const BitVector& l, const BitVector& r, bool is_signed);

Bit reduce_and(const BitVector& v);
Bit reduce_or(const BitVector& v);
Bit reduce_xor(const BitVector& v);
Bit truth(const BitVector& v);

Bit bit_not(Bit b);
Bit bit_and(Bit l, Bit r);
Bit bit_or(Bit l, Bit r);

// Per-bit merge used by ?: with an unknown condition.
BitVector merge_unknown(const BitVector& l, const BitVector& r);
// Parts are ordered MSB first.
BitVector concat(const std::vector<BitVector>& parts);

}  // namespace hwloop::sim
