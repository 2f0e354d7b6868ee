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

#include "hwloop/sim/bit_vector.hpp"

#include <algorithm>
#include <stdexcept>

namespace hwloop::sim {

namespace {

uint64_t top_mask(uint32_t width) {
  uint32_t rem = width % 64;
  return rem == 0 ? ~uint64_t{0} : ((uint64_t{1} << rem) - 1);
}

BitVector all_x(uint32_t width) { return BitVector(width, Bit::X); }

// Logical left shift of a word array by n bits, keeping words.size() words.
void shl_words(std::vector<uint64_t>& w, uint64_t n) {
  const size_t count = w.size();
  if (n >= count * 64) {
    std::fill(w.begin(), w.end(), 0);
    return;
  }
  const size_t ws = n / 64;
  const uint32_t bs = n % 64;
  for (size_t i = count; i-- > 0;) {
    uint64_t v = 0;
    if (i >= ws) {
      v = w[i - ws] << bs;
      if (bs != 0 && i >= ws + 1) v |= w[i - ws - 1] >> (64 - bs);
    }
    w[i] = v;
  }
}

void shr_words(std::vector<uint64_t>& w, uint64_t n) {
  const size_t count = w.size();
  if (n >= count * 64) {
    std::fill(w.begin(), w.end(), 0);
    return;
  }
  const size_t ws = n / 64;
  const uint32_t bs = n % 64;
  for (size_t i = 0; i < count; ++i) {
    uint64_t v = 0;
    if (i + ws < count) {
      v = w[i + ws] >> bs;
      if (bs != 0 && i + ws + 1 < count) v |= w[i + ws + 1] << (64 - bs);
    }
    w[i] = v;
  }
}

// Unsigned long division on known vectors of equal width.
void udivmod(const BitVector& n, const BitVector& d, BitVector& q,
             BitVector& r) {
  const uint32_t w = n.width();
  q = BitVector(w, Bit::Zero);
  r = BitVector(w, Bit::Zero);
  for (uint32_t i = w; i-- > 0;) {
    shl_words(r.aval(), 1);
    r.aval()[0] |= (n.aval()[i / 64] >> (i % 64)) & 1;
    r.normalize();
    if (less_than(r, d, false) != Bit::One) {
      r = sub(r, d);
      q.aval()[i / 64] |= uint64_t{1} << (i % 64);
    }
  }
}

bool is_negative(const BitVector& v) { return v.msb() == Bit::One; }

BitVector abs_value(const BitVector& v) {
  return is_negative(v) ? negate(v) : v;
}

}  // namespace

char bit_char(Bit b) {
  switch (b) {
    case Bit::Zero: return '0';
    case Bit::One: return '1';
    case Bit::Z: return 'z';
    case Bit::X: return 'x';
  }
  return 'x';
}

BitVector::BitVector(uint32_t width, Bit fill)
    : width_(width == 0 ? 1 : width),
      a_(word_count(width_), (static_cast<uint8_t>(fill) & 1) ? ~uint64_t{0} : 0),
      b_(word_count(width_), (static_cast<uint8_t>(fill) & 2) ? ~uint64_t{0} : 0) {
  normalize();
}

BitVector BitVector::from_uint(uint32_t width, uint64_t value) {
  BitVector v(width, Bit::Zero);
  v.a_[0] = value;
  v.normalize();
  return v;
}

BitVector BitVector::from_int(uint32_t width, int64_t value) {
  BitVector v(width, Bit::Zero);
  for (auto& word : v.a_) word = value < 0 ? ~uint64_t{0} : 0;
  v.a_[0] = static_cast<uint64_t>(value);
  v.normalize();
  return v;
}

BitVector BitVector::from_bits(std::string_view bits) {
  BitVector v(static_cast<uint32_t>(bits.size()), Bit::Zero);
  const uint32_t w = v.width();
  for (uint32_t i = 0; i < bits.size(); ++i) {
    char c = bits[bits.size() - 1 - i];
    Bit b = Bit::X;
    if (c == '0') b = Bit::Zero;
    else if (c == '1') b = Bit::One;
    else if (c == 'z' || c == 'Z' || c == '?') b = Bit::Z;
    if (i < w) v.set(i, b);
  }
  return v;
}

BitVector BitVector::from_string(std::string_view text) {
  if (text.empty()) return BitVector(8, Bit::Zero);
  BitVector v(static_cast<uint32_t>(text.size() * 8), Bit::Zero);
  for (size_t i = 0; i < text.size(); ++i) {
    uint8_t c = static_cast<uint8_t>(text[text.size() - 1 - i]);
    v.set_slice(static_cast<int64_t>(i * 8), from_uint(8, c));
  }
  return v;
}

Bit BitVector::get(uint32_t i) const {
  if (i >= width_) return Bit::X;
  uint64_t a = (a_[i / 64] >> (i % 64)) & 1;
  uint64_t b = (b_[i / 64] >> (i % 64)) & 1;
  return static_cast<Bit>(a | (b << 1));
}

void BitVector::set(uint32_t i, Bit b) {
  if (i >= width_) return;
  uint64_t m = uint64_t{1} << (i % 64);
  auto bits = static_cast<uint8_t>(b);
  if (bits & 1) a_[i / 64] |= m; else a_[i / 64] &= ~m;
  if (bits & 2) b_[i / 64] |= m; else b_[i / 64] &= ~m;
}

void BitVector::normalize() {
  a_.back() &= top_mask(width_);
  b_.back() &= top_mask(width_);
}

bool BitVector::is_known() const {
  return std::all_of(b_.begin(), b_.end(), [](uint64_t w) { return w == 0; });
}

bool BitVector::has_z() const {
  for (size_t i = 0; i < b_.size(); ++i)
    if (b_[i] & ~a_[i]) return true;
  return false;
}

bool BitVector::all_x() const {
  for (size_t i = 0; i < b_.size(); ++i) {
    uint64_t m = i + 1 == b_.size() ? top_mask(width_) : ~uint64_t{0};
    if ((a_[i] & b_[i]) != m) return false;
  }
  return true;
}

bool BitVector::all_z() const {
  for (size_t i = 0; i < b_.size(); ++i) {
    uint64_t m = i + 1 == b_.size() ? top_mask(width_) : ~uint64_t{0};
    if ((~a_[i] & b_[i] & m) != m) return false;
  }
  return true;
}

bool BitVector::is_zero() const {
  for (size_t i = 0; i < a_.size(); ++i)
    if (a_[i] != 0 || b_[i] != 0) return false;
  return true;
}

uint64_t BitVector::to_uint64() const { return a_[0] & ~b_[0]; }

int64_t BitVector::to_int64() const {
  uint64_t v = to_uint64();
  if (width_ < 64 && get(width_ - 1) == Bit::One) v |= ~uint64_t{0} << width_;
  return static_cast<int64_t>(v);
}

bool BitVector::fits_uint64() const {
  for (size_t i = 1; i < a_.size(); ++i)
    if (a_[i] & ~b_[i]) return false;
  return true;
}

BitVector BitVector::resized(uint32_t width, bool sign_extend) const {
  if (width == 0) width = 1;
  BitVector out(width, Bit::Zero);
  const size_t n = std::min(out.a_.size(), a_.size());
  std::copy_n(a_.begin(), n, out.a_.begin());
  std::copy_n(b_.begin(), n, out.b_.begin());
  out.normalize();
  if (width > width_) {
    Bit top = get(width_ - 1);
    // Unknown bits are extended regardless of signedness.
    if (top == Bit::X || top == Bit::Z || (sign_extend && top == Bit::One)) {
      for (uint32_t i = width_; i < width; ++i) out.set(i, top);
    }
  }
  return out;
}

BitVector BitVector::slice(int64_t lo, uint32_t width) const {
  BitVector out(width, Bit::X);
  if (lo >= 0 && lo % 64 == 0 && lo + width <= width_) {
    size_t off = static_cast<size_t>(lo / 64);
    for (size_t i = 0; i < out.a_.size(); ++i) {
      out.a_[i] = a_[off + i];
      out.b_[i] = b_[off + i];
    }
    out.normalize();
    return out;
  }
  for (uint32_t i = 0; i < width; ++i) {
    int64_t src = lo + i;
    if (src >= 0 && src < static_cast<int64_t>(width_))
      out.set(i, get(static_cast<uint32_t>(src)));
  }
  return out;
}

void BitVector::set_slice(int64_t lo, const BitVector& value) {
  if (lo == 0 && value.width_ == width_) {
    a_ = value.a_;
    b_ = value.b_;
    return;
  }
  for (uint32_t i = 0; i < value.width(); ++i) {
    int64_t dst = lo + i;
    if (dst >= 0 && dst < static_cast<int64_t>(width_))
      set(static_cast<uint32_t>(dst), value.get(i));
  }
}

std::string BitVector::to_bit_string() const {
  std::string s(width_, '0');
  for (uint32_t i = 0; i < width_; ++i) s[width_ - 1 - i] = bit_char(get(i));
  return s;
}

std::string BitVector::to_text() const {
  std::string out;
  uint32_t bytes = (width_ + 7) / 8;
  for (uint32_t i = bytes; i-- > 0;) {
    uint64_t c = slice(static_cast<int64_t>(i) * 8, 8).to_uint64();
    if (c == 0 && out.empty()) continue;
    out.push_back(static_cast<char>(c));
  }
  return out;
}

bool BitVector::operator==(const BitVector& other) const {
  return width_ == other.width_ && a_ == other.a_ && b_ == other.b_;
}

BitVector bit_and(const BitVector& l, const BitVector& r) {
  BitVector out(l.width(), Bit::Zero);
  for (size_t i = 0; i < out.aval().size(); ++i) {
    uint64_t la = l.aval()[i], lb = l.bval()[i], ra = r.aval()[i], rb = r.bval()[i];
    uint64_t zero = (~la & ~lb) | (~ra & ~rb);
    uint64_t one = (la & ~lb) & (ra & ~rb);
    uint64_t unk = ~(zero | one);
    out.aval()[i] = one | unk;
    out.bval()[i] = unk;
  }
  out.normalize();
  return out;
}

BitVector bit_or(const BitVector& l, const BitVector& r) {
  BitVector out(l.width(), Bit::Zero);
  for (size_t i = 0; i < out.aval().size(); ++i) {
    uint64_t la = l.aval()[i], lb = l.bval()[i], ra = r.aval()[i], rb = r.bval()[i];
    uint64_t one = (la & ~lb) | (ra & ~rb);
    uint64_t zero = (~la & ~lb) & (~ra & ~rb);
    uint64_t unk = ~(zero | one);
    out.aval()[i] = one | unk;
    out.bval()[i] = unk;
  }
  out.normalize();
  return out;
}

BitVector bit_xor(const BitVector& l, const BitVector& r) {
  BitVector out(l.width(), Bit::Zero);
  for (size_t i = 0; i < out.aval().size(); ++i) {
    uint64_t unk = l.bval()[i] | r.bval()[i];
    out.aval()[i] = (l.aval()[i] ^ r.aval()[i]) | unk;
    out.bval()[i] = unk;
  }
  out.normalize();
  return out;
}

BitVector bit_xnor(const BitVector& l, const BitVector& r) {
  return bit_not(bit_xor(l, r));
}

BitVector bit_not(const BitVector& v) {
  BitVector out(v.width(), Bit::Zero);
  for (size_t i = 0; i < out.aval().size(); ++i) {
    uint64_t unk = v.bval()[i];
    out.aval()[i] = ~v.aval()[i] | unk;
    out.bval()[i] = unk;
  }
  out.normalize();
  return out;
}

Bit bit_not(Bit b) {
  if (b == Bit::Zero) return Bit::One;
  if (b == Bit::One) return Bit::Zero;
  return Bit::X;
}

Bit bit_and(Bit l, Bit r) {
  if (l == Bit::Zero || r == Bit::Zero) return Bit::Zero;
  if (l == Bit::One && r == Bit::One) return Bit::One;
  return Bit::X;
}

Bit bit_or(Bit l, Bit r) {
  if (l == Bit::One || r == Bit::One) return Bit::One;
  if (l == Bit::Zero && r == Bit::Zero) return Bit::Zero;
  return Bit::X;
}

BitVector add(const BitVector& l, const BitVector& r) {
  if (!l.is_known() || !r.is_known()) return all_x(l.width());
  BitVector out(l.width(), Bit::Zero);
  unsigned __int128 carry = 0;
  for (size_t i = 0; i < out.aval().size(); ++i) {
    unsigned __int128 s = static_cast<unsigned __int128>(l.aval()[i]) + r.aval()[i] + carry;
    out.aval()[i] = static_cast<uint64_t>(s);
    carry = s >> 64;
  }
  out.normalize();
  return out;
}

BitVector negate(const BitVector& v) {
  if (!v.is_known()) return all_x(v.width());
  return add(bit_not(v), BitVector::from_uint(v.width(), 1));
}

BitVector sub(const BitVector& l, const BitVector& r) {
  if (!l.is_known() || !r.is_known()) return all_x(l.width());
  return add(l, negate(r));
}

BitVector mul(const BitVector& l, const BitVector& r) {
  if (!l.is_known() || !r.is_known()) return all_x(l.width());
  const size_t n = l.aval().size();
  BitVector out(l.width(), Bit::Zero);
  for (size_t i = 0; i < n; ++i) {
    unsigned __int128 carry = 0;
    for (size_t j = 0; i + j < n; ++j) {
      unsigned __int128 p = static_cast<unsigned __int128>(l.aval()[i]) * r.aval()[j] +
                            out.aval()[i + j] + carry;
      out.aval()[i + j] = static_cast<uint64_t>(p);
      carry = p >> 64;
    }
  }
  out.normalize();
  return out;
}

BitVector div(const BitVector& l, const BitVector& r, bool is_signed) {
  const uint32_t w = l.width();
  if (!l.is_known() || !r.is_known() || r.is_zero()) return all_x(w);
  if (w <= 64) {
    if (is_signed) {
      int64_t a = l.to_int64(), b = r.to_int64();
      if (b == -1) return negate(l);
      return BitVector::from_int(w, a / b);
    }
    return BitVector::from_uint(w, l.to_uint64() / r.to_uint64());
  }
  BitVector q, rem;
  if (is_signed) {
    bool neg = is_negative(l) != is_negative(r);
    udivmod(abs_value(l), abs_value(r), q, rem);
    return neg ? negate(q) : q;
  }
  udivmod(l, r, q, rem);
  return q;
}

BitVector mod(const BitVector& l, const BitVector& r, bool is_signed) {
  const uint32_t w = l.width();
  if (!l.is_known() || !r.is_known() || r.is_zero()) return all_x(w);
  if (w <= 64) {
    if (is_signed) {
      int64_t a = l.to_int64(), b = r.to_int64();
      if (b == -1) return BitVector(w, Bit::Zero);
      return BitVector::from_int(w, a % b);
    }
    return BitVector::from_uint(w, l.to_uint64() % r.to_uint64());
  }
  BitVector q, rem;
  if (is_signed) {
    udivmod(abs_value(l), abs_value(r), q, rem);
    return is_negative(l) ? negate(rem) : rem;
  }
  udivmod(l, r, q, rem);
  return rem;
}

BitVector power(const BitVector& base, const BitVector& exp, bool base_signed,
                bool exp_signed) {
  const uint32_t w = base.width();
  if (!base.is_known() || !exp.is_known()) return all_x(w);
  if (exp_signed && is_negative(exp)) {
    // Negative exponent: 1 for base 1, alternating for -1, x for 0, else 0.
    if (base.is_zero()) return all_x(w);
    if (base == BitVector::from_uint(w, 1)) return base;
    if (base_signed && base == BitVector::from_int(w, -1)) {
      return (exp.get(0) == Bit::One) ? base : BitVector::from_uint(w, 1);
    }
    return BitVector(w, Bit::Zero);
  }
  BitVector result = BitVector::from_uint(w, 1);
  BitVector b = base;
  BitVector e = exp;
  for (uint32_t i = 0; i < e.width(); ++i) {
    if (e.get(i) == Bit::One) result = mul(result, b);
    b = mul(b, b);
  }
  return result;
}

BitVector shift_left(const BitVector& v, const BitVector& amount) {
  if (!amount.is_known()) return all_x(v.width());
  uint64_t n = amount.fits_uint64() ? amount.to_uint64() : ~uint64_t{0};
  BitVector out = v;
  shl_words(out.aval(), n);
  shl_words(out.bval(), n);
  out.normalize();
  return out;
}

BitVector shift_right(const BitVector& v, const BitVector& amount,
                      bool arithmetic) {
  if (!amount.is_known()) return all_x(v.width());
  uint64_t n = amount.fits_uint64() ? amount.to_uint64() : ~uint64_t{0};
  BitVector out = v;
  shr_words(out.aval(), n);
  shr_words(out.bval(), n);
  out.normalize();
  Bit top = v.msb();
  if (arithmetic && top != Bit::Zero) {
    uint64_t fill_from = n >= v.width() ? 0 : v.width() - n;
    for (uint64_t i = fill_from; i < v.width(); ++i)
      out.set(static_cast<uint32_t>(i), top);
  }
  return out;
}

Bit logic_eq(const BitVector& l, const BitVector& r) {
  bool unknown = false;
  for (size_t i = 0; i < l.aval().size(); ++i) {
    uint64_t known = ~(l.bval()[i] | r.bval()[i]);
    if ((l.aval()[i] ^ r.aval()[i]) & known) return Bit::Zero;
    if (~known & (i + 1 == l.aval().size() ? top_mask(l.width()) : ~uint64_t{0}))
      unknown = true;
  }
  return unknown ? Bit::X : Bit::One;
}

bool case_eq(const BitVector& l, const BitVector& r) {
  return l.aval() == r.aval() && l.bval() == r.bval();
}

Bit less_than(const BitVector& l, const BitVector& r, bool is_signed) {
  if (!l.is_known() || !r.is_known()) return Bit::X;
  if (is_signed) {
    bool ln = is_negative(l), rn = is_negative(r);
    if (ln != rn) return ln ? Bit::One : Bit::Zero;
  }
  for (size_t i = l.aval().size(); i-- > 0;) {
    if (l.aval()[i] != r.aval()[i])
      return l.aval()[i] < r.aval()[i] ? Bit::One : Bit::Zero;
  }
  return Bit::Zero;
}

Bit reduce_and(const BitVector& v) {
  Bit acc = Bit::One;
  for (uint32_t i = 0; i < v.width(); ++i) {
    acc = bit_and(acc, v.get(i));
    if (acc == Bit::Zero) return acc;
  }
  return acc;
}

Bit reduce_or(const BitVector& v) {
  Bit acc = Bit::Zero;
  for (uint32_t i = 0; i < v.width(); ++i) {
    acc = bit_or(acc, v.get(i));
    if (acc == Bit::One) return acc;
  }
  return acc;
}

Bit reduce_xor(const BitVector& v) {
  if (!v.is_known()) return Bit::X;
  uint64_t parity = 0;
  for (uint64_t w : v.aval()) parity ^= static_cast<uint64_t>(__builtin_parityll(w));
  return parity ? Bit::One : Bit::Zero;
}

Bit truth(const BitVector& v) {
  bool unknown = false;
  for (size_t i = 0; i < v.aval().size(); ++i) {
    if (v.aval()[i] & ~v.bval()[i]) return Bit::One;
    if (v.bval()[i]) unknown = true;
  }
  return unknown ? Bit::X : Bit::Zero;
}

BitVector merge_unknown(const BitVector& l, const BitVector& r) {
  BitVector out(l.width(), Bit::Zero);
  for (size_t i = 0; i < out.aval().size(); ++i) {
    uint64_t differ = (l.aval()[i] ^ r.aval()[i]) | (l.bval()[i] ^ r.bval()[i]);
    uint64_t unk = differ | (l.bval()[i] & r.bval()[i]);
    out.aval()[i] = (l.aval()[i] & ~differ) | unk;
    out.bval()[i] = unk;
  }
  out.normalize();
  return out;
}

BitVector concat(const std::vector<BitVector>& parts) {
  uint64_t total = 0;
  for (const auto& p : parts) total += p.width();
  if (total == 0) return BitVector(1, Bit::Zero);
  if (total > (uint64_t{1} << 24)) throw std::length_error("concatenation too wide");
  BitVector out(static_cast<uint32_t>(total), Bit::Zero);
  int64_t pos = 0;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    out.set_slice(pos, *it);
    pos += it->width();
  }
  return out;
}

}  // namespace hwloop::sim
