#include "bitbit/bitstring.hpp"

#include <algorithm>
#include <cmath>

#include "bitbit/error.hpp"

namespace bitbit {

namespace {

std::size_t word_count(std::size_t width) { return (width + 63) / 64; }

int hex_value(char ch) {
  if (ch >= '0' && ch <= '9') return ch - '0';
  if (ch >= 'a' && ch <= 'f') return ch - 'a' + 10;
  if (ch >= 'A' && ch <= 'F') return ch - 'A' + 10;
  return -1;
}

}  // namespace

Bitstring::Bitstring(std::size_t width) : width_(width), words_(word_count(width), 0) {}

Bitstring Bitstring::from_uint(std::uint64_t value, std::size_t width) {
  Bitstring b(width);
  if (width < 64 && (value >> width) != 0) {
    throw DataError("value does not fit in " + std::to_string(width) + " bits");
  }
  if (width > 0) b.words_[0] = value;
  return b;
}

Bitstring Bitstring::from_string(std::string_view bits) {
  Bitstring b(bits.size());
  for (std::size_t k = 0; k < bits.size(); ++k) {
    const char ch = bits[k];
    if (ch != '0' && ch != '1') throw DataError("invalid bit character in '" + std::string(bits) + "'");
    b.set(bits.size() - 1 - k, ch == '1');
  }
  return b;
}

Bitstring Bitstring::from_hex(std::string_view hex, std::size_t width) {
  const std::size_t digits = (width + 3) / 4;
  if (hex.size() != digits) {
    throw DataError("expected " + std::to_string(digits) + " hex digits for width " +
                    std::to_string(width) + ", found " + std::to_string(hex.size()));
  }
  Bitstring b(width);
  for (std::size_t k = 0; k < digits; ++k) {
    const int v = hex_value(hex[k]);
    if (v < 0) throw DataError("invalid hex digit in '" + std::string(hex) + "'");
    const std::size_t nibble = digits - 1 - k;  // nibble index from the least significant end
    for (std::size_t bit = 0; bit < 4; ++bit) {
      if ((v >> bit) & 1) {
        const std::size_t pos = nibble * 4 + bit;
        if (pos >= width) throw DataError("hex value exceeds width " + std::to_string(width));
        b.set(pos, true);
      }
    }
  }
  return b;
}

void Bitstring::set(std::size_t i, bool value) {
  const std::uint64_t mask = std::uint64_t{1} << (i % 64);
  if (value) {
    words_[i / 64] |= mask;
  } else {
    words_[i / 64] &= ~mask;
  }
}

std::uint64_t Bitstring::to_uint() const {
  if (width_ > 64) throw DataError("bitstring wider than 64 bits");
  return words_.empty() ? 0 : words_[0];
}

std::string Bitstring::to_string() const {
  std::string out(width_, '0');
  for (std::size_t i = 0; i < width_; ++i) {
    if (get(i)) out[width_ - 1 - i] = '1';
  }
  return out;
}

std::string Bitstring::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  const std::size_t digits = (width_ + 3) / 4;
  std::string out(digits, '0');
  for (std::size_t nibble = 0; nibble < digits; ++nibble) {
    const std::size_t pos = nibble * 4;
    const unsigned v = static_cast<unsigned>((words_[pos / 64] >> (pos % 64)) & 0xF);
    out[digits - 1 - nibble] = kDigits[v];
  }
  return out;
}

std::strong_ordering Bitstring::operator<=>(const Bitstring& other) const {
  if (auto c = width_ <=> other.width_; c != 0) return c;
  for (std::size_t w = words_.size(); w > 0; --w) {
    if (auto c = words_[w - 1] <=> other.words_[w - 1]; c != 0) return c;
  }
  return std::strong_ordering::equal;
}

std::size_t Bitstring::hash() const {
  // splitmix64 finalizer folded over the words
  std::uint64_t h = 0x9E3779B97F4A7C15ull ^ width_;
  for (std::uint64_t w : words_) {
    std::uint64_t x = w + h + 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    h = x ^ (x >> 31);
  }
  return static_cast<std::size_t>(h);
}

void BitstringWriter::append_uint(std::uint64_t value, std::size_t count) {
  if (count > remaining_) throw DataError("bitstring writer overflow");
  for (std::size_t k = count; k > 0; --k) {
    const bool bit = k - 1 < 64 && ((value >> (k - 1)) & 1u);
    bits_.set(--remaining_, bit);
  }
}

void BitstringWriter::append_fraction(double x, std::size_t count) {
  if (count > remaining_) throw DataError("bitstring writer overflow");
  if (!(x > 0.0)) x = 0.0;  // also maps NaN to 0
  if (x >= 1.0) {
    for (std::size_t k = 0; k < count; ++k) bits_.set(--remaining_, true);
    return;
  }
  // Doubling and subtracting one are exact in binary floating point, so this
  // yields exactly the leading binary digits of x.
  for (std::size_t k = 0; k < count; ++k) {
    x *= 2.0;
    const bool bit = x >= 1.0;
    if (bit) x -= 1.0;
    bits_.set(--remaining_, bit);
  }
}

Bitstring BitstringWriter::finish() {
  if (remaining_ != 0) throw DataError("bitstring writer not filled");
  return std::move(bits_);
}

}  // namespace bitbit
