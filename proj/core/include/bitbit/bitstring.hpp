#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace bitbit {

// A fixed-width unsigned binary number. Bit i carries weight 2^i and lives in
// word i / 64; bits at positions >= width are always zero. The textual forms
// (to_string, to_hex) print the most significant bit first.
class Bitstring {
 public:
  Bitstring() = default;
  explicit Bitstring(std::size_t width);

  static Bitstring from_uint(std::uint64_t value, std::size_t width);
  // "0101..." with the most significant bit first; the width is the length.
  static Bitstring from_string(std::string_view bits);
  // Most-significant-nibble-first hex, exactly ceil(width / 4) digits.
  static Bitstring from_hex(std::string_view hex, std::size_t width);

  std::size_t width() const { return width_; }
  bool get(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1u; }
  void set(std::size_t i, bool value);

  // Value as an integer; width must be <= 64.
  std::uint64_t to_uint() const;
  std::string to_string() const;
  std::string to_hex() const;

  const std::vector<std::uint64_t>& words() const { return words_; }

  bool operator==(const Bitstring&) const = default;
  // Orders by width, then numerically.
  std::strong_ordering operator<=>(const Bitstring& other) const;

  std::size_t hash() const;

 private:
  std::size_t width_ = 0;
  std::vector<std::uint64_t> words_;
};

// Fills a bitstring from its most significant end, one field at a time.
class BitstringWriter {
 public:
  explicit BitstringWriter(std::size_t width) : bits_(width), remaining_(width) {}

  // Appends the low `count` bits of `value`, most significant of them first.
  void append_uint(std::uint64_t value, std::size_t count);

  // Appends the first `count` binary digits of x in [0, 1], i.e. the code
  // floor(x * 2^count) clamped to 2^count - 1, for any count.
  void append_fraction(double x, std::size_t count);

  std::size_t remaining() const { return remaining_; }
  Bitstring finish();

 private:
  Bitstring bits_;
  std::size_t remaining_;
};

}  // namespace bitbit

template <>
struct std::hash<bitbit::Bitstring> {
  std::size_t operator()(const bitbit::Bitstring& b) const noexcept { return b.hash(); }
};
