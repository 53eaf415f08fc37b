#pragma once

// Fixed-width unsigned machine words with wrap-around arithmetic and total
// division (x/0 == 0, x%0 == 0). Width is a compile-time constant so the
// same engine can run at production width (256) and at a width small enough
// to brute-force in tests (8).

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <iterator>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace casynth {

template <unsigned Bits>
class word {
  static_assert(Bits >= 8 && Bits <= 512 && Bits % 8 == 0,
                "word width must be a byte multiple in [8, 512]");

  using backing = boost::multiprecision::number<boost::multiprecision::cpp_int_backend<
      Bits, Bits, boost::multiprecision::unsigned_magnitude,
      boost::multiprecision::unchecked, void>>;

 public:
  static constexpr unsigned bits = Bits;

  word() = default;
  word(std::uint64_t v) : v_(v) {}

  static word max_value() {
    word w;
    w.v_ = backing(0);
    --w.v_;  // fixed-width unsigned wraps to all ones
    return w;
  }

  static word pow2(unsigned exp) {
    if (exp >= Bits) return word{0};
    word w{1};
    for (unsigned i = 0; i < exp; ++i) w = w + w;
    return w;
  }

  // Accepts optionally 0x-prefixed hex or plain decimal. Values wider than
  // Bits are reduced mod 2^Bits (matching runtime wrap semantics).
  static word parse(std::string_view text) {
    if (text.empty()) throw std::invalid_argument("empty word literal");
    bool hex = text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X');
    std::string_view digits = hex ? text.substr(2) : text;
    if (digits.empty()) throw std::invalid_argument("empty word literal");
    word w;
    for (char c : digits) {
      unsigned d;
      if (c >= '0' && c <= '9') d = unsigned(c - '0');
      else if (hex && c >= 'a' && c <= 'f') d = unsigned(c - 'a' + 10);
      else if (hex && c >= 'A' && c <= 'F') d = unsigned(c - 'A' + 10);
      else throw std::invalid_argument("bad word literal: " + std::string(text));
      w.v_ = w.v_ * (hex ? 16 : 10) + d;
    }
    return w;
  }

  word operator+(const word& o) const { return make(v_ + o.v_); }
  word operator-(const word& o) const { return make(v_ - o.v_); }
  word operator*(const word& o) const { return make(v_ * o.v_); }
  word operator&(const word& o) const { return make(v_ & o.v_); }
  word operator|(const word& o) const { return make(v_ | o.v_); }

  word udiv(const word& o) const { return o.is_zero() ? word{0} : make(v_ / o.v_); }
  word umod(const word& o) const { return o.is_zero() ? word{0} : make(v_ % o.v_); }

  bool operator==(const word& o) const { return v_ == o.v_; }
  bool operator!=(const word& o) const { return v_ != o.v_; }
  bool operator<(const word& o) const { return v_ < o.v_; }
  bool operator<=(const word& o) const { return v_ <= o.v_; }
  bool operator>(const word& o) const { return v_ > o.v_; }
  bool operator>=(const word& o) const { return v_ >= o.v_; }

  bool is_zero() const { return v_.is_zero(); }

  std::uint64_t low_u64() const {
    backing masked = v_ & backing(~std::uint64_t(0));
    return masked.template convert_to<std::uint64_t>();
  }

  std::string to_hex() const {
    if (v_.is_zero()) return "0x0";
    std::vector<unsigned char> bytes;
    boost::multiprecision::export_bits(v_, std::back_inserter(bytes), 8);
    static const char* digits = "0123456789abcdef";
    std::string out = "0x";
    bool leading = true;
    for (unsigned char b : bytes) {
      unsigned hi = b >> 4, lo = b & 0xf;
      if (!(leading && hi == 0)) { out.push_back(digits[hi]); leading = false; }
      if (!(leading && lo == 0)) { out.push_back(digits[lo]); leading = false; }
    }
    return out;
  }

  std::string to_dec() const { return v_.str(); }

  std::size_t hash() const {
    std::size_t h = 0xcbf29ce484222325ull;
    if (!v_.is_zero()) {
      std::vector<unsigned char> bytes;
      boost::multiprecision::export_bits(v_, std::back_inserter(bytes), 8);
      for (unsigned char b : bytes) h = (h ^ b) * 0x100000001b3ull;
    }
    return h;
  }

 private:
  static word make(backing v) {
    word w;
    w.v_ = std::move(v);
    return w;
  }

  backing v_{0};
};

}  // namespace casynth
