#include <charconv>
#include <numeric>

#include "predname/errors.hpp"
#include "predname/judging.hpp"

namespace predname {
namespace {

__extension__ typedef __int128 Wide;

std::int64_t narrow(Wide value) {
  if (value > INT64_MAX || value < INT64_MIN) throw Error("rational arithmetic overflow");
  return static_cast<std::int64_t>(value);
}

Rational reduced(Wide num, Wide den) {
  if (den == 0) throw Error("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  Wide a = num < 0 ? -num : num;
  Wide b = den;
  while (b != 0) {
    Wide t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  return Rational(narrow(num), narrow(den));
}

}  // namespace

Rational::Rational(std::int64_t numerator, std::int64_t denominator) {
  if (denominator == 0) throw Error("rational with zero denominator");
  if (denominator < 0) {
    numerator = -numerator;
    denominator = -denominator;
  }
  const std::int64_t g = std::gcd(numerator, denominator);
  num_ = g > 1 ? numerator / g : numerator;
  den_ = g > 1 ? denominator / g : denominator;
}

Rational Rational::operator+(const Rational& other) const {
  return reduced(Wide(num_) * other.den_ + Wide(other.num_) * den_, Wide(den_) * other.den_);
}

Rational Rational::operator/(std::int64_t divisor) const { return reduced(num_, Wide(den_) * divisor); }

std::strong_ordering Rational::operator<=>(const Rational& other) const {
  const Wide lhs = Wide(num_) * other.den_;
  const Wide rhs = Wide(other.num_) * den_;
  if (lhs < rhs) return std::strong_ordering::less;
  if (lhs > rhs) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

std::string Rational::to_fixed(int places) const {
  Wide scale = 1;
  for (int i = 0; i < places; ++i) scale *= 10;
  const bool negative = num_ < 0;
  const Wide magnitude = negative ? -Wide(num_) : Wide(num_);
  // round(m * scale / den) with halves going up, in integers.
  const Wide scaled = (magnitude * scale * 2 + den_) / (Wide(den_) * 2);
  const Wide whole = scaled / scale;
  Wide frac = scaled % scale;

  std::string digits(static_cast<std::size_t>(places), '0');
  for (int i = places - 1; i >= 0; --i) {
    digits[static_cast<std::size_t>(i)] = static_cast<char>('0' + static_cast<int>(frac % 10));
    frac /= 10;
  }
  std::string out = (negative && scaled != 0 ? "-" : "") + std::to_string(static_cast<long long>(whole));
  if (places > 0) out += "." + digits;
  return out;
}

std::string Rational::to_string() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational Rational::parse(std::string_view text) {
  auto read = [&text](std::string_view part) {
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (ec != std::errc() || ptr != part.data() + part.size()) {
      throw Error("malformed rational '" + std::string(text) + "'");
    }
    return value;
  };
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return Rational(read(text));
  return Rational(read(text.substr(0, slash)), read(text.substr(slash + 1)));
}

}  // namespace predname
