#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>

#include "bvlab/errors.hpp"

namespace bvlab {

/// Exact dyadic rational num * 2^-exp, kept in lowest terms (num odd or zero).
class Dyadic {
 public:
  constexpr Dyadic() = default;
  constexpr Dyadic(std::int64_t integer) : num_(integer) { normalize(); }  // NOLINT
  constexpr Dyadic(std::int64_t num, int exp) : num_(num), exp_(exp) { normalize(); }

  /// Exact conversion; throws IncompatibleTranslation for doubles that are
  /// not representable (non-finite, or needing more than 62 bits).
  static Dyadic from_double(double v) {
    if (!std::isfinite(v)) fail(ErrorCode::IncompatibleTranslation, "non-finite dyadic value");
    if (v == 0.0) return {};
    int e = 0;
    double m = std::frexp(v, &e);  // v = m * 2^e, 0.5 <= |m| < 1
    // m * 2^53 is an integer for every double.
    auto num = static_cast<std::int64_t>(std::ldexp(m, 53));
    int exp = 53 - e;
    Dyadic d(num, exp);
    if (std::abs(d.exp_) > 60) fail(ErrorCode::IncompatibleTranslation, "dyadic exponent out of range");
    return d;
  }

  constexpr std::int64_t numerator() const { return num_; }
  constexpr int exponent() const { return exp_; }
  double to_double() const { return std::ldexp(static_cast<double>(num_), -exp_); }

  /// Value times 2^k.
  constexpr Dyadic scaled_pow2(int k) const { return Dyadic(num_, exp_ - k); }

  /// value * 2^level as an integer, if exact.
  constexpr std::optional<std::int64_t> grid_index(int level) const {
    if (num_ == 0) return 0;
    int shift = level - exp_;
    if (shift < 0) return std::nullopt;
    if (shift > 62) return std::nullopt;
    return num_ * (std::int64_t{1} << shift);
  }

  friend constexpr Dyadic operator+(Dyadic a, Dyadic b) {
    int e = a.exp_ > b.exp_ ? a.exp_ : b.exp_;
    return Dyadic(a.num_ * pow2(e - a.exp_) + b.num_ * pow2(e - b.exp_), e);
  }
  friend constexpr Dyadic operator-(Dyadic a) { return Dyadic(-a.num_, a.exp_); }
  friend constexpr Dyadic operator-(Dyadic a, Dyadic b) { return a + (-b); }
  friend constexpr Dyadic operator*(Dyadic a, Dyadic b) { return Dyadic(a.num_ * b.num_, a.exp_ + b.exp_); }
  friend constexpr bool operator==(Dyadic a, Dyadic b) = default;
  friend constexpr bool operator<(Dyadic a, Dyadic b) { return (a - b).num_ < 0; }

  std::string to_string() const {
    if (exp_ <= 0) return std::to_string(num_ * pow2(-exp_));
    return std::to_string(num_) + "/2^" + std::to_string(exp_);
  }

 private:
  static constexpr std::int64_t pow2(int k) { return std::int64_t{1} << k; }

  constexpr void normalize() {
    if (num_ == 0) {
      exp_ = 0;
      return;
    }
    while ((num_ & 1) == 0) {
      num_ /= 2;
      --exp_;
    }
  }

  std::int64_t num_ = 0;
  int exp_ = 0;
};

inline Dyadic abs(Dyadic d) { return d < Dyadic{} ? -d : d; }

}  // namespace bvlab
