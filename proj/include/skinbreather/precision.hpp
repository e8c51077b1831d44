#pragma once

#include <boost/multiprecision/eigen.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include <cmath>
#include <limits>
#include <string>
#include <type_traits>

namespace skinbreather {

/// Software float with runtime-selectable significand size (decimal digits).
using Extended = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<0>,
                                               boost::multiprecision::et_off>;

/// Sets the working precision for newly created Extended values and restores
/// the previous setting on scope exit. The setting is process-wide.
class PrecisionGuard {
 public:
  explicit PrecisionGuard(int digits) : previous_(Extended::default_precision()) {
    Extended::default_precision(static_cast<unsigned>(digits));
  }
  ~PrecisionGuard() { Extended::default_precision(previous_); }

  PrecisionGuard(const PrecisionGuard&) = delete;
  PrecisionGuard& operator=(const PrecisionGuard&) = delete;

 private:
  unsigned previous_;
};

template <typename Scalar>
inline constexpr bool is_extended_v = std::is_same_v<Scalar, Extended>;

template <typename Scalar>
double to_double(const Scalar& x) {
  if constexpr (is_extended_v<Scalar>) {
    return x.template convert_to<double>();
  } else {
    return static_cast<double>(x);
  }
}

/// Unit roundoff of Scalar at the current working precision.
template <typename Scalar>
Scalar unit_roundoff() {
  if constexpr (is_extended_v<Scalar>) {
    return std::numeric_limits<Extended>::epsilon();
  } else {
    return std::numeric_limits<Scalar>::epsilon();
  }
}

/// Decimal digits carried by Scalar at the current working precision.
template <typename Scalar>
int working_digits() {
  if constexpr (is_extended_v<Scalar>) {
    return static_cast<int>(Extended::default_precision());
  } else {
    return std::numeric_limits<Scalar>::digits10 + 1;
  }
}

template <typename Scalar>
Scalar ipow(Scalar base, long long exponent) {
  Scalar result(1);
  if (exponent < 0) {
    base = Scalar(1) / base;
    exponent = -exponent;
  }
  while (exponent > 0) {
    if (exponent & 1) result *= base;
    base *= base;
    exponent >>= 1;
  }
  return result;
}

/// Full-precision decimal text; doubles use the shortest round-trip form.
std::string format_scalar(double x);
std::string format_scalar(const Extended& x);

}  // namespace skinbreather
