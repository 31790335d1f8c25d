#pragma once

// Working-precision selection. Scattering and root finding are templated on a
// real scalar type; everything downstream of the resonance search runs in
// double. Extended precision uses Boost.Multiprecision binary floats.

#include <complex>
#include <limits>
#include <string>
#include <type_traits>

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_complex.hpp>

#include "reslab/errors.hpp"

namespace reslab {

namespace bmp = boost::multiprecision;

using Real50 = bmp::cpp_bin_float_50;
using Complex50 = bmp::cpp_complex_50;
using Real100 = bmp::cpp_bin_float_100;
using Complex100 = bmp::cpp_complex_100;

// Storage type for roots that must survive a round trip through any tier.
using WideReal = Real100;
using WideComplex = Complex100;

template <class Real>
struct ComplexOf;
template <>
struct ComplexOf<double> {
  using type = std::complex<double>;
};
template <>
struct ComplexOf<Real50> {
  using type = Complex50;
};
template <>
struct ComplexOf<Real100> {
  using type = Complex100;
};

template <class Real>
using complex_t = typename ComplexOf<Real>::type;

template <class Real>
inline constexpr int digits_of = std::numeric_limits<Real>::digits10;

// Requested decimal digits; the tier actually used is the smallest one that
// provides at least this many.
struct Precision {
  int digits = 15;

  static Precision standard() { return {15}; }
  static Precision extended(int digits) { return {digits}; }
  bool is_extended() const { return digits > digits_of<double>; }
  int tier_digits() const;
};

inline constexpr int kMaxSupportedDigits = 100;

inline int Precision::tier_digits() const {
  if (digits <= digits_of<double>) return digits_of<double>;
  if (digits <= 50) return 50;
  if (digits <= kMaxSupportedDigits) return kMaxSupportedDigits;
  throw PrecisionExhausted("precision", digits, "requested precision exceeds the widest tier");
}

template <class T>
struct Tag {
  using type = T;
};

// Calls f(Tag<Real>{}) for the tier selected by p.
template <class F>
decltype(auto) dispatch(Precision p, F&& f) {
  switch (p.tier_digits()) {
    case 50: return f(Tag<Real50>{});
    case kMaxSupportedDigits: return f(Tag<Real100>{});
    default: return f(Tag<double>{});
  }
}

template <class Real>
Real from_string(const std::string& s) {
  if constexpr (std::is_same_v<Real, double>) {
    return std::stod(s);
  } else {
    return Real(s);
  }
}

template <class To, class From>
To convert_real(const From& x) {
  if constexpr (std::is_same_v<To, From>) {
    return x;
  } else if constexpr (std::is_same_v<To, double>) {
    return static_cast<double>(x);
  } else {
    return To(x);
  }
}

template <class ToReal, class FromComplex>
complex_t<ToReal> convert_complex(const FromComplex& z) {
  using std::imag;
  using std::real;
  return complex_t<ToReal>(convert_real<ToReal>(real(z)), convert_real<ToReal>(imag(z)));
}

template <class Real>
bool is_finite(const complex_t<Real>& z) {
  using std::imag;
  using std::isfinite;
  using std::real;
  if constexpr (std::is_same_v<Real, double>) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
  } else {
    return (bmp::isfinite)(real(z)) && (bmp::isfinite)(imag(z));
  }
}

template <class Real>
Real pi_v() {
  if constexpr (std::is_same_v<Real, double>) {
    return 3.14159265358979323846;
  } else {
    return boost::math::constants::pi<Real>();
  }
}

}  // namespace reslab
