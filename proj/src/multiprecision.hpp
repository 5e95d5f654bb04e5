#pragma once

// Extended-precision scalar for Eigen. Boost's own Eigen glue predates
// Eigen 3.4 (no infinity()/quiet_NaN()), so the traits are spelled out here.

#include <limits>

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <Eigen/Core>

namespace memobs::detail {

using Extended =
    boost::multiprecision::number<boost::multiprecision::cpp_bin_float<100>, boost::multiprecision::et_off>;

inline Extended extended_pi() { return boost::math::constants::pi<Extended>(); }

}  // namespace memobs::detail

namespace Eigen {

template <>
struct NumTraits<memobs::detail::Extended> : GenericNumTraits<memobs::detail::Extended> {
  using Real = memobs::detail::Extended;
  using NonInteger = Real;
  using Literal = Real;
  using Nested = Real;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 10,
    AddCost = 10,
    MulCost = 40
  };
  static Real epsilon() { return std::numeric_limits<Real>::epsilon(); }
  static Real dummy_precision() { return Real(1e-90); }
  static Real highest() { return (std::numeric_limits<Real>::max)(); }
  static Real lowest() { return std::numeric_limits<Real>::lowest(); }
  static Real infinity() { return std::numeric_limits<Real>::infinity(); }
  static Real quiet_NaN() { return std::numeric_limits<Real>::quiet_NaN(); }
  static int digits10() { return std::numeric_limits<Real>::digits10; }
};

}  // namespace Eigen
