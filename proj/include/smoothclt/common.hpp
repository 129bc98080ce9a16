#pragma once

#include <Eigen/Dense>

#include <concepts>
#include <numbers>
#include <stdexcept>
#include <string>

namespace smoothclt {

template <class T>
concept Real = std::floating_point<T>;

using Index = Eigen::Index;

template <Real Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

template <Real Scalar>
inline constexpr Scalar kPi = std::numbers::pi_v<Scalar>;

// log(2*pi)
template <Real Scalar>
inline constexpr Scalar kLog2Pi =
    static_cast<Scalar>(1.837877066409345483560659472811235279722794947275566825634L);

/// Raised when a caller violates an operation's precondition (bad parameters,
/// hypothesis of an inequality not met, malformed pmf, ...).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical routine detects that its own output cannot be
/// trusted (mass drift, negative density, failed cross-check).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw PreconditionError(message);
}

}  // namespace smoothclt
