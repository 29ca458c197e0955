#ifndef VCGP_ERROR_HPP_
#define VCGP_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace vcgp {

/// Bad input: wrong dimensions, out-of-domain hyperparameters, malformed trees.
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A factorization or iterative solve failed after all recovery attempts.
class NumericalFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input files or configuration.
class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string &message) {
  if (!condition) {
    throw InvalidArgument(message);
  }
}

} // namespace detail

} // namespace vcgp

#endif
