#ifndef PLFT_ERROR_HPP
#define PLFT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace plft {

/// Bad input data: malformed files, out-of-range indices, key collisions.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A call whose arguments violate the operation's preconditions.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace plft

#endif  // PLFT_ERROR_HPP
