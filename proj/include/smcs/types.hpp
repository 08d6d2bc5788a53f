#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace smcs {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using PairMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Set of model indices, one flag per model.
using Membership = std::vector<bool>;

inline std::size_t count(const Membership& m) {
  std::size_t n = 0;
  for (bool b : m) n += b ? 1 : 0;
  return n;
}

inline bool is_subset(const Membership& a, const Membership& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] && !b[i]) return false;
  return true;
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A loss difference exceeded its declared bound c/2.
class BoundViolation : public Error {
 public:
  using Error::Error;
};

/// Operation called on a state that cannot support it (e.g. zero rounds).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data.
class IngestError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace smcs
