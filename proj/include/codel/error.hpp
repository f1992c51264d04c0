#pragma once

#include <stdexcept>
#include <string>

namespace codel {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter lies outside its documented domain (bad cutoff, k out of range, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Not enough samples, beats or intervals to compute the requested quantity.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Vector or matrix dimensions disagree with the declared topology.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A caller violated an operation's precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file or configuration.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace codel
