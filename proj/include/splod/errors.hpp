#pragma once

#include <stdexcept>
#include <string>

namespace splod {

/// Invalid arguments (bad element ids, incompatible mesh levels, ...).
class ArgumentError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure (solver did not converge, singular system, ...).
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Operation requires state that has not been built yet.
class StateError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// A resource guard tripped (mesh level too large, ...).
class ResourceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file.
class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Input file parsed but violates an invariant.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace splod
