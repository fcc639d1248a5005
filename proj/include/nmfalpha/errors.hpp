#ifndef NMFALPHA_ERRORS_HPP_
#define NMFALPHA_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace nmfa {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A value lies outside the domain an operation accepts (negative data,
/// non-finite features, asymmetric input to the square root, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An option or hyperparameter is out of range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

/// Classifier training was handed a single class.
class DegenerateLabelError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ChecksumError : public Error {
 public:
  using Error::Error;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

}  // namespace nmfa

#endif  // NMFALPHA_ERRORS_HPP_
