#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace desing {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class OrthonormalityViolation : public Error {
 public:
  using Error::Error;
};

class NegativeSingularValue : public Error {
 public:
  using Error::Error;
};

class NotOnManifold : public Error {
 public:
  using Error::Error;
};

class RankMismatch : public Error {
 public:
  using Error::Error;
};

class OversampleTooLarge : public Error {
 public:
  using Error::Error;
};

// Fixed-rank iterate lost numerical rank.
class RankDropped : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace desing
