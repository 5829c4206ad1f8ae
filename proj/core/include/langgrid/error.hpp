#pragma once

#include <stdexcept>
#include <string>

namespace langgrid {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (off-grid position, bad size).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration values or combinations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Episode generation could not satisfy the vocabulary or layout constraints.
class GenerationError : public Error {
 public:
  using Error::Error;
};

/// Stepping a finished episode, or a joint action of the wrong shape.
class EpisodeError : public Error {
 public:
  using Error::Error;
};

/// Malformed corpus, transcript or checkpoint input.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace langgrid
