#pragma once

#include <stdexcept>
#include <string>

namespace uois {

// Base for every error raised by the library. Callers that only need a message
// can catch std::runtime_error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input violates a documented precondition (shape mismatch, bad range, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Malformed file: bad header, checksum mismatch, undecodable RLE.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Replay backend has no recording for the requested scene or prompt set.
class FixtureNotFound : public Error {
 public:
  using Error::Error;
};

}  // namespace uois
