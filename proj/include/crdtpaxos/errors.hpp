#pragma once

#include <stdexcept>

namespace crdtpaxos {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Two lattice values of incompatible shape (length or CRDT kind).
class ShapeError : public Error {
 public:
  using Error::Error;
};

// An update or query command that does not fit the state it is applied to.
class CommandError : public Error {
 public:
  using Error::Error;
};

// API misuse, e.g. initializing an acceptor twice.
class UsageError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Truncated, overlong, or otherwise malformed wire frame or serialized value.
class FrameError : public Error {
 public:
  using Error::Error;
};

// Input the checker cannot work with (uninstrumented history, size bound).
class UnsupportedInput : public Error {
 public:
  using Error::Error;
};

class ConnectionError : public Error {
 public:
  using Error::Error;
};

}  // namespace crdtpaxos
