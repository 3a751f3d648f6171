#pragma once

#include <stdexcept>
#include <string>

namespace concurpaas {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// ---- engine ----
class HorizonExceeded : public Error {
  public:
    using Error::Error;
};

// ---- service registry ----
class InvalidEndpoint : public Error {
  public:
    using Error::Error;
};
class NotRegistered : public Error {
  public:
    using Error::Error;
};
class NotFound : public Error {
  public:
    using Error::Error;
};

// ---- container network fabric ----
class AlreadyAllocated : public Error {
  public:
    using Error::Error;
};

// ---- elastic runtime ----
class DuplicateApp : public Error {
  public:
    using Error::Error;
};
class UnknownBehavior : public Error {
  public:
    using Error::Error;
};
class UnknownApp : public Error {
  public:
    using Error::Error;
};
class AtCapacity : public Error {
  public:
    using Error::Error;
};

// ---- device layer ----
class DuplicateSensor : public Error {
  public:
    using Error::Error;
};
class PortInUse : public Error {
  public:
    using Error::Error;
};
class UnknownSensor : public Error {
  public:
    using Error::Error;
};
class InvalidParam : public Error {
  public:
    using Error::Error;
};

// ---- fire application ----
class IncompleteScenario : public Error {
  public:
    using Error::Error;
};

// ---- scenario harness ----
class ParseError : public Error {
  public:
    using Error::Error;
};
class ValidationError : public Error {
  public:
    using Error::Error;
};

} // namespace concurpaas
