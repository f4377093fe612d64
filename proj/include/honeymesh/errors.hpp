#pragma once

#include <stdexcept>
#include <string>

namespace honeymesh {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define HONEYMESH_ERROR(Name)            \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  };

HONEYMESH_ERROR(SchedulingInPast)
HONEYMESH_ERROR(NoRoute)
HONEYMESH_ERROR(InvalidTarget)
HONEYMESH_ERROR(InvalidScenario)
HONEYMESH_ERROR(InsufficientSample)
HONEYMESH_ERROR(ChallengeOutstanding)
HONEYMESH_ERROR(NotOperational)
HONEYMESH_ERROR(ValidationError)
HONEYMESH_ERROR(IoError)
HONEYMESH_ERROR(UnknownAxis)

#undef HONEYMESH_ERROR

/// Config/trace text that failed to parse. Carries the 1-based line when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0) : Error(what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace honeymesh
