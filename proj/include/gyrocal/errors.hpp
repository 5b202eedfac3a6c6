#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gyrocal {

// Coarse failure classes; the CLI maps them onto process exit codes.
enum class ErrorClass {
  Usage = 2,
  Data = 3,
  Numerical = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), class_(cls) {}
  ErrorClass error_class() const noexcept { return class_; }

 private:
  ErrorClass class_;
};

#define GYROCAL_DEFINE_ERROR(Name, Cls)                                        \
  class Name : public Error {                                                 \
   public:                                                                    \
    explicit Name(const std::string& what) : Error(ErrorClass::Cls, what) {}  \
  };

GYROCAL_DEFINE_ERROR(InvalidParameterError, Usage)
GYROCAL_DEFINE_ERROR(ConfigError, Usage)
GYROCAL_DEFINE_ERROR(DimensionError, Data)
GYROCAL_DEFINE_ERROR(InsufficientDataError, Data)
GYROCAL_DEFINE_ERROR(FormatError, Data)
GYROCAL_DEFINE_ERROR(PartitionError, Data)
GYROCAL_DEFINE_ERROR(SplitError, Data)
GYROCAL_DEFINE_ERROR(IoError, Data)
GYROCAL_DEFINE_ERROR(StateError, Data)
GYROCAL_DEFINE_ERROR(DivisionError, Numerical)
GYROCAL_DEFINE_ERROR(NumericalError, Numerical)

#undef GYROCAL_DEFINE_ERROR

// Thrown when fewer than the requested parameters are identifiable. Carries the
// names of the unobservable ones so callers can still report the rest.
class RankDeficientError : public Error {
 public:
  RankDeficientError(const std::string& what, std::vector<std::string> unobservable)
      : Error(ErrorClass::Numerical, what), unobservable_(std::move(unobservable)) {}
  const std::vector<std::string>& unobservable() const noexcept { return unobservable_; }

 private:
  std::vector<std::string> unobservable_;
};

int exit_code(const Error& e) noexcept;

}  // namespace gyrocal
