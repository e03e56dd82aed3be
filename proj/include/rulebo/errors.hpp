#pragma once

#include <stdexcept>
#include <string>

namespace rulebo {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define RULEBO_DEFINE_ERROR(Name)        \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  };

// space
RULEBO_DEFINE_ERROR(InvalidSpace)
RULEBO_DEFINE_ERROR(OutOfDomain)
RULEBO_DEFINE_ERROR(UnknownDimension)
RULEBO_DEFINE_ERROR(DuplicateDimension)

// surrogate / acquisition
RULEBO_DEFINE_ERROR(DimensionMismatch)
RULEBO_DEFINE_ERROR(NumericalFailure)
RULEBO_DEFINE_ERROR(InsufficientData)
RULEBO_DEFINE_ERROR(InvalidInput)

// diagnosis / rules
RULEBO_DEFINE_ERROR(EmptyHistory)
RULEBO_DEFINE_ERROR(InsufficientHistory)
RULEBO_DEFINE_ERROR(RuleBindingError)

// controller
RULEBO_DEFINE_ERROR(IncompatibleSpaces)
RULEBO_DEFINE_ERROR(CheckpointCorrupt)
RULEBO_DEFINE_ERROR(UnsupportedVersion)
RULEBO_DEFINE_ERROR(ConfigError)

// trainee
RULEBO_DEFINE_ERROR(TraineeTimeout)
RULEBO_DEFINE_ERROR(ProtocolError)
RULEBO_DEFINE_ERROR(TraineeCrashed)
RULEBO_DEFINE_ERROR(FormatError)

// reporting
RULEBO_DEFINE_ERROR(MissingArtifact)

#undef RULEBO_DEFINE_ERROR

}  // namespace rulebo
