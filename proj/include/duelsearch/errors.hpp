#pragma once

#include <stdexcept>
#include <string>

namespace duelsearch {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define DUELSEARCH_ERROR(Name)            \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  };

// preference matrices
DUELSEARCH_ERROR(DimensionError)
DUELSEARCH_ERROR(SkewViolation)
DUELSEARCH_ERROR(DiagonalViolation)
DUELSEARCH_ERROR(RangeViolation)

// sampling and queries
DUELSEARCH_ERROR(SameArmError)
DUELSEARCH_ERROR(EvenXError)
DUELSEARCH_ERROR(SubsetError)

// heuristics
DUELSEARCH_ERROR(NonPositiveEntry)
DUELSEARCH_ERROR(NoCondorcetWinner)

// numerical analysis
DUELSEARCH_ERROR(DomainError)
DUELSEARCH_ERROR(PreconditionViolation)
DUELSEARCH_ERROR(SingularSystem)
DUELSEARCH_ERROR(ResourceLimit)
DUELSEARCH_ERROR(UtilityOrderError)

// harness
DUELSEARCH_ERROR(ConfigError)
DUELSEARCH_ERROR(IoError)

#undef DUELSEARCH_ERROR

}  // namespace duelsearch
