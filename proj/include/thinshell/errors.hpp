#pragma once

#include <stdexcept>
#include <string>

namespace thinshell {

/// Base class for all library errors. The CLI maps ConfigError to exit
/// code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define THINSHELL_DEFINE_ERROR(Name)        \
  class Name : public Error {               \
   public:                                  \
    using Error::Error;                     \
  };

THINSHELL_DEFINE_ERROR(PoleSingularity)
THINSHELL_DEFINE_ERROR(ChartOutOfRange)
THINSHELL_DEFINE_ERROR(OutsideReach)
THINSHELL_DEFINE_ERROR(GridMismatch)
THINSHELL_DEFINE_ERROR(SingularResolvent)
THINSHELL_DEFINE_ERROR(NotTangential)
THINSHELL_DEFINE_ERROR(NoConvergence)
THINSHELL_DEFINE_ERROR(NonpositiveWeight)
THINSHELL_DEFINE_ERROR(TooFewRadialNodes)
THINSHELL_DEFINE_ERROR(InvalidEpsilonList)
THINSHELL_DEFINE_ERROR(EigSolverFailure)
THINSHELL_DEFINE_ERROR(LinearSolveFailure)
THINSHELL_DEFINE_ERROR(CFLViolation)
THINSHELL_DEFINE_ERROR(ConfigError)

#undef THINSHELL_DEFINE_ERROR

}  // namespace thinshell
