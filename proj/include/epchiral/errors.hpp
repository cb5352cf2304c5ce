// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace epchiral {

/// Base class of every failure raised by the numerical modules.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

#define EPCHIRAL_DEFINE_ERROR(Name)                                            \
  class Name : public Error {                                                  \
  public:                                                                      \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {}       \
  }

// pencil-core
EPCHIRAL_DEFINE_ERROR(InvalidArgument);
EPCHIRAL_DEFINE_ERROR(NonSymmetricInput);
EPCHIRAL_DEFINE_ERROR(ConvergenceFailure);
EPCHIRAL_DEFINE_ERROR(DefectivePresent);

// two-level
EPCHIRAL_DEFINE_ERROR(NoFiniteEP);
EPCHIRAL_DEFINE_ERROR(AtExceptionalPoint);

// ep-locator
EPCHIRAL_DEFINE_ERROR(EmptyInterval);
EPCHIRAL_DEFINE_ERROR(NoConvergence);
EPCHIRAL_DEFINE_ERROR(ConvergedToDiabolic);
EPCHIRAL_DEFINE_ERROR(NotABranchPoint);

// loop-monodromy
EPCHIRAL_DEFINE_ERROR(MatchingAmbiguous);
EPCHIRAL_DEFINE_ERROR(SampleThroughEP);
EPCHIRAL_DEFINE_ERROR(NotClosed);
EPCHIRAL_DEFINE_ERROR(PathThroughEP);
EPCHIRAL_DEFINE_ERROR(LoopEnclosure);

// local-reduction
EPCHIRAL_DEFINE_ERROR(NearDefectiveBasis);
EPCHIRAL_DEFINE_ERROR(NonRealEffective);
EPCHIRAL_DEFINE_ERROR(InconsistentChirality);

// file formats
EPCHIRAL_DEFINE_ERROR(ParseError);

#undef EPCHIRAL_DEFINE_ERROR

} // namespace epchiral
