#pragma once

#include <stdexcept>
#include <string>

namespace sgpr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SGPR_DEFINE_ERROR(Name)            \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

// chol
SGPR_DEFINE_ERROR(NotFactorizable);
SGPR_DEFINE_ERROR(AsymmetricInput);
SGPR_DEFINE_ERROR(IndexOutOfRange);
SGPR_DEFINE_ERROR(NotPositiveDefinite);

// kernels
SGPR_DEFINE_ERROR(DimensionMismatch);
SGPR_DEFINE_ERROR(InvalidHyperparameter);
SGPR_DEFINE_ERROR(QuadratureTooCoarse);

// svgp
SGPR_DEFINE_ERROR(DuplicateInducingPoint);
SGPR_DEFINE_ERROR(NoConvergence);
SGPR_DEFINE_ERROR(DenseLimitExceeded);
SGPR_DEFINE_ERROR(NegativeVariance);
SGPR_DEFINE_ERROR(NumericalInconsistency);

// inducing
SGPR_DEFINE_ERROR(MTooLarge);
SGPR_DEFINE_ERROR(DegenerateKernel);
SGPR_DEFINE_ERROR(EnumerationTooLarge);
SGPR_DEFINE_ERROR(EigenFailure);
SGPR_DEFINE_ERROR(InvalidEpsilon);

// bounds
SGPR_DEFINE_ERROR(InvalidConfidence);
SGPR_DEFINE_ERROR(OrderingViolation);
SGPR_DEFINE_ERROR(OrderTooSmall);

// harness
SGPR_DEFINE_ERROR(IoError);
SGPR_DEFINE_ERROR(ConfigError);

#undef SGPR_DEFINE_ERROR

}  // namespace sgpr
