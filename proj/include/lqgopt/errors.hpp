#pragma once

#include <stdexcept>
#include <string>

namespace lqgopt {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error { public: using Error::Error; };
class InvalidArgument : public Error { public: using Error::Error; };
class ParseError : public Error { public: using Error::Error; };

class EigenFailure : public Error { public: using Error::Error; };
class LyapSolveFailure : public Error { public: using Error::Error; };
class RiccatiFailure : public Error { public: using Error::Error; };

class UnstableCoefficient : public Error { public: using Error::Error; };
class UnstableClosedLoop : public Error { public: using Error::Error; };
class UnstableControllerState : public Error { public: using Error::Error; };
class UnstableLambda : public Error { public: using Error::Error; };
class SingularTransform : public Error { public: using Error::Error; };
class ReductionFailure : public Error { public: using Error::Error; };

class NotStationary : public Error { public: using Error::Error; };
class ResolventSingular : public Error { public: using Error::Error; };
class FitFailure : public Error { public: using Error::Error; };
class GIsZero : public Error { public: using Error::Error; };
class LambdaInZeroSet : public Error { public: using Error::Error; };
class NonSymmetricLambda : public Error { public: using Error::Error; };

class UnstableIterate : public Error { public: using Error::Error; };
class PerturbationFailed : public Error { public: using Error::Error; };

} // namespace lqgopt
