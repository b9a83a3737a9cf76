#pragma once

#include <stdexcept>
#include <string>

namespace qgeom {

// Base class for all library failures. `code()` is a stable machine-readable
// tag used by the CLI to map failures onto exit codes and report fields.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define QGEOM_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                    \
    public:                                                        \
        explicit Name(const std::string& message)                  \
            : Error(#Name, message) {}                             \
    }

QGEOM_DEFINE_ERROR(OutOfDomain);
QGEOM_DEFINE_ERROR(NonFinite);
QGEOM_DEFINE_ERROR(VanishingOverlap);
QGEOM_DEFINE_ERROR(StencilTooWide);
QGEOM_DEFINE_ERROR(IncompleteMomentSet);
QGEOM_DEFINE_ERROR(EngineMismatch);
QGEOM_DEFINE_ERROR(NonRealConnection);
QGEOM_DEFINE_ERROR(IdentityViolation);
QGEOM_DEFINE_ERROR(SingularMetric);
QGEOM_DEFINE_ERROR(NoiseDominated);
QGEOM_DEFINE_ERROR(TruncationInsufficient);
QGEOM_DEFINE_ERROR(UnsupportedSeries);
QGEOM_DEFINE_ERROR(DecompositionResidual);
QGEOM_DEFINE_ERROR(NonOrthonormalBasis);
QGEOM_DEFINE_ERROR(OpenPath);
QGEOM_DEFINE_ERROR(UndersampledLoop);
QGEOM_DEFINE_ERROR(StepSizeTooLarge);
QGEOM_DEFINE_ERROR(DimensionMismatch);
QGEOM_DEFINE_ERROR(InvalidConfig);

#undef QGEOM_DEFINE_ERROR

}  // namespace qgeom
