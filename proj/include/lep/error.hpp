#pragma once

#include <stdexcept>
#include <string>

namespace lep {

/// Base of every error thrown by the library. `kind()` is a stable identifier
/// used in structured CLI error output.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what) : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

#define LEP_DEFINE_ERROR(Name)                                                   \
    class Name : public Error {                                                  \
    public:                                                                      \
        explicit Name(const std::string& what) : Error(#Name, what) {}           \
    }

LEP_DEFINE_ERROR(InvalidInput);
LEP_DEFINE_ERROR(NonConvergence);
LEP_DEFINE_ERROR(DimensionTooLarge);
LEP_DEFINE_ERROR(DimensionMismatch);
LEP_DEFINE_ERROR(SingularMatrix);
LEP_DEFINE_ERROR(UnknownModel);
LEP_DEFINE_ERROR(ResolutionTooLarge);
LEP_DEFINE_ERROR(StepTooCoarse);
LEP_DEFINE_ERROR(ProjectionUndefined);
LEP_DEFINE_ERROR(SampleTooCoarse);
LEP_DEFINE_ERROR(GaugeDiscontinuity);
LEP_DEFINE_ERROR(NoIntersections);
LEP_DEFINE_ERROR(IoError);

#undef LEP_DEFINE_ERROR

}  // namespace lep
