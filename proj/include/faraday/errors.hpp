#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace faraday {

namespace detail {

/// Short scientific formatting for diagnostics (std::to_string renders
/// SI-scale quantities as 0.000000).
inline std::string format_quantity(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace detail

/// Coarse failure category, also used as the CLI process exit code.
enum class ErrorCategory : int {
    config = 2,
    model = 3,
    numeric = 4,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorCategory cat, const std::string& what)
        : std::runtime_error(what), category_(cat) {}
    ErrorCategory category() const noexcept { return category_; }
    virtual const char* type_name() const noexcept { return "Error"; }

  private:
    ErrorCategory category_;
};

#define FARADAY_DEFINE_ERROR(NAME, CATEGORY)                       \
    class NAME : public Error {                                    \
      public:                                                      \
        explicit NAME(const std::string& what)                     \
            : Error(ErrorCategory::CATEGORY, what) {}              \
        const char* type_name() const noexcept override {          \
            return #NAME;                                          \
        }                                                          \
    }

FARADAY_DEFINE_ERROR(ParseError, model);
FARADAY_DEFINE_ERROR(UnitError, model);
FARADAY_DEFINE_ERROR(HermiticityViolation, model);
FARADAY_DEFINE_ERROR(ShapeError, model);
FARADAY_DEFINE_ERROR(ValidationError, model);
FARADAY_DEFINE_ERROR(ConfigError, config);
FARADAY_DEFINE_ERROR(DegenerateSpectrum, numeric);
FARADAY_DEFINE_ERROR(NearResonance, numeric);
FARADAY_DEFINE_ERROR(StepTooLarge, numeric);
FARADAY_DEFINE_ERROR(EmptyMode1, numeric);
FARADAY_DEFINE_ERROR(ConvergenceFailure, numeric);
FARADAY_DEFINE_ERROR(DimensionError, numeric);

#undef FARADAY_DEFINE_ERROR

/// Non-fatal diagnostics collected along a computation.
enum class WarningCode {
    no_photons,
    near_degenerate_denominator,
    resonance_proximity,
    density_mismatch,
};

struct Warning {
    WarningCode code;
    std::string message;
};

using WarningLog = std::vector<Warning>;

inline void warn(WarningLog* log, WarningCode code, std::string message) {
    if (log) log->push_back({code, std::move(message)});
}

inline const char* warning_code_name(WarningCode code) {
    switch (code) {
        case WarningCode::no_photons: return "no_photons";
        case WarningCode::near_degenerate_denominator: return "near_degenerate_denominator";
        case WarningCode::resonance_proximity: return "resonance_proximity";
        case WarningCode::density_mismatch: return "density_mismatch";
    }
    return "unknown";
}

}  // namespace faraday
