#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fdsi {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

using cdouble = std::complex<double>;
using cvector = std::vector<cdouble>;

/// Error category carried by every toolkit exception; the CLI maps these to
/// machine-parsable stderr output and exit codes.
enum class ErrorCategory { config, io, numeric, usage };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const { return category_; }

    const char* category_name() const {
        switch (category_) {
            case ErrorCategory::config: return "config";
            case ErrorCategory::io: return "io";
            case ErrorCategory::numeric: return "numeric";
            case ErrorCategory::usage: return "usage";
        }
        return "unknown";
    }

private:
    ErrorCategory category_;
};

inline double power_db(double power) {
    // Levels in dB re 1 (toolkit units). Zero power clamps to a deep floor
    // so report tables stay finite.
    if (power <= 0.0) return -400.0;
    return 10.0 * std::log10(power);
}

inline double amplitude_db(double amplitude) { return power_db(amplitude * amplitude); }

inline double rms(const std::vector<double>& x) {
    if (x.empty()) return 0.0;
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return std::sqrt(acc / static_cast<double>(x.size()));
}

inline double mean(const std::vector<double>& x) {
    if (x.empty()) return 0.0;
    double acc = 0.0;
    for (double v : x) acc += v;
    return acc / static_cast<double>(x.size());
}

}  // namespace fdsi
