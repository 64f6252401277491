#pragma once

#include <stdexcept>
#include <string>

namespace mkg {

// Base of every error raised by the library. `kind()` is a stable tag used by
// the CLI and the tests ("SingularSymbol", "ConeResonance", ...).
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

struct SingularSymbol : Error {
    explicit SingularSymbol(const std::string& w) : Error("SingularSymbol", w) {}
};

struct ConeResonance : Error {
    ConeResonance(const std::string& w, double tau, double xi_norm)
        : Error("ConeResonance", w), tau(tau), xi_norm(xi_norm) {}
    double tau;
    double xi_norm;
};

struct ParallelFrequency : Error {
    explicit ParallelFrequency(const std::string& w) : Error("ParallelFrequency", w) {}
};

struct CflViolation : Error {
    explicit CflViolation(const std::string& w) : Error("CflViolation", w) {}
};

struct NonzeroMean : Error {
    explicit NonzeroMean(const std::string& w) : Error("NonzeroMean", w) {}
};

struct GridMismatch : Error {
    explicit GridMismatch(const std::string& w) : Error("GridMismatch", w) {}
};

struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& w) : Error("InvalidArgument", w) {}
};

struct LocalizationError : Error {
    explicit LocalizationError(const std::string& w) : Error("LocalizationError", w) {}
};

}  // namespace mkg
