#pragma once

#include <stdexcept>
#include <string>

namespace physio {

// Error categories map onto CLI exit codes:
//   UsageError/ConfigError/CapabilityError -> 2
//   DataError                              -> 3
//   NumericError                           -> 4
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : UsageError {
    explicit ConfigError(const std::string& msg) : UsageError(msg) {}
};

// Request exceeds a configured capability (e.g. sequence length over the
// enumeration limit). The message must name the limit.
struct CapabilityError : UsageError {
    explicit CapabilityError(const std::string& msg) : UsageError(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const NumericError*>(&e)) return 4;
    if (dynamic_cast<const DataError*>(&e)) return 3;
    if (dynamic_cast<const UsageError*>(&e)) return 2;
    return 1;
}

}  // namespace physio
