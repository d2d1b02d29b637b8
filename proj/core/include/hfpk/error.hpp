#pragma once

#include <stdexcept>
#include <string>

namespace hfpk {

// Invalid user input: bad config keys, out-of-range parameters, malformed files.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A computation could not produce a trustworthy result.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hfpk
