#pragma once

#include <stdexcept>
#include <string>

namespace trendgap {

/// Raised for any input or precondition violation. The CLI maps it to exit code 2.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace trendgap
