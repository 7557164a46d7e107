#include "trendgap/format.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace trendgap {

std::string format_number(double value) {
    if (!std::isfinite(value)) {
        throw std::invalid_argument("cannot format non-finite value");
    }
    if (value == 0.0) value = 0.0; // drop the sign of -0
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) {
        throw std::runtime_error("number formatting failed");
    }
    return std::string(buf, end);
}

} // namespace trendgap
