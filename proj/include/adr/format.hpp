#pragma once

#include <string>
#include <string_view>

namespace adr {

/// Nine significant digits, the precision used for every emitted number.
std::string format_number(double v);

/// Strict full-field parse; returns false on trailing garbage or overflow.
bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, long long& out);

}  // namespace adr
