#pragma once

#include <string>
#include <string_view>

namespace ssm {

/// Shortest decimal that parses back to the same double. Non-finite values
/// render as "nan", "inf" and "-inf".
std::string format_double(double v);

/// Fixed 17 significant digits.
std::string format_double17(double v);

/// Strict parse of a whole string; throws std::invalid_argument on junk.
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

}  // namespace ssm
