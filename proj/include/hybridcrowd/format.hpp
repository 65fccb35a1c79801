#pragma once

#include <string>

namespace hybridcrowd {

/// Shortest decimal text that round-trips to the same double.
std::string format_real(double value);

/// Fixed-point text with `decimals` digits; NaN prints as "nan". Negative
/// zero prints without its sign so emitted reports stay byte-stable.
std::string format_fixed(double value, int decimals = 6);

/// Rounds to `decimals` decimal places (half away from zero).
double round_to(double value, int decimals = 6);

}  // namespace hybridcrowd
