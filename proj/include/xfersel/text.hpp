#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace xfersel {

/// Fixed-point with `decimals` digits, '.' separator, independent of locale.
std::string format_fixed(double value, int decimals = 6);

/// Splits a CSV line on commas (no quoting), trimming trailing '\r'.
std::vector<std::string> split_csv_line(std::string_view line);

/// Locale-independent double parse of the whole string. Throws invalid_argument.
double parse_double(std::string_view text);

}  // namespace xfersel
