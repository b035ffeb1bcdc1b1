#include "xfersel/text.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include "xfersel/error.hpp"

namespace xfersel {

std::string format_fixed(double value, int decimals) {
  if (value == 0.0) value = 0.0;  // drop negative zero
  std::array<char, 128> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                 std::chars_format::fixed, decimals);
  if (ec != std::errc{}) return std::isnan(value) ? "nan" : "inf";
  std::string out(buf.data(), end);
  // "-0.000000" after rounding a tiny negative.
  if (out.front() == '-' && out.find_first_not_of("-0.") == std::string::npos) out.erase(0, 1);
  return out;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    fields.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '+')) text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw error(error_code::invalid_argument, "not a number: '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace xfersel
