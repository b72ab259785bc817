#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pollen {

/// Shortest decimal text that parses back to the same double.
std::string format_number(double value);

/// Strict full-field parse; nullopt for empty, partial or malformed text.
std::optional<double> parse_number(std::string_view text);

std::vector<std::string_view> split_csv_line(std::string_view line);

} // namespace pollen
