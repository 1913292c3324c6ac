#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sb {

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

std::vector<std::string> split(std::string_view text, char sep);
std::string trim(std::string_view text);

double parse_double(std::string_view text);
long long parse_int(std::string_view text);

void write_file(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace sb
