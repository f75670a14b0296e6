#pragma once

#include <string>
#include <vector>

namespace shuttlesim {

// Shortest decimal representation that round-trips to the same double.
// Used everywhere we emit numbers so reruns are byte-identical.
std::string format_double(double value);

// Parse with full input consumption; throws std::invalid_argument on junk.
double parse_double(const std::string& text);

std::vector<std::string> split(const std::string& text, char sep);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace shuttlesim
