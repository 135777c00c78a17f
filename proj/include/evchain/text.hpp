#pragma once

#include <string>
#include <vector>

namespace evchain {

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Shortest representation that parses back to the same double, with a
// trailing ".0" when integral. Matches the JSON serializer's float output
// so every artifact renders numbers the same way.
std::string format_double(double value);

std::vector<std::string> split(const std::string& s, char sep);
std::string to_lower(const std::string& s);
std::string trim(const std::string& s);
bool starts_with(const std::string& s, const std::string& prefix);
bool ends_with(const std::string& s, const std::string& suffix);

// Replaces every character outside [A-Za-z0-9] with '_' and strips
// leading/trailing underscores; used to derive object ids from topic names.
std::string sanitize_identifier(const std::string& s);

} // namespace evchain
