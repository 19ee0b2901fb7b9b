#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace qunits {

// Lowercase alphanumeric tokens; any other byte is a separator. Bytes >= 0x80
// are kept as token characters so UTF-8 input passes through unmangled.
std::vector<std::string> tokenize(std::string_view text);

std::string to_lower(std::string_view text);

std::string join_tokens(const std::vector<std::string>& tokens, char sep = ' ');

std::vector<std::string> split_lines(std::string_view text);

// Case-insensitive equality for ASCII.
bool iequals(std::string_view a, std::string_view b);

}  // namespace qunits
