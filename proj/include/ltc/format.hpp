#pragma once

#include <string>
#include <string_view>

namespace ltc {

// Shortest decimal that parses back to the same double.
std::string format_double(double value);

// Strict full-string parse; returns false on any trailing garbage.
bool parse_double(std::string_view text, double& out);

// Hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

}  // namespace ltc
