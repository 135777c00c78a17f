#pragma once

#include <string>
#include <string_view>

namespace evchain {

// Lowercase hex SHA-256 digest. Used to key replay fixtures by prompt and
// to pin the shipped prompt templates.
std::string sha256_hex(std::string_view data);

} // namespace evchain
