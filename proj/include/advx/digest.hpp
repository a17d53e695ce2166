#pragma once

#include <string>
#include <string_view>

namespace advx {

// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

// First 16 hex digits; used as a short fingerprint in reports.
inline std::string short_digest(std::string_view bytes) { return sha256_hex(bytes).substr(0, 16); }

}  // namespace advx
