#pragma once

#include <span>
#include <string>
#include <string_view>

namespace desync {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 over the little-endian IEEE-754 encoding of each value, in order.
std::string digest_doubles(std::span<const double> values);

}  // namespace desync
