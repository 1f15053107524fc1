#pragma once

#include <span>
#include <string>
#include <string_view>

namespace coretemp {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::string& path);

/// Appends doubles in hexfloat form, so the digest is exact in the bits.
void append_doubles(std::string& buf, std::span<const double> values);

}  // namespace coretemp
