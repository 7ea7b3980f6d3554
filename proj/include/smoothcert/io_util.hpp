#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace smoothcert {

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

std::uint64_t fnv1a64(std::string_view bytes);

std::string read_text_file(const std::string& path);  // throws IoError

// FNV-1a 64 of the file contents as 16 hex digits.
std::string file_checksum_hex(const std::string& path);

}  // namespace smoothcert
