// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace hoopstat {

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

}  // namespace hoopstat
