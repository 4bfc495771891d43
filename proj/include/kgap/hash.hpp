#pragma once

#include <filesystem>
#include <string>

namespace kgap {

std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::filesystem::path& file);

}  // namespace kgap
