#pragma once

#include <string>
#include <string_view>

namespace hilgen {

std::string sha256_hex(std::string_view data);
std::string sha256_hex_file(const std::string& path);

}  // namespace hilgen
