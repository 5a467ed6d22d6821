#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace qadaa {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 of a file's bytes; identifies the embedding file an artifact
/// was trained against.
std::string file_sha256(const std::filesystem::path& path);

}  // namespace qadaa
