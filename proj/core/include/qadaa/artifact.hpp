#pragma once

// Versioned binary model artifacts.
//
// Layout (integers little-endian):
//   "ALJP" | u32 format version | u64 header length | header JSON
//   | u64 blob length | tensor blobs (f64, row-major, in header order)
//   | 64-byte lower-case hex SHA-256 of everything before it
//
// Word2vec classical models do not embed the word vectors; the header
// keeps the embedding file's path and content hash instead.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "qadaa/pipeline.hpp"

namespace qadaa::app {

inline constexpr std::string_view kArtifactMagic = "ALJP";
inline constexpr std::uint32_t kArtifactVersion = 1;

struct ArtifactInfo {
  std::uint32_t format_version = kArtifactVersion;
  std::string toolkit_version;
};

struct LoadOptions {
  /// Overrides the embedding path recorded in the artifact. The file's
  /// hash must still match.
  std::filesystem::path embeddings;
  /// Relative embedding paths in the header resolve against this.
  std::filesystem::path base_dir;
};

std::string serialize_artifact(const pipeline::Predictor& predictor);
/// Validates magic, version, length, checksum and tensor shapes before
/// returning. All failures are data errors except a missing embedding file
/// (not_found).
pipeline::Predictor parse_artifact(std::string_view bytes, const LoadOptions& options = {},
                                   ArtifactInfo* info = nullptr);

void save_artifact(const pipeline::Predictor& predictor, const std::filesystem::path& path);
/// `options.base_dir` defaults to the artifact's directory.
pipeline::Predictor load_artifact(const std::filesystem::path& path, LoadOptions options = {},
                                  ArtifactInfo* info = nullptr);

}  // namespace qadaa::app
