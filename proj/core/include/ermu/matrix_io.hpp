#pragma once

#include "ermu/types.hpp"

#include <filesystem>

namespace ermu {

/// Flat binary matrix container: three little-endian 8-byte header words
/// (magic "ERMUMAT1", rows, cols) followed by rows*cols row-major float64.
void write_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix(const std::filesystem::path& path);

}  // namespace ermu
