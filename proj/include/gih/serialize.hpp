#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "gih/matrix.hpp"

namespace gih {

// CSV: one row per line, comma-separated, '.' decimal point, %.17g so values
// round-trip exactly.
void save_matrix_csv(const Matrix& m, const std::filesystem::path& path);
Matrix load_matrix_csv(const std::filesystem::path& path);

// Raw binary, little-endian: u64 rows, u64 cols, then row-major f64.
void save_matrix_bin(const Matrix& m, const std::filesystem::path& path);
Matrix load_matrix_bin(const std::filesystem::path& path);

std::string format_double(double v);  // %.17g

// FNV-1a 64-bit content hash, hex-encoded.
uint64_t fnv1a64(const void* data, std::size_t len, uint64_t seed = 0xcbf29ce484222325ULL);
std::string content_hash(const std::string& bytes);

}  // namespace gih
