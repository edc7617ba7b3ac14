#pragma once

#include <span>
#include <string>
#include <vector>

namespace rmeta::io {

// Write-temp-then-rename so readers never observe a partial file.
void atomic_write_text(const std::string& path, const std::string& content);

// Flat little-endian float64 array files.
void write_doubles_le(const std::string& path, std::span<const double> values);
std::vector<double> read_doubles_le(const std::string& path);

// Base64 for embedding binary blobs in JSON.
std::string base64_encode(std::span<const double> values);
std::vector<double> base64_decode_doubles(const std::string& text);

// Shortest round-trip decimal (17 significant digits) for CSV output.
std::string format_double(double v);

void ensure_dir(const std::string& path);

}  // namespace rmeta::io
