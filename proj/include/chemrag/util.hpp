#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace chemrag {

// SHA-256 of `data`, lowercase hex.
std::string sha256_hex(std::string_view data);

// Stable 64-bit mixer/combiner used wherever a content hash must be
// reproducible across platforms and runs (std::hash gives no such guarantee).
uint64_t mix64(uint64_t x);
uint64_t hash64(std::string_view data, uint64_t seed = 0x9e3779b97f4a7c15ULL);
inline uint64_t hash_combine64(uint64_t h, uint64_t v) {
    return mix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

std::string trim(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);
size_t count_whitespace_tokens(std::string_view s);
std::string to_lower_ascii(std::string_view s);
bool starts_with(std::string_view s, std::string_view prefix);

// Unicode NFC followed by whitespace-run collapse to single spaces and a
// trim. This is the text normalization behind content-addressed snippet ids.
std::string normalize_text(std::string_view utf8);

std::string read_file(const std::filesystem::path& path);
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Write via temp file + rename so readers never observe a partial file.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace chemrag
