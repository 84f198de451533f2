#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pedcross/errors.hpp"

namespace pedcross {

using json = nlohmann::json;

/// Parses a line-delimited JSON file; errors carry the 1-based line number.
std::vector<json> read_jsonl(const std::filesystem::path& path);

/// Streaming variant; `fn` receives (line_number, record).
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(std::size_t, const json&)>& fn);

/// Writes via a temporary file in the same directory plus rename, so readers
/// never observe partial contents.
void atomic_write(const std::filesystem::path& path, const std::string& content);

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& records);

/// FNV-1a 64 over the file bytes, hex-encoded. Used for staging manifests.
std::string checksum_file(const std::filesystem::path& path);
std::string checksum_string(const std::string& data);

}  // namespace pedcross
