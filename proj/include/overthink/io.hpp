#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace overthink::io {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

/// Reads a whole file; a missing or unreadable file is an InputError.
std::string read_file(const fs::path& path);

/// Writes `content` to a sibling temp file, then renames it over `path`.
/// Readers never observe a partially written file.
void write_file_atomic(const fs::path& path, std::string_view content);

/// Calls `fn(line_number, record)` for every non-blank line of a JSONL
/// buffer. Parse failures raise DatasetError naming `source` and the line.
void for_each_jsonl(std::string_view buffer, const std::string& source,
                    const std::function<void(std::size_t, const ordered_json&)>& fn);

/// Incremental SHA-256 (OpenSSL EVP).
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::string_view bytes);
  /// Length-prefixed update, so that ("ab","c") and ("a","bc") differ.
  Sha256& update_field(std::string_view bytes);
  std::string hex_digest();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string sha256_hex(std::string_view bytes);

}  // namespace overthink::io
