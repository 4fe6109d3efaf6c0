#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace hcoref {

// FNV-1a 64-bit. Stable across runs and platforms, unlike std::hash;
// used for prompt hashes and output-file digests.
std::uint64_t fnv1a64(std::string_view data);
std::string fnv1a64_hex(std::string_view data);

// Digest of a file's raw bytes, as a 16-char hex string.
std::string file_digest(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

// Whitespace tokenization (used for prompt token budgets and context windows).
std::vector<std::string> split_tokens(std::string_view text);
std::string join_tokens(const std::vector<std::string>& tokens,
                        std::size_t begin, std::size_t end);

// Keeps the first `max_tokens` whitespace tokens of `text`.
std::string truncate_tokens(const std::string& text, std::size_t max_tokens);

// Runs fn(i) for i in [0, n) on up to `parallelism` threads. Results must be
// written to index-addressed slots so completion order cannot matter.
void parallel_for(std::size_t n, std::size_t parallelism,
                  const std::function<void(std::size_t)>& fn);

}  // namespace hcoref
