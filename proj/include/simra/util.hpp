#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace simra {

std::string read_file(std::filesystem::path const& path);

/// Writes via a temporary sibling, fsyncs, then renames over `path`.
void write_file_atomic(std::filesystem::path const& path, std::string_view bytes);

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);

/// Regular files in `dir` with the given extension (or any when empty),
/// sorted by file name.
std::vector<std::filesystem::path> list_files(std::filesystem::path const& dir,
                                              std::string_view extension = {});

/// Runs body(i) for i in [0, n) on up to `jobs` threads. Exceptions from
/// workers are rethrown (lowest index first) after all workers stop.
void parallel_for(std::size_t n, unsigned jobs, std::function<void(std::size_t)> const& body);

}  // namespace simra
