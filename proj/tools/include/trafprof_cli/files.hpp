#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace trafprof::cli {

namespace fs = std::filesystem;

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

std::vector<std::uint8_t> read_bytes(const fs::path& path);
std::string read_text(const fs::path& path);
/// Non-empty lines, without trailing '\r'.
std::vector<std::string> read_lines(const fs::path& path);

/// Writes `path` through a sibling temporary file and a rename, so readers
/// never see a partial file.
void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const fs::path& path, std::string_view text);

/// Pretty JSON with a trailing newline.
std::string json_text(const nlohmann::ordered_json& j);

/// Files hashed into a manifest: relative path -> {sha256, bytes}.
struct ManifestEntry {
    std::string sha256;
    std::uintmax_t bytes = 0;
};
using FileHashes = std::map<std::string, ManifestEntry>;

nlohmann::ordered_json hashes_to_json(const FileHashes& files);

/// Builds a directory under a temporary sibling name and swaps it into
/// place on commit(). Without commit() the staging directory is removed.
/// An existing target is replaced only if it is empty or holds a
/// manifest.json from an earlier run.
class StagedDirectory {
public:
    explicit StagedDirectory(fs::path target);
    ~StagedDirectory();
    StagedDirectory(const StagedDirectory&) = delete;
    StagedDirectory& operator=(const StagedDirectory&) = delete;

    const fs::path& staging() const { return staging_; }
    const FileHashes& files() const { return files_; }

    /// Writes `relative` inside the staging directory and records its hash.
    void write(const std::string& relative, std::span<const std::uint8_t> bytes);
    void write(const std::string& relative, std::string_view text);

    void commit();

private:
    fs::path target_;
    fs::path staging_;
    FileHashes files_;
    bool committed_ = false;
};

}  // namespace trafprof::cli
