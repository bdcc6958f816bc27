#include "trafprof_cli/files.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

#include <fmt/format.h>
#include <openssl/evp.h>
#include <unistd.h>

#include "trafprof/error.hpp"

namespace trafprof::cli {

namespace {

fs::path temp_sibling(const fs::path& path) {
    return path.parent_path() / fmt::format(".{}.tmp-{}", path.filename().string(), ::getpid());
}

void write_raw(const fs::path& path, const char* data, std::size_t size) {
    std::ofstream out{path, std::ios::binary | std::ios::trunc};
    if (!out) throw DataError{fmt::format("cannot open {} for writing", path.string())};
    out.write(data, static_cast<std::streamsize>(size));
    out.flush();
    if (!out) throw DataError{fmt::format("failed to write {}", path.string())};
}

}  // namespace

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error{"SHA-256 digest failed"};
    }
    std::string hex;
    hex.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

std::string sha256_hex(std::string_view text) {
    return sha256_hex(std::span{reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
    std::ifstream in{path, std::ios::binary};
    if (!in) throw DataError{fmt::format("cannot read {}", path.string())};
    return {std::istreambuf_iterator<char>{in}, std::istreambuf_iterator<char>{}};
}

std::string read_text(const fs::path& path) {
    std::ifstream in{path, std::ios::binary};
    if (!in) throw DataError{fmt::format("cannot read {}", path.string())};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::istringstream in{read_text(path)};
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(std::move(line));
    }
    return lines;
}

void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const auto tmp = temp_sibling(path);
    try {
        write_raw(tmp, reinterpret_cast<const char*>(bytes.data()), bytes.size());
        fs::rename(tmp, path);
    } catch (...) {
        std::error_code ec;
        fs::remove(tmp, ec);
        throw;
    }
}

void write_file_atomic(const fs::path& path, std::string_view text) {
    write_file_atomic(path, std::span{reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::string json_text(const nlohmann::ordered_json& j) {
    return j.dump(2) + "\n";
}

nlohmann::ordered_json hashes_to_json(const FileHashes& files) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [name, e] : files) j[name] = {{"sha256", e.sha256}, {"bytes", e.bytes}};
    return j;
}

StagedDirectory::StagedDirectory(fs::path target) : target_{std::move(target)} {
    if (target_.filename().empty()) target_ = target_.parent_path();
    if (fs::exists(target_)) {
        if (!fs::is_directory(target_)) throw DataError{fmt::format("{} exists and is not a directory", target_.string())};
        if (!fs::is_empty(target_) && !fs::exists(target_ / "manifest.json")) {
            throw DataError{fmt::format("refusing to replace non-empty directory {} without a manifest.json",
                                        target_.string())};
        }
    }
    staging_ = temp_sibling(fs::absolute(target_));
    fs::remove_all(staging_);
    fs::create_directories(staging_);
}

StagedDirectory::~StagedDirectory() {
    if (!committed_) {
        std::error_code ec;
        fs::remove_all(staging_, ec);
    }
}

void StagedDirectory::write(const std::string& relative, std::span<const std::uint8_t> bytes) {
    const auto path = staging_ / relative;
    fs::create_directories(path.parent_path());
    write_raw(path, reinterpret_cast<const char*>(bytes.data()), bytes.size());
    files_[relative] = {sha256_hex(bytes), bytes.size()};
}

void StagedDirectory::write(const std::string& relative, std::string_view text) {
    write(relative, std::span{reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

void StagedDirectory::commit() {
    const auto abs_target = fs::absolute(target_);
    if (fs::exists(abs_target)) {
        const auto old = abs_target.parent_path() / fmt::format(".{}.old-{}", abs_target.filename().string(), ::getpid());
        fs::rename(abs_target, old);
        fs::rename(staging_, abs_target);
        fs::remove_all(old);
    } else {
        if (abs_target.has_parent_path()) fs::create_directories(abs_target.parent_path());
        fs::rename(staging_, abs_target);
    }
    committed_ = true;
}

}  // namespace trafprof::cli
