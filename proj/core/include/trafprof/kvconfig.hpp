#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace trafprof {

/// Flat `key = value` text, one pair per line, `#` starts a comment.
/// Later assignments to a key replace earlier ones. Lookups record which
/// keys were read so callers can reject typos.
class KvConfig {
public:
    KvConfig() = default;

    /// Throws BadConfig naming `source` and the line on malformed input.
    static KvConfig parse(const std::string& text, const std::string& source = "config");
    static KvConfig load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value);
    bool contains(const std::string& key) const { return values_.count(key) != 0; }
    const std::map<std::string, std::string>& values() const { return values_; }

    std::optional<std::string> get_string(const std::string& key) const;
    std::optional<double> get_double(const std::string& key) const;
    std::optional<std::int64_t> get_int(const std::string& key) const;
    std::optional<std::uint64_t> get_u64(const std::string& key) const;
    std::optional<bool> get_bool(const std::string& key) const;
    /// Whitespace-separated numbers.
    std::optional<std::vector<double>> get_doubles(const std::string& key) const;
    std::optional<std::vector<std::string>> get_words(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    /// Keys never looked up, in sorted order.
    std::vector<std::string> unused_keys() const;
    /// Keys starting with `prefix`, in sorted order; not marked as used.
    std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

    /// Canonical text: sorted `key = value` lines.
    std::string to_text() const;

private:
    const std::string* find(const std::string& key) const;

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

}  // namespace trafprof
