#include "trafprof/kvconfig.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "trafprof/error.hpp"

namespace trafprof {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string{s.substr(b, e - b + 1)};
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) throw BadConfig{fmt::format("{}: '{}' is not a valid number", key, text)};
    return value;
}

}  // namespace

KvConfig KvConfig::parse(const std::string& text, const std::string& source) {
    KvConfig c;
    std::istringstream in{text};
    std::string line;
    for (int n = 1; std::getline(in, line); ++n) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw BadConfig{fmt::format("{}:{}: expected 'key = value'", source, n)};
        const auto key = trim(std::string_view{body}.substr(0, eq));
        if (key.empty()) throw BadConfig{fmt::format("{}:{}: empty key", source, n)};
        c.values_[key] = trim(std::string_view{body}.substr(eq + 1));
    }
    return c;
}

KvConfig KvConfig::load(const std::filesystem::path& path) {
    std::ifstream in{path, std::ios::binary};
    if (!in) throw BadConfig{fmt::format("cannot read config {}", path.string())};
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

void KvConfig::set(const std::string& key, const std::string& value) {
    values_[key] = value;
}

const std::string* KvConfig::find(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
}

std::optional<std::string> KvConfig::get_string(const std::string& key) const {
    if (const auto* v = find(key)) return *v;
    return std::nullopt;
}

std::optional<double> KvConfig::get_double(const std::string& key) const {
    if (const auto* v = find(key)) return parse_number<double>(key, *v);
    return std::nullopt;
}

std::optional<std::int64_t> KvConfig::get_int(const std::string& key) const {
    if (const auto* v = find(key)) return parse_number<std::int64_t>(key, *v);
    return std::nullopt;
}

std::optional<std::uint64_t> KvConfig::get_u64(const std::string& key) const {
    if (const auto* v = find(key)) return parse_number<std::uint64_t>(key, *v);
    return std::nullopt;
}

std::optional<bool> KvConfig::get_bool(const std::string& key) const {
    const auto* v = find(key);
    if (!v) return std::nullopt;
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
    throw BadConfig{fmt::format("{}: '{}' is not a boolean", key, *v)};
}

std::optional<std::vector<std::string>> KvConfig::get_words(const std::string& key) const {
    const auto* v = find(key);
    if (!v) return std::nullopt;
    std::istringstream in{*v};
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

std::optional<std::vector<double>> KvConfig::get_doubles(const std::string& key) const {
    const auto words = get_words(key);
    if (!words) return std::nullopt;
    std::vector<double> out;
    for (const auto& w : *words) out.push_back(parse_number<double>(key, w));
    return out;
}

std::string KvConfig::get_string(const std::string& key, const std::string& fallback) const {
    return get_string(key).value_or(fallback);
}

double KvConfig::get_double(const std::string& key, double fallback) const {
    return get_double(key).value_or(fallback);
}

std::int64_t KvConfig::get_int(const std::string& key, std::int64_t fallback) const {
    return get_int(key).value_or(fallback);
}

std::uint64_t KvConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
    return get_u64(key).value_or(fallback);
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
    return get_bool(key).value_or(fallback);
}

std::vector<std::string> KvConfig::unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) {
        if (!used_.count(k)) out.push_back(k);
    }
    return out;
}

std::vector<std::string> KvConfig::keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (auto it = values_.lower_bound(prefix); it != values_.end() && it->first.starts_with(prefix); ++it) {
        out.push_back(it->first);
    }
    return out;
}

std::string KvConfig::to_text() const {
    std::string out;
    for (const auto& [k, v] : values_) out += fmt::format("{} = {}\n", k, v);
    return out;
}

}  // namespace trafprof
