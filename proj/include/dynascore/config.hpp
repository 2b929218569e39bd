#pragma once

// Flat `section.key = value` configuration files.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dynascore {

class Config {
public:
    struct Entry {
        std::string value;
        int line = 0;
    };

    /// Blank lines and `#` comments are skipped; every other line must be
    /// `key = value`. Throws ConfigError naming the line.
    static Config parse(const std::string& text, const std::string& source = "<config>");
    static Config load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    const std::map<std::string, Entry>& entries() const noexcept { return entries_; }
    void set(const std::string& key, const std::string& value) { entries_[key] = {value, 0}; }

    /// Typed getters throw ConfigError naming the key (and line) on a missing
    /// or malformed value.
    std::string text(const std::string& key) const;
    double real(const std::string& key) const;
    std::int64_t integer(const std::string& key) const;
    std::vector<double> reals(const std::string& key) const;

    std::string text_or(const std::string& key, const std::string& fallback) const;
    double real_or(const std::string& key, double fallback) const;
    std::int64_t integer_or(const std::string& key, std::int64_t fallback) const;

    /// Names `x` of keys `prefix.x.*`, sorted.
    std::vector<std::string> groups(const std::string& prefix) const;

    /// Throws ConfigError for a key that matches none of the patterns; a `*`
    /// segment matches any single name.
    void require_known(const std::vector<std::string>& patterns) const;

    /// One `key=value` line per entry, sorted by key, values trimmed.
    std::string canonical() const;
    /// FNV-1a 64 of canonical(), as 16 hex digits.
    std::string digest() const;

private:
    const Entry& entry(const std::string& key) const;
    std::string where(const std::string& key) const;

    std::string source_;
    std::map<std::string, Entry> entries_;
};

}  // namespace dynascore
