#include "dynascore/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "dynascore/errors.hpp"

namespace dynascore {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream in(s);
    while (std::getline(in, part, sep)) parts.push_back(part);
    if (!s.empty() && s.back() == sep) parts.emplace_back();
    return parts;
}

bool matches(const std::string& key, const std::string& pattern) {
    const auto k = split(key, '.');
    const auto p = split(pattern, '.');
    if (k.size() != p.size()) return false;
    for (std::size_t i = 0; i < k.size(); ++i) {
        if (p[i] != "*" && p[i] != k[i]) return false;
    }
    return true;
}

template <class T>
std::optional<T> parse_number(const std::string& s) {
    T value{};
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return value;
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& source) {
    Config cfg;
    cfg.source_ = source;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        const std::string at = source + ":" + std::to_string(line);
        if (eq == std::string::npos) {
            throw Error(ErrorCode::ConfigError, at + ": expected `key = value`");
        }
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (key.empty()) throw Error(ErrorCode::ConfigError, at + ": empty key");
        if (cfg.entries_.count(key)) {
            throw Error(ErrorCode::ConfigError, at + ": duplicate key '" + key + "'");
        }
        cfg.entries_[key] = {value, line};
    }
    return cfg;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

std::string Config::where(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end() || it->second.line == 0) return "field '" + key + "'";
    return source_ + ":" + std::to_string(it->second.line) + ": field '" + key + "'";
}

const Config::Entry& Config::entry(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) {
        throw Error(ErrorCode::ConfigError, "missing required field '" + key + "'");
    }
    return it->second;
}

std::string Config::text(const std::string& key) const { return entry(key).value; }

double Config::real(const std::string& key) const {
    const auto v = parse_number<double>(entry(key).value);
    if (!v) throw Error(ErrorCode::ConfigError, where(key) + ": expected a real number");
    return *v;
}

std::int64_t Config::integer(const std::string& key) const {
    const auto v = parse_number<std::int64_t>(entry(key).value);
    if (!v) throw Error(ErrorCode::ConfigError, where(key) + ": expected an integer");
    return *v;
}

std::vector<double> Config::reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& part : split(entry(key).value, ',')) {
        const auto v = parse_number<double>(trim(part));
        if (!v) throw Error(ErrorCode::ConfigError, where(key) + ": expected comma-separated reals");
        out.push_back(*v);
    }
    return out;
}

std::string Config::text_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? text(key) : fallback;
}

double Config::real_or(const std::string& key, double fallback) const {
    return has(key) ? real(key) : fallback;
}

std::int64_t Config::integer_or(const std::string& key, std::int64_t fallback) const {
    return has(key) ? integer(key) : fallback;
}

std::vector<std::string> Config::groups(const std::string& prefix) const {
    std::set<std::string> names;
    const std::string head = prefix + ".";
    for (const auto& [key, e] : entries_) {
        if (key.rfind(head, 0) != 0) continue;
        const auto rest = key.substr(head.size());
        const auto dot = rest.find('.');
        if (dot != std::string::npos) names.insert(rest.substr(0, dot));
    }
    return {names.begin(), names.end()};
}

void Config::require_known(const std::vector<std::string>& patterns) const {
    for (const auto& [key, e] : entries_) {
        const bool known = std::any_of(patterns.begin(), patterns.end(),
                                       [&](const std::string& p) { return matches(key, p); });
        if (!known) throw Error(ErrorCode::ConfigError, where(key) + ": unknown key");
    }
}

std::string Config::canonical() const {
    std::string out;
    for (const auto& [key, e] : entries_) out += key + "=" + e.value + "\n";
    return out;
}

std::string Config::digest() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace dynascore
