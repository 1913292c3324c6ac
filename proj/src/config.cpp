#include "singular_bound/config.hpp"

#include <sstream>

#include "singular_bound/errors.hpp"
#include "singular_bound/io.hpp"

namespace sb {

Config Config::parse(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected `key = value`");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (c.has(key)) throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key " + key);
        c.values_[key] = value;
    }
    return c;
}

Config Config::load(const std::string& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return parse(text);
}

void Config::check_keys(const std::set<std::string>& allowed) const {
    for (const auto& [key, value] : values_)
        if (!allowed.count(key)) throw ConfigError("unknown config key: " + key);
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return parse_double(it->second);
    } catch (const std::invalid_argument&) {
        throw ConfigError("config key " + key + ": expected a number, got '" + it->second + "'");
    }
}

long long Config::get_int(const std::string& key, long long fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return parse_int(it->second);
    } catch (const std::invalid_argument&) {
        throw ConfigError("config key " + key + ": expected an integer, got '" + it->second + "'");
    }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError("config key " + key + ": expected true or false");
}

std::uint64_t Config::get_seed(const std::string& key, std::uint64_t fallback) const {
    const long long v = get_int(key, static_cast<long long>(fallback));
    if (v < 0) throw ConfigError("config key " + key + ": seed must be nonnegative");
    return static_cast<std::uint64_t>(v);
}

std::vector<double> Config::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    for (const auto& part : split(it->second, ',')) {
        try {
            out.push_back(parse_double(part));
        } catch (const std::invalid_argument&) {
            throw ConfigError("config key " + key + ": bad list entry '" + trim(part) + "'");
        }
    }
    return out;
}

std::vector<int> Config::get_ints(const std::string& key, const std::vector<int>& fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<int> out;
    for (const auto& part : split(it->second, ',')) {
        try {
            out.push_back(static_cast<int>(parse_int(part)));
        } catch (const std::invalid_argument&) {
            throw ConfigError("config key " + key + ": bad list entry '" + trim(part) + "'");
        }
    }
    return out;
}

std::string Config::require_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing config key: " + key);
    return it->second;
}

double Config::require_double(const std::string& key) const {
    if (!has(key)) throw ConfigError("missing config key: " + key);
    return get_double(key, 0.0);
}

std::string Config::to_text() const {
    std::ostringstream os;
    for (const auto& [key, value] : values_) os << key << " = " << value << '\n';
    return os.str();
}

}  // namespace sb
