#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace sb {

/// Flat `key = value` document. Blank lines and text after `#` are
/// ignored; keys are dotted names such as `gibbs.omega`. Values are kept as
/// the trimmed source text, so writing a parsed document back out and
/// re-parsing it gives the same document.
class Config {
public:
    static Config parse(const std::string& text);
    static Config load(const std::string& path);

    /// Throws ConfigError naming the first key not in `allowed`.
    void check_keys(const std::set<std::string>& allowed) const;

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const;
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
    std::vector<int> get_ints(const std::string& key, const std::vector<int>& fallback) const;

    std::string require_string(const std::string& key) const;
    double require_double(const std::string& key) const;

    /// Sorted `key = value` lines.
    std::string to_text() const;
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace sb
