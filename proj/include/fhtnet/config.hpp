#pragma once

#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fhtnet/errors.hpp"
#include "fhtnet/io_util.hpp"

namespace fhtnet {

/// key=value run configuration. '#' starts a comment, blank lines are
/// ignored, later assignments win. Consumers declare their allowed keys and
/// anything else is rejected up front.
struct RunConfig {
    std::map<std::string, std::string> values;

    bool has(const std::string& key) const { return values.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto it = values.find(key);
        return it == values.end() ? fallback : it->second;
    }

    std::string require_string(const std::string& key) const {
        auto it = values.find(key);
        if (it == values.end()) throw ConfigError("config: missing required key '" + key + "'");
        return it->second;
    }

    long long get_int(const std::string& key, long long fallback) const {
        auto it = values.find(key);
        if (it == values.end()) return fallback;
        return parse_int(key, it->second);
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = values.find(key);
        if (it == values.end()) return fallback;
        return parse_double(key, it->second);
    }

    bool get_bool(const std::string& key, bool fallback) const {
        auto it = values.find(key);
        if (it == values.end()) return fallback;
        const std::string& v = it->second;
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ConfigError("config: key '" + key + "' is not a boolean: " + v);
    }

    std::vector<int> get_int_list(const std::string& key, std::vector<int> fallback) const {
        auto it = values.find(key);
        if (it == values.end()) return fallback;
        std::vector<int> out;
        std::stringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, ','))
            out.push_back(static_cast<int>(parse_int(key, trim(item))));
        if (out.empty()) throw ConfigError("config: key '" + key + "' holds an empty list");
        return out;
    }

    void validate_keys(const std::vector<std::string>& allowed) const {
        for (const auto& [key, value] : values) {
            bool ok = false;
            for (const auto& a : allowed)
                if (key == a) {
                    ok = true;
                    break;
                }
            if (!ok) throw ConfigError("config: unknown key '" + key + "'");
        }
    }

    static std::string trim(const std::string& s) {
        std::size_t b = s.find_first_not_of(" \t\r");
        std::size_t e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? "" : s.substr(b, e - b + 1);
    }

    static long long parse_int(const std::string& key, const std::string& v) {
        try {
            std::size_t used = 0;
            const long long n = std::stoll(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return n;
        } catch (const std::exception&) {
            throw ConfigError("config: key '" + key + "' is not an integer: " + v);
        }
    }

    static double parse_double(const std::string& key, const std::string& v) {
        try {
            std::size_t used = 0;
            const double d = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return d;
        } catch (const std::exception&) {
            throw ConfigError("config: key '" + key + "' is not a number: " + v);
        }
    }

    void set_line(const std::string& line, const std::string& where) {
        std::string body = line;
        if (const auto hash = body.find('#'); hash != std::string::npos) body.resize(hash);
        body = trim(body);
        if (body.empty()) return;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: malformed line (expected key=value) " + where + ": " + line);
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (key.empty()) throw ConfigError("config: empty key " + where);
        values[key] = value;
    }
};

inline RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        cfg.set_line(line, "at line " + std::to_string(lineno));
    }
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    return parse_config_text(read_file_bytes(path));
}

/// Applies trailing key=value command-line overrides on top of a file config.
inline void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides) {
    for (const auto& item : overrides) cfg.set_line(item, "in override '" + item + "'");
}

} // namespace fhtnet
