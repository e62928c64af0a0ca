#pragma once

// Internal text helpers shared by the file-format code: deterministic double
// formatting (round-trip exact) and small parsing utilities.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "timbre/errors.hpp"

namespace timbre::textutil {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s, const char* what) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw DataError(std::string("cannot parse number for ") + what + ": '" + s + "'");
    return v;
}

inline long parse_long(const std::string& s, const char* what) {
    char* end = nullptr;
    long v = std::strtol(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0')
        throw DataError(std::string("cannot parse integer for ") + what + ": '" + s + "'");
    return v;
}

inline std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == delim) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

/// Reads "key value" lines; '#' starts a comment, blank lines are skipped.
inline std::vector<std::pair<std::string, std::string>> read_kv_file(
    const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path.string());
    std::vector<std::pair<std::string, std::string>> kv;
    std::string line;
    while (std::getline(f, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = strip(line);
        if (line.empty()) continue;
        auto space = line.find_first_of(" \t");
        if (space == std::string::npos)
            throw ConfigError("malformed line in " + path.string() + ": '" + line + "'");
        kv.emplace_back(strip(line.substr(0, space)), strip(line.substr(space + 1)));
    }
    return kv;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary); // binary: identical bytes on rerun
    if (!f) throw DataError("cannot open for writing: " + path.string());
    return f;
}

} // namespace timbre::textutil
