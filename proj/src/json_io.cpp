#include "gcf/json_io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gcf {

std::string num17(double x) {
    if (!std::isfinite(x)) return "null";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string json_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

JsonDoc& JsonDoc::put(std::string_view key, double v) {
    items_.emplace_back(std::string(key), num17(v));
    return *this;
}

JsonDoc& JsonDoc::put(std::string_view key, int v) {
    items_.emplace_back(std::string(key), std::to_string(v));
    return *this;
}

JsonDoc& JsonDoc::put(std::string_view key, long v) {
    items_.emplace_back(std::string(key), std::to_string(v));
    return *this;
}

JsonDoc& JsonDoc::put(std::string_view key, std::size_t v) {
    items_.emplace_back(std::string(key), std::to_string(v));
    return *this;
}

JsonDoc& JsonDoc::put(std::string_view key, bool v) {
    items_.emplace_back(std::string(key), v ? "true" : "false");
    return *this;
}

JsonDoc& JsonDoc::put(std::string_view key, std::string_view v) {
    items_.emplace_back(std::string(key), "\"" + json_escape(v) + "\"");
    return *this;
}

JsonDoc& JsonDoc::put(std::string_view key, const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += num17(v[i]);
    }
    s += "]";
    items_.emplace_back(std::string(key), std::move(s));
    return *this;
}

JsonDoc& JsonDoc::put_strings(std::string_view key, const std::vector<std::string>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += "\"" + json_escape(v[i]) + "\"";
    }
    s += "]";
    items_.emplace_back(std::string(key), std::move(s));
    return *this;
}

JsonDoc& JsonDoc::put_pairs(std::string_view key, const std::vector<std::array<double, 2>>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += "[" + num17(v[i][0]) + ", " + num17(v[i][1]) + "]";
    }
    s += "]";
    items_.emplace_back(std::string(key), std::move(s));
    return *this;
}

JsonDoc& JsonDoc::put_raw(std::string_view key, std::string_view raw) {
    items_.emplace_back(std::string(key), std::string(raw));
    return *this;
}

std::string JsonDoc::dump() const {
    if (items_.empty()) return "{}\n";
    std::string out = "{\n";
    for (std::size_t i = 0; i < items_.size(); ++i) {
        out += "  \"" + json_escape(items_[i].first) + "\": " + items_[i].second;
        out += i + 1 < items_.size() ? ",\n" : "\n";
    }
    out += "}\n";
    return out;
}

std::string JsonDoc::dump_inline() const {
    std::string out = "{";
    for (std::size_t i = 0; i < items_.size(); ++i) {
        if (i) out += ", ";
        out += "\"" + json_escape(items_[i].first) + "\": " + items_[i].second;
    }
    out += "}";
    return out;
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_text_file(const std::string& path, std::string_view content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string iso8601_utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace gcf
