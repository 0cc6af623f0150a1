#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qembed {

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using json = nlohmann::json;

// 17 significant digits; non-finite values become null.
inline std::string format_double(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline void dump_into(const json& j, std::ostringstream& os, int indent, int depth) {
    auto nl = [&](int d) {
        os << '\n';
        for (int i = 0; i < d * indent; ++i) os << ' ';
    };
    switch (j.type()) {
    case json::value_t::object: {
        if (j.empty()) { os << "{}"; return; }
        os << '{';
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {  // std::map storage: keys already sorted
            if (!first) os << ',';
            first = false;
            nl(depth + 1);
            os << json(it.key()).dump() << ": ";
            dump_into(it.value(), os, indent, depth + 1);
        }
        nl(depth);
        os << '}';
        return;
    }
    case json::value_t::array: {
        if (j.empty()) { os << "[]"; return; }
        bool flat = true;
        for (const auto& e : j) flat = flat && !e.is_structured();
        os << '[';
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i) os << (flat ? ", " : ",");
            if (!flat) nl(depth + 1);
            dump_into(j[i], os, indent, depth + 1);
        }
        if (!flat) nl(depth);
        os << ']';
        return;
    }
    case json::value_t::number_float: os << format_double(j.get<double>()); return;
    default: os << j.dump(); return;
    }
}

}  // namespace detail

// Deterministic JSON text: sorted keys, fixed float format.
inline std::string dump_json(const json& j, int indent = 2) {
    std::ostringstream os;
    detail::dump_into(j, os, indent, 0);
    os << '\n';
    return os.str();
}

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    json to_json() const { return json{{"columns", columns}, {"rows", rows}}; }
    static Table from_json(const json& j) { return {j.at("columns").get<std::vector<std::string>>(), j.at("rows").get<std::vector<std::vector<double>>>()}; }
};

inline std::string to_csv(const Table& t) {
    std::ostringstream os;
    for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
    os << '\n';
    for (const auto& r : t.rows) {
        if (r.size() != t.columns.size()) throw io_error("csv row width does not match header");
        for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << format_double(r[c]);
        os << '\n';
    }
    return os.str();
}

// Scalar leaves of a JSON object as key,value rows (nested keys joined with '.').
inline std::string flat_csv(const json& j) {
    std::ostringstream os;
    os << "key,value\n";
    auto rec = [&](auto&& self, const json& v, const std::string& prefix) -> void {
        if (v.is_object()) {
            for (auto it = v.begin(); it != v.end(); ++it) self(self, it.value(), prefix.empty() ? it.key() : prefix + "." + it.key());
        } else if (v.is_array()) {
            for (std::size_t i = 0; i < v.size(); ++i) self(self, v[i], prefix + "." + std::to_string(i));
        } else {
            std::string s = v.is_number_float() ? format_double(v.get<double>()) : v.is_string() ? v.get<std::string>() : v.dump();
            os << prefix << ',' << s << '\n';
        }
    };
    rec(rec, j, "");
    return os.str();
}

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline void write_text(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error("cannot open " + path + " for writing");
    f << content;
    if (!f) throw io_error("write failed: " + path);
}

}  // namespace qembed
