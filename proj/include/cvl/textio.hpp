#pragma once

// Delimited text helpers shared by every on-disk artifact.
//
// All artifacts are UTF-8 CSV with optional leading comment lines. The first comment line
// carries provenance:
//
//   # cvl <version> digest=<16 hex> [key=value ...]
//
// Doubles are written in shortest round-trip form, so a write/read cycle is bit-exact.
// Missing values are written as the empty string and read back as NaN.

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "digest.hpp"
#include "error.hpp"

namespace cvl {

inline std::string format_double(double v)
{
    if (std::isnan(v)) return {};
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.empty() || s == "NaN" || s == "nan" || s == "NA") return std::numeric_limits<double>::quiet_NaN();
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw DataError("cannot parse number '" + std::string(s) + "'");
    return v;
}

inline long long parse_int(std::string_view s)
{
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw DataError("cannot parse integer '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string> split_fields(std::string_view line, char sep = ',')
{
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            auto last = line.substr(start);
            if (!last.empty() && last.back() == '\r') last.remove_suffix(1);
            out.emplace_back(last);
            return out;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

struct Provenance {
    std::string tool;
    std::string version;
    std::string digest;
    std::map<std::string, std::string> fields;
};

inline std::string provenance_line(std::string_view digest,
                                   const std::map<std::string, std::string>& fields = {})
{
    std::string line = "# ";
    line += kToolName;
    line += ' ';
    line += kToolVersion;
    line += " digest=";
    line += digest;
    for (const auto& [k, v] : fields) line += " " + k + "=" + v;
    return line;
}

inline Provenance parse_provenance(std::string_view line)
{
    Provenance p;
    if (line.substr(0, 2) != "# ") return p;
    std::istringstream in{std::string(line.substr(2))};
    in >> p.tool >> p.version;
    std::string tok;
    while (in >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        auto key = tok.substr(0, eq);
        auto value = tok.substr(eq + 1);
        if (key == "digest")
            p.digest = value;
        else
            p.fields[key] = value;
    }
    return p;
}

/// A parsed delimited file: provenance from the first comment line, a header row,
/// then raw string rows.
struct TextTable {
    Provenance provenance;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw DataError("missing column '" + std::string(name) + "'");
    }
};

inline TextTable read_table(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    TextTable t;
    std::string line;
    bool first_comment = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (first_comment) t.provenance = parse_provenance(line);
            first_comment = false;
            continue;
        }
        auto fields = split_fields(line);
        if (t.header.empty()) {
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size())
            throw DataError(path + ": row has " + std::to_string(fields.size()) + " fields, header has " +
                            std::to_string(t.header.size()));
        t.rows.push_back(std::move(fields));
    }
    if (t.header.empty()) throw DataError(path + ": no header row");
    return t;
}

inline void write_text_file(const std::string& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << content;
    if (!out) throw DataError("write failed for '" + path + "'");
}

inline std::string read_text_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace cvl
