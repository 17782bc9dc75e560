#pragma once

// Flat key = value run configuration and plain-text number formatting.

#include <charconv>
#include <complex>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "spinlab/error.hpp"
#include "spinlab/polyfam.hpp"

namespace spinlab::io {

/// Shortest round-tripping decimal form.
inline std::string fmt(double x)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
        throw Error(ErrorCode::InvalidArgument, "key '" + key + "': '" + text + "' is not a number");
    return v;
}

inline long parse_int(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    long v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
        throw Error(ErrorCode::InvalidArgument, "key '" + key + "': '" + text + "' is not an integer");
    return v;
}

/// "x" or "x,y" for x + iy.
inline cplx parse_complex(const std::string& key, const std::string& text)
{
    const auto comma = text.find(',');
    if (comma == std::string::npos)
        return {parse_double(key, text), 0.0};
    return {parse_double(key, text.substr(0, comma)), parse_double(key, text.substr(comma + 1))};
}

inline std::vector<std::string> split(const std::string& text, char sep)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep))
        if (!trim(item).empty())
            out.push_back(trim(item));
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes")
        return true;
    if (t == "false" || t == "0" || t == "no")
        return false;
    throw Error(ErrorCode::InvalidArgument, "key '" + key + "': '" + text + "' is not a boolean");
}

/// Flat configuration with a fixed key set. Later assignments win, so flag
/// overrides are applied after the file.
class RunConfig {
public:
    explicit RunConfig(std::map<std::string, std::string> defaults) : values_(std::move(defaults)) {}

    void set(const std::string& key, const std::string& value)
    {
        if (!values_.contains(key))
            throw Error(ErrorCode::InvalidArgument, "unknown key '" + key + "'");
        values_[key] = trim(value);
    }

    /// One "key = value" assignment; blank lines and '#' comments are skipped.
    void apply_line(std::string_view line, const std::string& where)
    {
        const auto hash = line.find('#');
        const std::string body = trim(line.substr(0, hash));
        if (body.empty())
            return;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::InvalidArgument, where + ": expected key = value, got '" + body + "'");
        set(trim(body.substr(0, eq)), body.substr(eq + 1));
    }

    void apply_text(std::string_view text, const std::string& where)
    {
        std::size_t start = 0;
        int line_no = 1;
        while (start <= text.size()) {
            auto end = text.find('\n', start);
            if (end == std::string_view::npos)
                end = text.size();
            apply_line(text.substr(start, end - start), where + ":" + std::to_string(line_no));
            start = end + 1;
            ++line_no;
        }
    }

    void apply_file(const std::string& path)
    {
        std::ifstream in(path);
        if (!in)
            throw Error(ErrorCode::InvalidArgument, "cannot read config file '" + path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        apply_text(ss.str(), path);
    }

    /// "key=value" from the command line.
    void apply_override(const std::string& assignment)
    {
        const auto eq = assignment.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::InvalidArgument, "--set expects key=value, got '" + assignment + "'");
        set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
    }

    const std::string& str(const std::string& key) const
    {
        const auto it = values_.find(key);
        if (it == values_.end())
            throw Error(ErrorCode::InvalidArgument, "unknown key '" + key + "'");
        return it->second;
    }

    double real(const std::string& key) const { return parse_double(key, str(key)); }
    long integer(const std::string& key) const { return parse_int(key, str(key)); }
    cplx complex(const std::string& key) const { return parse_complex(key, str(key)); }
    bool boolean(const std::string& key) const { return parse_bool(key, str(key)); }

    std::vector<double> reals(const std::string& key) const
    {
        std::vector<double> out;
        for (const auto& item : split(str(key), ','))
            out.push_back(parse_double(key, item));
        return out;
    }

    const std::map<std::string, std::string>& values() const noexcept { return values_; }

private:
    std::map<std::string, std::string> values_;
};

/// Minimal CSV writer; every row must match the header width.
class CsvWriter {
public:
    CsvWriter(const std::string& path, std::vector<std::string> header) : out_(path), width_(header.size())
    {
        if (!out_)
            throw Error(ErrorCode::InvalidArgument, "cannot open '" + path + "' for writing");
        row_strings(header);
    }

    void row(const std::vector<double>& values)
    {
        std::vector<std::string> cells;
        cells.reserve(values.size());
        for (double v : values)
            cells.push_back(fmt(v));
        row_strings(cells);
    }

    void row_strings(const std::vector<std::string>& cells)
    {
        if (cells.size() != width_)
            throw Error(ErrorCode::InvalidArgument, "CSV row width mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i)
            out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

private:
    std::ofstream out_;
    std::size_t width_;
};

} // namespace spinlab::io
