#pragma once

// CSV emission with shortest round-trip number formatting and atomic
// replacement of the target file.

#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "nleig/error.hpp"

namespace nleig {

/// Shortest decimal that parses back to exactly v; "inf", "-inf", "nan" otherwise.
inline std::string format_real(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

inline double parse_real_field(std::string_view s)
{
    if (s == "inf") return HUGE_VAL;
    if (s == "-inf") return -HUGE_VAL;
    if (s == "nan") return std::nan("");
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw ConfigError("csv: '" + std::string(s) + "' is not a number");
    }
    return v;
}

class CsvTable {
public:
    CsvTable(std::string schema, std::vector<std::string> header)
        : schema_(std::move(schema)), header_(std::move(header))
    {
    }

    class Row {
    public:
        Row& operator<<(double v)
        {
            fields_.push_back(format_real(v));
            return *this;
        }
        Row& operator<<(std::size_t v)
        {
            fields_.push_back(std::to_string(v));
            return *this;
        }
        Row& operator<<(std::string_view s)
        {
            std::string f(s);
            // fields never carry separators or line breaks
            for (char& c : f) {
                if (c == ',' || c == '\n' || c == '\r') c = ';';
            }
            fields_.push_back(std::move(f));
            return *this;
        }
        Row& operator<<(const char* s) { return *this << std::string_view(s); }

    private:
        friend class CsvTable;
        std::vector<std::string> fields_;
    };

    Row& row()
    {
        rows_.emplace_back();
        return rows_.back();
    }

    [[nodiscard]] std::string str() const
    {
        std::string out = "# " + schema_ + "\n";
        auto line = [&](const std::vector<std::string>& fields) {
            for (std::size_t i = 0; i < fields.size(); ++i) {
                if (i) out += ',';
                out += fields[i];
            }
            out += '\n';
        };
        line(header_);
        for (const auto& r : rows_) {
            if (r.fields_.size() != header_.size()) {
                throw SolverError("csv: row width does not match the header of " + schema_);
            }
            line(r.fields_);
        }
        return out;
    }

private:
    std::string schema_;
    std::vector<std::string> header_;
    std::vector<Row> rows_;
};

/// Writes text to a sibling temporary file, then renames it over path.
inline void write_atomically(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw SolverError("cannot write '" + tmp.string() + "'");
        out << text;
        out.flush();
        if (!out) throw SolverError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw SolverError("cannot rename onto '" + path.string() + "': " + ec.message());
}

/// Rows of a CSV written by CsvTable, as column name -> field.
inline std::vector<std::map<std::string, std::string>> read_csv(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read '" + path + "'");
    std::vector<std::map<std::string, std::string>> rows;
    std::vector<std::string> header;
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string f;
        while (std::getline(ss, f, ',')) out.push_back(f);
        if (!s.empty() && s.back() == ',') out.emplace_back();
        return out;
    };
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        if (header.empty()) {
            header = split(line);
            continue;
        }
        const auto fields = split(line);
        if (fields.size() != header.size()) throw ConfigError("csv: ragged row in '" + path + "'");
        std::map<std::string, std::string> row;
        for (std::size_t i = 0; i < fields.size(); ++i) row[header[i]] = fields[i];
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace nleig
