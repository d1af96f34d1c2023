#include "tvcflm/io.hpp"

#include "tvcflm/errors.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace tvcflm::io {

std::string format_double(double value) {
    if (value == 0.0 || std::abs(value) < 1e-300) return "0";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

std::size_t CsvTable::column(std::string_view name, std::string_view source) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw InputError(std::string(source) + ":1: missing required column '" + std::string(name) + "'");
}

CsvTable parse_csv(std::string_view text, std::string_view source) {
    CsvTable table;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;
    std::size_t record_line = 1;
    bool have_header = false;

    auto end_record = [&]() {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
        const bool blank = record.size() == 1 && record.front().empty();
        if (!blank) {
            if (!have_header) {
                table.header = std::move(record);
                have_header = true;
            } else {
                if (record.size() != table.header.size()) {
                    throw InputError(std::string(source) + ":" + std::to_string(record_line) + ": expected " +
                                     std::to_string(table.header.size()) + " fields, found " +
                                     std::to_string(record.size()));
                }
                table.rows.push_back(std::move(record));
                table.line_numbers.push_back(record_line);
            }
        }
        record.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (field_started && !field.empty()) {
                    throw InputError(std::string(source) + ":" + std::to_string(line) + ": stray quote in field");
                }
                in_quotes = true;
                field_started = true;
                break;
            case ',':
                record.push_back(std::move(field));
                field.clear();
                field_started = false;
                break;
            case '\r':
                break;
            case '\n':
                end_record();
                ++line;
                record_line = line;
                break;
            default:
                field.push_back(c);
                field_started = true;
        }
    }
    if (in_quotes) throw InputError(std::string(source) + ":" + std::to_string(line) + ": unterminated quoted field");
    if (field_started || !field.empty() || !record.empty()) end_record();
    if (!have_header) throw InputError(std::string(source) + ": empty CSV file");
    for (auto& h : table.header) {
        // Tolerate a UTF-8 byte-order mark and surrounding spaces in the header.
        if (h.rfind("\xEF\xBB\xBF", 0) == 0) h.erase(0, 3);
        while (!h.empty() && h.front() == ' ') h.erase(h.begin());
        while (!h.empty() && h.back() == ' ') h.pop_back();
    }
    return table;
}

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_file(path), path.string()); }

std::string csv_field(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (const char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

double parse_double(std::string_view text, std::string_view source, std::size_t line) {
    std::string buf(text);
    while (!buf.empty() && buf.front() == ' ') buf.erase(buf.begin());
    while (!buf.empty() && buf.back() == ' ') buf.pop_back();
    char* end = nullptr;
    errno = 0;
    const double value = std::strtod(buf.c_str(), &end);
    if (buf.empty() || end != buf.c_str() + buf.size() || errno == ERANGE || !std::isfinite(value)) {
        throw InputError(std::string(source) + ":" + std::to_string(line) + ": '" + std::string(text) +
                         "' is not a finite number");
    }
    return value;
}

std::string surface_long_csv(std::span<const double> s_points, std::span<const double> t_points,
                             const Eigen::MatrixXd& values) {
    std::ostringstream out;
    out << "s,t,beta\n";
    for (std::size_t i = 0; i < s_points.size(); ++i) {
        for (std::size_t j = 0; j < t_points.size(); ++j) {
            const double v = values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            out << format_double(s_points[i]) << ',' << format_double(t_points[j]) << ','
                << format_double(std::abs(v) < 1e-12 ? 0.0 : v) << '\n';
        }
    }
    return out.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw InputError("failed writing '" + path.string() + "'");
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace tvcflm::io
