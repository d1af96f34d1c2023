#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tvcflm::io {

/// Shortest round-trip decimal form ("%.17g"), with -0 and values below 1e-300 written as "0".
std::string format_double(double value);

/// A parsed CSV file: header names plus data rows (RFC 4180 quoting).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;  ///< 1-based source line of each row

    /// Column index of `name`; throws InputError naming the file when absent.
    [[nodiscard]] std::size_t column(std::string_view name, std::string_view source) const;
};

CsvTable parse_csv(std::string_view text, std::string_view source = "<memory>");
CsvTable read_csv(const std::filesystem::path& path);

/// Quote a field when it contains a comma, quote, or line break.
std::string csv_field(std::string_view field);

/// Parse a finite double; throws InputError with source:line context otherwise.
double parse_double(std::string_view text, std::string_view source, std::size_t line);

/// Long-format s,t,beta grid; rows follow s_points, columns t_points. Values below
/// 1e-12 in magnitude are written as 0.
std::string surface_long_csv(std::span<const double> s_points, std::span<const double> t_points,
                             const Eigen::MatrixXd& values);

void write_file(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace tvcflm::io
