#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace noisyuat {

// Shortest text that round-trips at 17 significant digits.
std::string format_double(double v);

// Parses a full field as a double; "inf", "-inf" and "nan" are accepted.
double parse_double(std::string_view field, std::size_t byte_offset = 0);

std::vector<std::string_view> split_fields(std::string_view line, char sep = ',');

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

// Dense matrix CSV: one matrix row per line, no header.
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);
Eigen::MatrixXd parse_matrix_csv(std::string_view text);

// FNV-1a over the bytes of `text`, hex encoded.
std::string fnv1a_hex(std::string_view text);

}  // namespace noisyuat
