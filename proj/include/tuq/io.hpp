/// @file  io.hpp
/// @brief Formatting and file helpers shared by the writers.

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace tuq {

/// Shortest round-trippable decimal form (17 significant digits).
std::string format_double(double v);

/// Creates the directory (and parents) if missing.
void ensure_directory(const std::string& dir);

/// Writes rows of already-formatted cells as comma-separated lines under a
/// header. Deterministic byte-for-byte for identical input.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// Writes a matrix as CSV, one row per line, 17 significant digits.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& M);

/// Reads a matrix written by write_matrix_csv.
Eigen::MatrixXd read_matrix_csv(const std::string& path);

/// Whole-file read, for byte-identity checks and tests.
std::string read_file_bytes(const std::string& path);

} // namespace tuq
