#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hypergen {

/// Shortest-roundtrip-safe decimal rendering ("%.17g").
std::string format_double(double v);

/// Writes `m` as comma-separated rows preceded by a "# key=value ..." line.
/// Values are printed with 17 significant digits so a read back is exact.
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                      const std::string& header);

/// Reads a numeric CSV written by write_matrix_csv (or any comma-separated
/// numeric table). Lines starting with '#' are skipped.
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

/// Writes a CSV table with a column header row; cells are preformatted.
void write_table_csv(const std::filesystem::path& path, const std::vector<std::string>& columns,
                     const std::vector<std::vector<std::string>>& rows);

/// Writes text to a file, throwing IoError on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace hypergen
