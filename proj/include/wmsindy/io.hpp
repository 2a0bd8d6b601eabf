#pragma once

#include "wmsindy/common.hpp"
#include "wmsindy/dynamics.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace wmsindy {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 17 significant digits, enough to round-trip any double.
std::string format_double(double value);

/// Header `t,x1,...,xD`.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory);
Trajectory read_trajectory_csv(const std::filesystem::path& path);

/// Plain numeric matrix with a header row.
void write_matrix_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const Matrix& values);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Creates the directory if needed and checks a file can be written there.
void ensure_writable_directory(const std::filesystem::path& dir);

}  // namespace wmsindy
