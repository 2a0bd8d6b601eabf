#include "wmsindy/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace wmsindy {

namespace fs = std::filesystem;

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_matrix_csv(const fs::path& path, const std::vector<std::string>& header, const Matrix& values) {
  require(static_cast<Eigen::Index>(header.size()) == values.cols(), "header width must match matrix");
  std::string text;
  for (std::size_t c = 0; c < header.size(); ++c) text += (c ? "," : "") + header[c];
  text += '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (c) text += ',';
      text += format_double(values(r, c));
    }
    text += '\n';
  }
  write_text(path, text);
}

void write_trajectory_csv(const fs::path& path, const Trajectory& trajectory) {
  std::vector<std::string> header{"t"};
  for (int d = 1; d <= trajectory.dimension(); ++d) header.push_back("x" + std::to_string(d));
  Matrix table(trajectory.size(), trajectory.dimension() + 1);
  for (int k = 0; k < trajectory.size(); ++k) table(k, 0) = trajectory.time(k);
  table.rightCols(trajectory.dimension()) = trajectory.states;
  write_matrix_csv(path, header, table);
}

Trajectory read_trajectory_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) ++width;
  }
  if (width < 2) throw IoError(path.string() + ": need a time column and at least one state column");
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw IoError(path.string() + ":" + std::to_string(line_no) + ": not a number: " + cell);
      }
    }
    if (row.size() != width) throw IoError(path.string() + ":" + std::to_string(line_no) + ": wrong column count");
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw IoError(path.string() + ": need at least two samples");

  Trajectory tr;
  tr.t0 = rows[0][0];
  tr.dt = rows[1][0] - rows[0][0];
  if (!(tr.dt > 0.0)) throw IoError(path.string() + ": time column must increase");
  tr.states.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (std::abs(rows[k][0] - tr.time(static_cast<int>(k))) > 1e-6 * tr.dt)
      throw IoError(path.string() + ": time column is not uniformly sampled");
    for (std::size_t d = 1; d < width; ++d) tr.states(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d - 1)) = rows[k][d];
  }
  if (!tr.states.allFinite()) throw IoError(path.string() + ": non-finite state values");
  return tr;
}

void ensure_writable_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
  const fs::path probe = dir / ".write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw IoError("output directory is not writable: " + dir.string());
  }
  fs::remove(probe, ec);
}

}  // namespace wmsindy
