#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

namespace nfim::csv {

// Row-major, one row per line, every value in "%.17e" so doubles round-trip.
void write_matrix(std::ostream& out, const Eigen::MatrixXd& m,
                  const std::vector<std::string>& header = {});
void write_matrix(const std::string& path, const Eigen::MatrixXd& m,
                  const std::vector<std::string>& header = {});

std::string format_real(double v);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Splits on commas; no quoting support. Throws on missing file.
Table read_table(const std::string& path, bool has_header);

Eigen::MatrixXd read_matrix(const std::string& path, bool has_header);

}  // namespace nfim::csv
