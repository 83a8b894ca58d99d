#include "neuralfim/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nfim::csv {

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17e", v);
  return buf;
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m,
                  const std::vector<std::string>& header) {
  if (!header.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c) out << ',';
      out << header[c];
    }
    out << '\n';
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_real(m(r, c));
    }
    out << '\n';
  }
}

void write_matrix(const std::string& path, const Eigen::MatrixXd& m,
                  const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_matrix(out, m, header);
}

static std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

static std::string trim(std::string s) {
  const char* ws = " \t\r\n";
  s.erase(0, s.find_first_not_of(ws));
  s.erase(s.find_last_not_of(ws) + 1);
  return s;
}

Table read_table(const std::string& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open file '" + path + "'");
  Table t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    auto cells = split_line(line);
    for (auto& c : cells) c = trim(c);
    if (first && has_header) {
      t.header = std::move(cells);
    } else {
      t.rows.push_back(std::move(cells));
    }
    first = false;
  }
  return t;
}

Eigen::MatrixXd read_matrix(const std::string& path, bool has_header) {
  Table t = read_table(path, has_header);
  if (t.rows.empty()) throw std::runtime_error("load_csv: no data rows in '" + path + "'");
  const std::size_t cols = t.rows.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r].size() != cols)
      throw std::runtime_error("load_csv: ragged row " + std::to_string(r + 1));
    for (std::size_t c = 0; c < cols; ++c) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(t.rows[r][c], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != t.rows[r][c].size() || !std::isfinite(v))
        throw std::runtime_error("load_csv: non-numeric cell at row " + std::to_string(r + 1) +
                                 ", column " + std::to_string(c + 1) + ": '" + t.rows[r][c] + "'");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return m;
}

}  // namespace nfim::csv
