#include "neuralfim/data.hpp"

#include "neuralfim/csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

namespace nfim {

void PointCloud::validate() const {
  if (points.rows() < 1 || points.cols() < 1)
    throw std::invalid_argument("point cloud must have N >= 1 and d >= 1");
  if (!points.allFinite()) throw std::invalid_argument("point cloud has non-finite entries");
  if (labels && labels->size() != points.rows())
    throw std::invalid_argument("label count does not match point count");
  if (intrinsic && intrinsic->rows() != points.rows())
    throw std::invalid_argument("intrinsic row count does not match point count");
}

PointCloud select_rows(const PointCloud& pc, const std::vector<Eigen::Index>& rows) {
  PointCloud out;
  out.name = pc.name;
  const auto n = static_cast<Eigen::Index>(rows.size());
  out.points.resize(n, pc.dim());
  if (pc.labels) out.labels = Eigen::VectorXi(n);
  if (pc.intrinsic) out.intrinsic = Eigen::MatrixXd(n, pc.intrinsic->cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index r = rows[static_cast<std::size_t>(i)];
    if (r < 0 || r >= pc.size()) throw std::out_of_range("select_rows: index out of range");
    out.points.row(i) = pc.points.row(r);
    if (pc.labels) (*out.labels)(i) = (*pc.labels)(r);
    if (pc.intrinsic) out.intrinsic->row(i) = pc.intrinsic->row(r);
  }
  return out;
}

}  // namespace nfim

namespace nfim::data {

PointCloud load_csv(const std::string& path, bool has_header,
                    const std::optional<std::string>& label_column) {
  csv::Table t = csv::read_table(path, has_header);
  if (t.rows.empty()) throw std::runtime_error("load_csv: no data rows in '" + path + "'");

  std::optional<std::size_t> label_idx;
  if (label_column) {
    if (!has_header) throw std::invalid_argument("load_csv: label column requires a header row");
    auto it = std::find(t.header.begin(), t.header.end(), *label_column);
    if (it == t.header.end())
      throw std::invalid_argument("load_csv: label column '" + *label_column + "' not found");
    label_idx = static_cast<std::size_t>(it - t.header.begin());
  }

  const std::size_t arity = t.rows.front().size();
  const std::size_t d = arity - (label_idx ? 1 : 0);
  if (d == 0) throw std::runtime_error("load_csv: no coordinate columns");

  PointCloud pc;
  pc.name = path;
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  pc.points.resize(n, static_cast<Eigen::Index>(d));
  if (label_idx) pc.labels = Eigen::VectorXi(n);

  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (row.size() != arity)
      throw std::runtime_error("load_csv: ragged row " + std::to_string(r + 1) + " has " +
                               std::to_string(row.size()) + " cells, expected " +
                               std::to_string(arity));
    Eigen::Index col = 0;
    for (std::size_t c = 0; c < arity; ++c) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(row[c], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != row[c].size() || !std::isfinite(v))
        throw std::runtime_error("load_csv: non-numeric cell at row " + std::to_string(r + 1) +
                                 ", column " + std::to_string(c + 1) + ": '" + row[c] + "'");
      if (label_idx && c == *label_idx) {
        if (v != std::round(v))
          throw std::runtime_error("load_csv: non-integer label at row " + std::to_string(r + 1));
        (*pc.labels)(static_cast<Eigen::Index>(r)) = static_cast<int>(v);
      } else {
        pc.points(static_cast<Eigen::Index>(r), col++) = v;
      }
    }
  }
  return pc;
}

void save_csv(const std::string& path, const PointCloud& pc) {
  const Eigen::Index k = pc.intrinsic ? pc.intrinsic->cols() : 0;
  const Eigen::Index extra = (pc.labels ? 1 : 0) + k;
  Eigen::MatrixXd all(pc.size(), pc.dim() + extra);
  all.leftCols(pc.dim()) = pc.points;
  std::vector<std::string> header;
  for (Eigen::Index c = 0; c < pc.dim(); ++c) header.push_back("x" + std::to_string(c));
  Eigen::Index col = pc.dim();
  if (pc.labels) {
    all.col(col++) = pc.labels->cast<double>();
    header.emplace_back("label");
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    all.col(col++) = pc.intrinsic->col(c);
    header.push_back("intrinsic" + std::to_string(c));
  }
  csv::write_matrix(path, all, header);
}

namespace {

Eigen::VectorXd random_unit(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(dim);
  do {
    for (int i = 0; i < dim; ++i) v(i) = normal(rng);
  } while (v.norm() < 1e-12);
  return v / v.norm();
}

void add_gaussian(Eigen::MatrixXd& m, double sd, std::mt19937_64& rng) {
  if (sd == 0.0) return;
  std::normal_distribution<double> normal(0.0, sd);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) += normal(rng);
}

}  // namespace

PointCloud gen_tree(int n_branches, int points_per_branch, int dim, double noise_sd,
                    std::uint64_t seed) {
  if (n_branches < 1) throw std::invalid_argument("gen_tree: n_branches must be >= 1");
  if (points_per_branch < 1) throw std::invalid_argument("gen_tree: points_per_branch must be >= 1");
  if (dim < 2) throw std::invalid_argument("gen_tree: dim must be >= 2");
  if (noise_sd < 0) throw std::invalid_argument("gen_tree: noise_sd must be >= 0");

  std::mt19937_64 rng(seed);
  const Eigen::Index n = static_cast<Eigen::Index>(n_branches) * points_per_branch;
  PointCloud pc;
  pc.name = "tree";
  pc.points.resize(n, dim);
  pc.labels = Eigen::VectorXi(n);
  pc.intrinsic = Eigen::MatrixXd(n, 2);

  for (int b = 0; b < n_branches; ++b) {
    Eigen::VectorXd start = Eigen::VectorXd::Zero(dim);
    if (b > 0) {
      // Attach to a noiseless point of an earlier branch.
      std::uniform_int_distribution<Eigen::Index> pick(0, static_cast<Eigen::Index>(b) * points_per_branch - 1);
      start = pc.points.row(pick(rng)).transpose();
    }
    const Eigen::VectorXd dir = random_unit(rng, dim);
    for (int i = 0; i < points_per_branch; ++i) {
      // Branch 0 includes its origin; later branches start one step past the
      // attachment point, which already exists on the parent.
      double s = 0.0;
      if (b == 0)
        s = points_per_branch > 1 ? static_cast<double>(i) / (points_per_branch - 1) : 0.0;
      else
        s = static_cast<double>(i + 1) / points_per_branch;
      const Eigen::Index row = static_cast<Eigen::Index>(b) * points_per_branch + i;
      pc.points.row(row) = (start + s * dir).transpose();
      (*pc.labels)(row) = b;
      (*pc.intrinsic)(row, 0) = b;
      (*pc.intrinsic)(row, 1) = s;
    }
  }
  add_gaussian(pc.points, noise_sd, rng);
  return pc;
}

double spiral_arclength(double a, double b) {
  auto antiderivative = [](double s) {
    const double r = std::sqrt(1.0 + s * s);
    return 0.5 * (s * r + std::asinh(s));
  };
  return antiderivative(b) - antiderivative(a);
}

PointCloud gen_swiss_roll(int n, std::uint64_t seed, double noise_sd) {
  if (n < 2) throw std::invalid_argument("gen_swiss_roll: n must be >= 2");
  if (noise_sd < 0) throw std::invalid_argument("gen_swiss_roll: noise_sd must be >= 0");
  constexpr double pi = std::numbers::pi;
  const double u_lo = 1.5 * pi;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  PointCloud pc;
  pc.name = "swiss_roll";
  pc.points.resize(n, 3);
  pc.intrinsic = Eigen::MatrixXd(n, 2);
  for (int i = 0; i < n; ++i) {
    const double u = u_lo + 3.0 * pi * unit(rng);
    const double v = 21.0 * unit(rng);
    pc.points.row(i) << u * std::cos(u), v, u * std::sin(u);
    (*pc.intrinsic)(i, 0) = spiral_arclength(u_lo, u);
    (*pc.intrinsic)(i, 1) = v;
  }
  add_gaussian(pc.points, noise_sd, rng);
  return pc;
}

PointCloud add_noise(const PointCloud& pc, double level, std::uint64_t seed) {
  if (level < 0) throw std::invalid_argument("add_noise: level must be >= 0");
  PointCloud out = pc;
  std::mt19937_64 rng(seed);
  add_gaussian(out.points, level, rng);
  return out;
}

std::vector<Eigen::Index> subsample_indices(Eigen::Index total, Eigen::Index n,
                                            std::uint64_t seed) {
  if (n < 0 || n > total) throw std::invalid_argument("subsample_indices: n out of range");
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(total));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, total - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(n));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace nfim::data
