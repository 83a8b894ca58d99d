#include "neuralfim/config.hpp"
#include "neuralfim/data.hpp"
#include "neuralfim/diffusion.hpp"
#include "neuralfim/fim.hpp"
#include "neuralfim/geodesic.hpp"
#include "neuralfim/infogeo.hpp"
#include "neuralfim/jacobi.hpp"
#include "neuralfim/mds.hpp"
#include "neuralfim/nn.hpp"
#include "neuralfim/paramscan.hpp"
#include "neuralfim/pipeline.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace nfim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

Eigen::VectorXd random_pmf(std::mt19937_64& rng, int n, double min_entry) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w(i) = u(rng);
  w /= w.sum();
  return min_entry * Eigen::VectorXd::Ones(n) + (1.0 - n * min_entry) * w;
}

Eigen::MatrixXd random_points(std::mt19937_64& rng, int n, int d) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd X(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = g(rng);
  return X;
}

Eigen::MatrixXd fd_jacobian(const nn::Mlp& mlp, const Eigen::VectorXd& x, double h) {
  Eigen::MatrixXd J(mlp.output_dim(), x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Eigen::VectorXd xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    J.col(k) = (mlp.forward(xp) - mlp.forward(xm)) / (2.0 * h);
  }
  return J;
}

Outcome gaussian_family() {
  const auto fam = infogeo::discretized_gaussian();
  const Eigen::Vector2d h(1e-4, 1e-4);
  double worst_rel = 0.0, worst_off = 0.0;
  for (double sigma : {1.0, 2.0}) {
    const Eigen::MatrixXd I = infogeo::discrete_family_fim(fam, Eigen::Vector2d(0.0, sigma), h);
    const double e0 = 1.0 / (sigma * sigma), e1 = 2.0 / (sigma * sigma);
    worst_rel = std::max({worst_rel, std::abs(I(0, 0) - e0) / e0, std::abs(I(1, 1) - e1) / e1});
    worst_off = std::max(worst_off, std::abs(I(0, 1)));
  }
  return {worst_rel < 0.01 && worst_off < 1e-3,
          "max diag rel err " + fmt("%.2e", worst_rel) + ", max |offdiag| " + fmt("%.2e", worst_off)};
}

Outcome crooks() {
  std::mt19937_64 rng(101);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst4 = 0.0, worst5 = 0.0;
  int decreased = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5 + trial % 6;
    const Eigen::VectorXd p = random_pmf(rng, n, 0.05);
    Eigen::VectorXd dp(n);
    for (int i = 0; i < n; ++i) dp(i) = g(rng);
    dp.array() -= dp.mean();
    const double e4 = std::abs(infogeo::crooks_ratio(p, dp, 1e-4) - 1.0);
    const double e5 = std::abs(infogeo::crooks_ratio(p, dp, 1e-5) - 1.0);
    worst4 = std::max(worst4, e4);
    worst5 = std::max(worst5, e5);
    if (e5 < e4) ++decreased;
  }
  return {worst4 < 1e-3 && decreased == 20,
          "max |ratio-1| at 1e-4 " + fmt("%.2e", worst4) + ", at 1e-5 " + fmt("%.2e", worst5) +
              ", decreased in " + std::to_string(decreased) + "/20"};
}

Outcome diffusion_contracts() {
  std::mt19937_64 rng(202);
  double worst_row = 0.0, worst_pow = 0.0;
  int compared = 0;
  const diffusion::KernelKind kinds[] = {diffusion::KernelKind::FixedGaussian,
                                         diffusion::KernelKind::AdaptiveGaussian,
                                         diffusion::KernelKind::AlphaDecay};
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 20 + trial % 30, d = 2 + trial % 5;
    PointCloud pc;
    pc.points = random_points(rng, n, d);
    diffusion::KernelConfig cfg;
    cfg.kind = kinds[trial % 3];
    cfg.sigma = 2.0 * d;
    cfg.knn = 5;
    cfg.anisotropy = (trial % 2) ? 1.0 : 0.5;
    const auto op = diffusion::diffuse(pc, cfg);
    worst_row = std::max(worst_row, (op.P.rowwise().sum().array() - 1.0).abs().maxCoeff());
    const Eigen::VectorXd dinv = op.degree.array().rsqrt();
    const Eigen::MatrixXd S = dinv.asDiagonal() * op.P * op.degree.array().sqrt().matrix().asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()));
    if (es.eigenvalues().minCoeff() < 0.0) continue;
    const Eigen::MatrixXd P2 = diffusion::spectral_power(op, 2.0);
    worst_pow = std::max(worst_pow, (P2 - op.P * op.P).cwiseAbs().maxCoeff());
    ++compared;
  }
  return {worst_row < 1e-10 && compared > 0 && worst_pow < 1e-8,
          "max row-sum err " + fmt("%.2e", worst_row) + ", spectral t=2 vs P*P " + fmt("%.2e", worst_pow) +
              " over " + std::to_string(compared) + " unclamped operators"};
}

Outcome jacobian_exactness() {
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<int> dd(1, 8), mm(2, 32), hh(3, 24);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int d = dd(rng), m = mm(rng);
    const auto act = trial % 2 ? nn::Activation::Selu : nn::Activation::Relu;
    const auto mode = (trial / 2) % 2 ? nn::OutputMode::Linear : nn::OutputMode::Simplex;
    const auto mlp = nn::init_mlp({d, hh(rng), hh(rng), m}, act, mode, 1000 + trial);
    const Eigen::VectorXd x = random_points(rng, 1, d).transpose();
    const Eigen::MatrixXd J = mlp.jacobian_input(x);
    worst = std::max(worst, (J - fd_jacobian(mlp, x, 1e-6)).cwiseAbs().maxCoeff());
  }
  return {worst < 1e-4, "max entry err " + fmt("%.2e", worst)};
}

Outcome fim_correctness() {
  std::mt19937_64 rng(404);
  double worst = 0.0, min_eig = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + trial % 6, m = 3 + trial % 10;
    const auto act = trial % 2 ? nn::Activation::Selu : nn::Activation::Relu;
    const auto mlp = nn::init_mlp({d, 16, m}, act, nn::OutputMode::Simplex, 2000 + trial);
    const Eigen::VectorXd x = random_points(rng, 1, d).transpose();
    const auto F = fim::fim_at(mlp, x);
    infogeo::DiscreteFamily family;
    family.eval = [&mlp](const Eigen::VectorXd& theta) { return mlp.forward(theta); };
    family.domain.assign(static_cast<std::size_t>(d), {-std::numeric_limits<double>::infinity(),
                                                       std::numeric_limits<double>::infinity()});
    const Eigen::MatrixXd oracle = infogeo::discrete_family_fim(family, x, Eigen::VectorXd::Constant(d, 1e-5));
    worst = std::max(worst, (F.g - oracle).cwiseAbs().maxCoeff());
    for (auto mode : {fim::FimMode::Standard, fim::FimMode::Literal}) {
      const Eigen::MatrixXd g = fim::fim_at(mlp, x, mode).g;
      if ((g - g.transpose()).cwiseAbs().maxCoeff() != 0.0) min_eig = -1.0;
      min_eig = std::min(min_eig, linalg::jacobi_eigen(g).values.minCoeff());
    }
  }
  nn::Mlp logistic = nn::init_mlp({1, 2}, nn::Activation::Relu, nn::OutputMode::Simplex, 0);
  logistic.params()[0].W << 1.0, 0.0;
  logistic.params()[0].b.setZero();
  const double g0 = fim::fim_at(logistic, Eigen::VectorXd::Zero(1)).g(0, 0);
  const bool pass = worst < 1e-4 && std::abs(g0 - 0.25) < 1e-6 && min_eig >= -1e-8;
  return {pass, "max err vs FD oracle " + fmt("%.2e", worst) + ", logistic g(0) " + fmt("%.8f", g0) +
                    ", min eig " + fmt("%.2e", min_eig)};
}

Outcome sphere_geodesic(const config::RunConfig& cfg) {
  constexpr double pi = std::numbers::pi;
  const geodesic::SphereMetric metric;
  const Eigen::Vector2d start(pi / 4.0, 0.0), target(pi / 4.0, pi);
  auto solver = cfg.geodesic.solver;
  const auto full = geodesic::train_geodesic(metric, start, target, solver);
  solver.length_term = false;
  const auto ablation = geodesic::train_geodesic(metric, start, target, solver);
  const double rel = std::abs(full.length - pi / 2.0) / (pi / 2.0);
  const double min_colat = full.path.col(0).minCoeff();
  const double excess = ablation.length / full.length - 1.0;
  const bool pass = rel < 0.02 && full.endpoint_error < 1e-2 && min_colat < pi / 8.0 && excess >= 0.01;
  return {pass, "length " + fmt("%.5f", full.length) + " (rel err " + fmt("%.2e", rel) + "), endpoint err " +
                    fmt("%.2e", full.endpoint_error) + ", min colatitude " + fmt("%.4f", min_colat) +
                    ", ablation length " + fmt("%.5f", ablation.length) + " (+" + fmt("%.1f", 100 * excess) + "%)"};
}

Outcome swiss_roll(const config::RunConfig& base, const fs::path& scratch) {
  config::RunConfig cfg = base;
  cfg.geodesic.preset = "swiss-roll";
  const auto run = pipeline::cmd_geodesic(cfg, (scratch / "swiss_roll").string());
  std::ostringstream lens;
  for (std::size_t k = 0; k < run.results.size(); ++k)
    lens << (k ? " " : "") << fmt("%.3f", run.results[k].length) << "/" << fmt("%.3f", run.oracle_lengths[k]);
  return {run.correlation > 0.9, "pearson " + fmt("%.4f", run.correlation) + " with metric " +
                                     run.summary["metric"].get<std::string>() + "; learned/oracle " + lens.str()};
}

double mean_over(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& idx) {
  double s = 0.0;
  for (auto i : idx) s += v(i);
  return idx.empty() ? std::nan("") : s / static_cast<double>(idx.size());
}

Outcome tree_structure(const config::RunConfig& base) {
  config::RunConfig cfg = base;
  cfg.data.source = "tree";
  const PointCloud pc = pipeline::load_data(cfg.data);
  const auto r = pipeline::run_pipeline(cfg, pc);
  const auto clean = data::gen_tree(cfg.data.tree_branches, cfg.data.tree_per_branch, cfg.data.tree_dim, 0.0,
                                    cfg.data.seed);
  const auto regions = pipeline::tree_regions(clean);
  const double tj = mean_over(r.field.trace, regions.junction), tt = mean_over(r.field.trace, regions.tips);
  const double vj = mean_over(r.field.volume, regions.junction), vt = mean_over(r.field.volume, regions.tips);
  return {tj > tt && vj > vt,
          "N=" + std::to_string(pc.size()) + ", trace junction/tips " + fmt("%.4g", tj) + "/" + fmt("%.4g", tt) +
              ", volume junction/tips " + fmt("%.4g", vj) + "/" + fmt("%.4g", vt) + " (" +
              std::to_string(regions.junction.size()) + " junction, " + std::to_string(regions.tips.size()) +
              " tip points)"};
}

Outcome sensitivity(const config::RunConfig& base, const fs::path& scratch) {
  const auto t = pipeline::cmd_sensitivity(base, (scratch / "sensitivity").string());
  double worst = 1.0;
  bool all_finite = true;
  for (const Eigen::Matrix3d* m : {&t.knn, &t.noise, &t.encoder})
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (i != j) {
          if (!std::isfinite((*m)(i, j))) all_finite = false;
          else worst = std::min(worst, (*m)(i, j));
        }
  auto offdiag = [](const Eigen::Matrix3d& m) {
    return fmt("%.4f", m(0, 1)) + " " + fmt("%.4f", m(0, 2)) + " " + fmt("%.4f", m(1, 2));
  };
  return {all_finite && worst > 0.95, "min off-diagonal " + fmt("%.4f", worst) + "; knn " + offdiag(t.knn) +
                                          "; noise " + offdiag(t.noise) + "; encoder " + offdiag(t.encoder)};
}

Outcome param_scan(const config::RunConfig& base, const fs::path& scratch) {
  const auto g = pipeline::cmd_param_scan(base, (scratch / "param_scan").string());
  bool ok = g.volume.rows() == 8 && g.volume.cols() == 8 && g.failures.empty();
  for (Eigen::Index i = 0; i < g.volume.size(); ++i)
    ok = ok && std::isfinite(g.volume(i)) && g.volume(i) >= 0.0;
  double min_var = std::numeric_limits<double>::infinity();
  Eigen::Index bi = 0, bj = 0;
  for (Eigen::Index j = 0; j < g.volume.cols(); ++j) {
    const Eigen::VectorXd c = g.volume.col(j);
    min_var = std::min(min_var, (c.array() - c.mean()).square().mean());
  }
  g.volume.maxCoeff(&bi, &bj);
  return {ok && min_var > 1e-12, "finite nonnegative " + std::string(ok ? "yes" : "no") + ", min variance along t " +
                                     fmt("%.3e", min_var) + ", brightest cell t=" + fmt("%.2f", g.t_values(bi)) +
                                     " sigma=" + fmt("%.2f", g.sigma_values(bj))};
}

Outcome training_progress(const config::RunConfig& base) {
  config::RunConfig cfg = base;
  cfg.data.source = "tree";
  const PointCloud pc = pipeline::load_data(cfg.data);
  const auto a = pipeline::run_pipeline(cfg, pc);
  const auto b = pipeline::run_pipeline(cfg, pc);
  const auto& h = a.trained.loss_history;
  const bool deterministic = h == b.trained.loss_history &&
                             nn::checkpoint_to_string(a.trained.model) == nn::checkpoint_to_string(b.trained.model);
  const bool lower = h.size() >= 150 && h[149] < h[0];
  return {lower && deterministic, "epoch 1 " + fmt("%.5f", h.front()) + ", epoch 150 " +
                                      fmt("%.5f", h.size() >= 150 ? h[149] : std::nan("")) + ", deterministic " +
                                      (deterministic ? "yes" : "no")};
}

Outcome mds_criterion() {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  double worst_rise = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 8 + trial % 20;
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) D(i, j) = D(j, i) = u(rng);
    const auto init = random_points(rng, n, 2);
    const auto r = mds::smacof(D, 2, 100, 0.0, init);
    for (std::size_t k = 1; k < r.stress_history.size(); ++k)
      worst_rise = std::max(worst_rise, r.stress_history[k] - r.stress_history[k - 1]);
  }
  double worst_fit = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd X = random_points(rng, 15 + trial, 3);
    const Eigen::MatrixXd D = diffusion::pairwise_distances(X);
    const auto r = mds::smacof(D, 3, 300, 1e-14, mds::classical_mds(D, 3));
    worst_fit = std::max(worst_fit, (diffusion::pairwise_distances(r.Y) - D).cwiseAbs().maxCoeff());
  }
  return {worst_rise <= 0.0 && worst_fit < 1e-8,
          "max per-iteration stress increase " + fmt("%.2e", worst_rise) + ", max realizable distance err " +
              fmt("%.2e", worst_fit)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));
  const config::RunConfig cfg = config::from_json(config::load_document(std::nullopt));
  const fs::path scratch = fs::temp_directory_path() / "neuralfim_acceptance";
  fs::create_directories(scratch);

  const std::vector<Criterion> criteria{
      {1, "gaussian-family-fim", 5, gaussian_family},
      {2, "crooks-identity", 1, crooks},
      {3, "diffusion-contracts", 30, diffusion_contracts},
      {4, "jacobian-exactness", 60, jacobian_exactness},
      {5, "fim-correctness", 60, fim_correctness},
      {6, "sphere-geodesic", 300, [&] { return sphere_geodesic(cfg); }},
      {7, "swiss-roll-correlation", 600, [&] { return swiss_roll(cfg, scratch); }},
      {8, "tree-volume-trace-structure", 1800, [&] { return tree_structure(cfg); }},
      {9, "sensitivity", 900, [&] { return sensitivity(cfg, scratch); }},
      {10, "param-scan", 600, [&] { return param_scan(cfg, scratch); }},
      {11, "training-progress", 1800, [&] { return training_progress(cfg); }},
      {12, "mds-smacof", 1800, mds_criterion},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_seconds;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::printf("%s %2d %s: %s [%.1fs, budget %.0fs%s]\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                o.detail.c_str(), secs, c.budget_seconds, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
