#include "neuralfim/infogeo.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace nfim::infogeo {

bool is_pmf(const VecRef& p, double tol) {
  if (p.size() == 0) return false;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (!(p(i) >= 0.0) || !std::isfinite(p(i))) return false;
  return std::abs(p.sum() - 1.0) <= tol;
}

Pmf::Pmf(Eigen::VectorXd p, double tol) : p_(std::move(p)) {
  if (!is_pmf(p_, tol)) throw std::invalid_argument("not a probability mass function");
}

static void check_lengths(const VecRef& p, const VecRef& q, const char* what) {
  if (p.size() != q.size())
    throw std::invalid_argument(std::string(what) + ": length mismatch " + std::to_string(p.size()) +
                                " vs " + std::to_string(q.size()));
}

double kl(const VecRef& p, const VecRef& q) {
  check_lengths(p, q, "kl");
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) == 0.0) continue;
    if (q(i) == 0.0)
      throw std::domain_error("kl: p is not absolutely continuous w.r.t. q at index " +
                              std::to_string(i));
    s += p(i) * std::log(p(i) / q(i));
  }
  return s;
}

double js(const VecRef& p, const VecRef& q) {
  check_lengths(p, q, "js");
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double pi = p(i), qi = q(i);
    // log(p/m) = -log1p((m - p)/p) keeps precision when p and q nearly agree.
    if (pi > 0.0) s += pi * -std::log1p(0.5 * (qi - pi) / pi);
    if (qi > 0.0) s += qi * -std::log1p(0.5 * (pi - qi) / qi);
  }
  return std::max(0.5 * s, 0.0);
}

double jsd(const VecRef& p, const VecRef& q) { return std::sqrt(js(p, q)); }

double potential_distance(const VecRef& u_i, const VecRef& u_j) {
  check_lengths(u_i, u_j, "potential_distance");
  return (u_i - u_j).norm();
}

Eigen::MatrixXd jsd_matrix(const Eigen::MatrixXd& Pt) {
  const Eigen::Index n = Pt.rows();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd pi = Pt.row(i).transpose();
    for (Eigen::Index j = i + 1; j < n; ++j) D(i, j) = D(j, i) = jsd(pi, Pt.row(j).transpose());
  }
  return D;
}

double crooks_ratio(const VecRef& p, const VecRef& dp, double eps_scale) {
  check_lengths(p, dp, "crooks_ratio");
  if (!(eps_scale > 0.0)) throw std::invalid_argument("crooks_ratio: eps_scale must be positive");
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (!(p(i) > 0.0)) throw std::domain_error("crooks_ratio: p must be strictly positive");
  if (std::abs(dp.sum()) > 1e-12 * std::max(1.0, dp.cwiseAbs().sum()))
    throw std::invalid_argument("crooks_ratio: perturbation must sum to zero");
  if (dp.cwiseAbs().maxCoeff() == 0.0) return 1.0;

  const Eigen::VectorXd step = eps_scale * dp;
  const Eigen::VectorXd q = p + step;
  for (Eigen::Index i = 0; i < q.size(); ++i)
    if (q(i) < 0.0) throw std::domain_error("crooks_ratio: perturbed vector leaves the simplex");
  const double fisher = 0.125 * (step.array().square() / p.array()).sum();
  return js(p, q) / fisher;
}

Eigen::MatrixXd discrete_family_fim(const DiscreteFamily& fam, const Eigen::VectorXd& theta,
                                    const Eigen::VectorXd& h) {
  const Eigen::Index m = theta.size();
  if (h.size() != m) throw std::invalid_argument("discrete_family_fim: step size mismatch");
  if (static_cast<Eigen::Index>(fam.domain.size()) != m)
    throw std::invalid_argument("discrete_family_fim: domain size mismatch");
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto [lo, hi] = fam.domain[static_cast<std::size_t>(i)];
    if (!(h(i) > 0.0)) throw std::invalid_argument("discrete_family_fim: steps must be positive");
    if (!(theta(i) - h(i) > lo && theta(i) + h(i) < hi))
      throw std::domain_error("discrete_family_fim: parameter " + std::to_string(i) +
                              " +/- step leaves the domain");
  }

  const Eigen::VectorXd p = fam.eval(theta);
  for (Eigen::Index x = 0; x < p.size(); ++x)
    if (!(p(x) > 0.0))
      throw std::domain_error("discrete_family_fim: nonpositive probability at outcome " +
                              std::to_string(x));

  Eigen::MatrixXd dlog(p.size(), m);
  for (Eigen::Index i = 0; i < m; ++i) {
    Eigen::VectorXd tp = theta, tm = theta;
    tp(i) += h(i);
    tm(i) -= h(i);
    const Eigen::VectorXd pp = fam.eval(tp);
    const Eigen::VectorXd pm = fam.eval(tm);
    if (pp.size() != p.size() || pm.size() != p.size())
      throw std::runtime_error("discrete_family_fim: family changed its outcome count");
    for (Eigen::Index x = 0; x < p.size(); ++x) {
      if (!(pp(x) > 0.0) || !(pm(x) > 0.0))
        throw std::domain_error("discrete_family_fim: nonpositive probability at outcome " +
                                std::to_string(x));
      dlog(x, i) = (std::log(pp(x)) - std::log(pm(x))) / (2.0 * h(i));
    }
  }

  Eigen::MatrixXd I(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i; j < m; ++j)
      I(i, j) = I(j, i) = (dlog.col(i).array() * dlog.col(j).array() * p.array()).sum();
  return I;
}

DiscreteFamily discretized_gaussian(double lo, double hi, double step) {
  const auto n = static_cast<Eigen::Index>(std::floor((hi - lo) / step + 0.5)) + 1;
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(n, lo, hi);
  DiscreteFamily fam;
  fam.domain = {{-1e300, 1e300}, {0.0, 1e300}};
  fam.eval = [grid](const Eigen::VectorXd& theta) {
    const double mu = theta(0), sigma = theta(1);
    Eigen::VectorXd p = ((grid.array() - mu) / sigma).square().unaryExpr(
        [](double z) { return std::exp(-0.5 * z); });
    return Eigen::VectorXd(p / p.sum());
  };
  return fam;
}

}  // namespace nfim::infogeo
