#pragma once

#include <Eigen/Dense>

#include <functional>
#include <utility>
#include <vector>

namespace nfim::infogeo {

using VecRef = Eigen::Ref<const Eigen::VectorXd>;

// Finite probability mass function; construction enforces p >= 0, sum 1.
class Pmf {
 public:
  explicit Pmf(Eigen::VectorXd p, double tol = 1e-9);

  const Eigen::VectorXd& values() const { return p_; }
  Eigen::Index size() const { return p_.size(); }
  double operator[](Eigen::Index i) const { return p_(i); }

 private:
  Eigen::VectorXd p_;
};

bool is_pmf(const VecRef& p, double tol = 1e-9);

// Natural-log divergences. Inputs are assumed to be pmfs of equal length.
double kl(const VecRef& p, const VecRef& q);
double js(const VecRef& p, const VecRef& q);
double jsd(const VecRef& p, const VecRef& q);

inline double kl(const Pmf& p, const Pmf& q) { return kl(p.values(), q.values()); }
inline double js(const Pmf& p, const Pmf& q) { return js(p.values(), q.values()); }
inline double jsd(const Pmf& p, const Pmf& q) { return jsd(p.values(), q.values()); }

double potential_distance(const VecRef& u_i, const VecRef& u_j);

// Pairwise jsd between rows.
Eigen::MatrixXd jsd_matrix(const Eigen::MatrixXd& Pt);

// js(p, p + eps*dp) divided by the Fisher quadratic form (1/8) sum (eps dp_i)^2 / p_i.
double crooks_ratio(const VecRef& p, const VecRef& dp, double eps_scale);

struct DiscreteFamily {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> eval;
  std::vector<std::pair<double, double>> domain;  // open interval per parameter
};

// I_ij = sum_x (d_i log p_x)(d_j log p_x) p_x with central differences.
Eigen::MatrixXd discrete_family_fim(const DiscreteFamily& fam, const Eigen::VectorXd& theta,
                                    const Eigen::VectorXd& h);

// Normal(mu, sigma) evaluated on a uniform grid and renormalized; theta = (mu, sigma).
DiscreteFamily discretized_gaussian(double lo = -12.0, double hi = 12.0, double step = 0.004);

}  // namespace nfim::infogeo
