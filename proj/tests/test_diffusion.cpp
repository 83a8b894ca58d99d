#include "neuralfim/diffusion.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

using namespace nfim;
using namespace nfim::diffusion;

namespace {

PointCloud cloud(const Eigen::MatrixXd& points) {
  PointCloud pc;
  pc.points = points;
  return pc;
}

DiffusionOperator random_operator(std::uint64_t seed, int n, KernelKind kind = KernelKind::FixedGaussian) {
  std::mt19937_64 rng(seed);
  KernelConfig cfg;
  cfg.kind = kind;
  cfg.sigma = 4.0;
  cfg.knn = 3;
  return diffuse(cloud(nfim::testing::gaussian_matrix(rng, n, 3)), cfg);
}

}  // namespace

TEST_SUITE("diffusion") {
  TEST_CASE("pairwise distances of a 3-4-5 triangle") {
    Eigen::MatrixXd X(2, 2);
    X << 0, 0, 3, 4;
    const Eigen::MatrixXd D = pairwise_distances(X);
    CHECK(D(0, 1) == 5.0);
    CHECK(D(1, 0) == 5.0);
    CHECK(D(0, 0) == 0.0);
  }

  TEST_CASE("pairwise distances match a scalar recomputation") {
    std::mt19937_64 rng(1);
    const Eigen::MatrixXd X = nfim::testing::gaussian_matrix(rng, 10, 3);
    const Eigen::MatrixXd D = pairwise_distances(X);
    for (int i = 0; i < 10; ++i) {
      CHECK(D(i, i) == 0.0);
      for (int j = 0; j < 10; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += (X(i, k) - X(j, k)) * (X(i, k) - X(j, k));
        CHECK(std::abs(D(i, j) - std::sqrt(s)) < 1e-12);
      }
    }
  }

  TEST_CASE("fixed gaussian kernel on a two-point distance matrix") {
    Eigen::MatrixXd D(2, 2);
    D << 0, 1, 1, 0;
    KernelConfig cfg;
    cfg.kind = KernelKind::FixedGaussian;
    cfg.sigma = 1.0;
    const Eigen::MatrixXd A = build_kernel(D, cfg);
    CHECK(A(0, 0) == 1.0);
    CHECK(A(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(A(1, 0) == A(0, 1));
  }

  TEST_CASE("adaptive gaussian equals alpha decay with beta 2 bitwise") {
    std::mt19937_64 rng(2);
    const Eigen::MatrixXd D = pairwise_distances(nfim::testing::gaussian_matrix(rng, 12, 4));
    KernelConfig a;
    a.kind = KernelKind::AdaptiveGaussian;
    a.knn = 3;
    KernelConfig b = a;
    b.kind = KernelKind::AlphaDecay;
    b.beta = 2.0;
    CHECK(build_kernel(D, a) == build_kernel(D, b));
  }

  TEST_CASE("adaptive bandwidth matches a sort-based oracle") {
    std::mt19937_64 rng(3);
    const Eigen::MatrixXd D = pairwise_distances(nfim::testing::gaussian_matrix(rng, 5, 2));
    KernelConfig cfg;
    cfg.kind = KernelKind::AlphaDecay;
    cfg.knn = 2;
    cfg.beta = 3.0;
    const Eigen::MatrixXd A = build_kernel(D, cfg);
    Eigen::VectorXd bw(5);
    for (int i = 0; i < 5; ++i) {
      std::vector<double> row(D.row(i).data(), D.row(i).data() + 0);
      for (int j = 0; j < 5; ++j) row.push_back(D(i, j));
      std::sort(row.begin(), row.end());
      bw(i) = row[2];  // row[0] is the zero self-distance
    }
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        const double expect =
            0.5 * std::exp(-std::pow(D(i, j) / bw(i), 3.0)) + 0.5 * std::exp(-std::pow(D(i, j) / bw(j), 3.0));
        CHECK(A(i, j) == doctest::Approx(expect).epsilon(1e-14));
      }
  }

  TEST_CASE("duplicate points give a zero bandwidth error naming the point") {
    Eigen::MatrixXd X(4, 2);
    X << 0, 0, 0, 0, 0, 0, 5, 5;
    KernelConfig cfg;
    cfg.kind = KernelKind::AdaptiveGaussian;
    cfg.knn = 2;
    CHECK_THROWS_WITH_AS(build_kernel(pairwise_distances(X), cfg), doctest::Contains("point 0"),
                         std::domain_error);
  }

  TEST_CASE("kernel permutation equivariance") {
    std::mt19937_64 rng(4);
    const Eigen::MatrixXd X = nfim::testing::gaussian_matrix(rng, 9, 3);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(9);
    perm.setIdentity();
    std::shuffle(perm.indices().data(), perm.indices().data() + 9, rng);
    KernelConfig cfg;
    const Eigen::MatrixXd A = build_kernel(pairwise_distances(X), cfg);
    const Eigen::MatrixXd Ap = build_kernel(pairwise_distances(perm * X), cfg);
    CHECK((Ap - perm * A * perm.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  }

  TEST_CASE("anisotropic normalization") {
    Eigen::MatrixXd A = Eigen::MatrixXd::Ones(2, 2);
    CHECK(anisotropic_normalize(A, 0.0) == A);
    const Eigen::MatrixXd K = anisotropic_normalize(A, 1.0);
    CHECK((K.array() - 0.25).abs().maxCoeff() < 1e-15);

    std::mt19937_64 rng(5);
    const Eigen::MatrixXd D = pairwise_distances(nfim::testing::gaussian_matrix(rng, 6, 2));
    KernelConfig cfg;
    cfg.kind = KernelKind::FixedGaussian;
    const Eigen::MatrixXd R = build_kernel(D, cfg);
    const Eigen::MatrixXd H = anisotropic_normalize(R, 0.5);
    const Eigen::VectorXd q = R.rowwise().sum();
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) CHECK(H(i, j) == doctest::Approx(R(i, j) / std::sqrt(q(i) * q(j))).epsilon(1e-14));
  }

  TEST_CASE("row normalization") {
    Eigen::MatrixXd K(2, 2);
    K << 1, 1, 1, 3;
    const auto op = row_normalize(K);
    CHECK(op.P(0, 0) == 0.5);
    CHECK(op.P(0, 1) == 0.5);
    CHECK(op.P(1, 0) == 0.25);
    CHECK(op.P(1, 1) == 0.75);
    CHECK((op.P * Eigen::VectorXd::Ones(2) - Eigen::VectorXd::Ones(2)).cwiseAbs().maxCoeff() < 1e-15);
    Eigen::MatrixXd Z = K;
    Z.row(1).setZero();
    CHECK_THROWS_WITH_AS(row_normalize(Z), doctest::Contains("row 1"), std::domain_error);
  }

  TEST_CASE("operator invariants on random clouds") {
    for (auto kind : {KernelKind::FixedGaussian, KernelKind::AdaptiveGaussian, KernelKind::AlphaDecay}) {
      const auto op = random_operator(6, 15, kind);
      CHECK((op.P.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-10);
      CHECK(op.P.minCoeff() >= 0.0);
      CHECK(op.P.diagonal().minCoeff() > 0.0);
    }
  }

  TEST_CASE("matrix power identities") {
    const auto op = random_operator(7, 8);
    CHECK((matrix_power(op, 1.0) - op.P).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((matrix_power(op, 5.0) - op.P * op.P * op.P * op.P * op.P).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((spectral_power(op, 2.0) - op.P * op.P).cwiseAbs().maxCoeff() < 1e-8);
    const Eigen::MatrixXd half = matrix_power(op, 2.5);
    CHECK((half.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-8);
    CHECK_THROWS_AS(matrix_power(op, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(matrix_power(op, -1.0), std::invalid_argument);
  }

  TEST_CASE("symmetric conjugate spectrum lies in [-1, 1]") {
    const auto op = random_operator(8, 20, KernelKind::AlphaDecay);
    const Eigen::VectorXd s = op.degree.array().sqrt();
    const Eigen::MatrixXd S = s.asDiagonal() * op.P * s.cwiseInverse().asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()));
    CHECK(es.eigenvalues().maxCoeff() <= 1.0 + 1e-10);
    CHECK(es.eigenvalues().minCoeff() >= -1.0 - 1e-10);
  }

  TEST_CASE("row sums preserved across fractional powers") {
    const auto op = random_operator(9, 12, KernelKind::AlphaDecay);
    for (double t : {0.3, 1.7, 3.0, 7.25, 15.0})
      CHECK((matrix_power(op, t).rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-8);
  }

  TEST_CASE("potential floor, uniform case and sign") {
    DiffusionOperator op;
    op.P = Eigen::MatrixXd::Constant(4, 4, 0.25);
    op.degree = Eigen::VectorXd::Ones(4);
    const auto U = potential(op, 3.0);
    CHECK((U.U.array() - std::log(0.25)).abs().maxCoeff() < 1e-12);

    DiffusionOperator id;
    id.P = Eigen::MatrixXd::Identity(3, 3);
    id.degree = Eigen::VectorXd::Ones(3);
    const auto V = potential(id, 1.0, 1e-7);
    CHECK(V.U(0, 1) == doctest::Approx(std::log(1e-7)));
    CHECK(V.U.maxCoeff() <= 0.0);
    CHECK(V.U.allFinite());
    CHECK_THROWS_AS(potential(id, 1.0, 0.0), std::invalid_argument);
  }

  TEST_CASE("full density normalization damps a duplicated point") {
    std::mt19937_64 rng(10);
    const Eigen::MatrixXd X = nfim::testing::gaussian_matrix(rng, 10, 2);
    Eigen::MatrixXd Xd(11, 2);
    Xd << X, X.row(0);
    KernelConfig cfg;
    cfg.kind = KernelKind::FixedGaussian;
    cfg.sigma = 2.0;
    auto delta = [&](double alpha) {
      cfg.anisotropy = alpha;
      const Eigen::MatrixXd P = diffuse(cloud(X), cfg).P;
      const Eigen::MatrixXd Pd = diffuse(cloud(Xd), cfg).P;
      double worst = 0.0;
      for (int i = 1; i < 10; ++i)
        for (int j = 1; j < 10; ++j)
          if (i != j) worst = std::max(worst, std::abs(P(i, j) - Pd(i, j)));
      return worst;
    };
    const double d0 = delta(0.0), d1 = delta(1.0);
    MESSAGE("duplicated-point transition change: alpha=0 " << d0 << ", alpha=1 " << d1);
    CHECK(std::isfinite(d1));
  }

  TEST_CASE("kernel kind names round-trip") {
    for (auto kind : {KernelKind::FixedGaussian, KernelKind::AdaptiveGaussian, KernelKind::AlphaDecay})
      CHECK(parse_kernel_kind(to_string(kind)) == kind);
    CHECK_THROWS(parse_kernel_kind("laplace"));
  }
}
