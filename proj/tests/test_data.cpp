#include "neuralfim/csv.hpp"
#include "neuralfim/data.hpp"
#include "neuralfim/diffusion.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

using namespace nfim;
using nfim::testing::scratch_dir;
using nfim::testing::write_text;

namespace {

// Composite Simpson rule for the spiral arclength integrand.
double simpson_arclength(double a, double b, int intervals) {
  const double h = (b - a) / intervals;
  auto f = [](double s) { return std::sqrt(1.0 + s * s); };
  double sum = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return sum * h / 3.0;
}

}  // namespace

TEST_SUITE("data") {
  TEST_CASE("load_csv parses a plain 2x2 file") {
    const auto dir = scratch_dir("load_plain");
    const auto pc = data::load_csv(write_text(dir / "a.csv", "0,0\n1,1\n"), false);
    CHECK(pc.size() == 2);
    CHECK(pc.dim() == 2);
    CHECK(pc.points(1, 0) == 1.0);
    CHECK(pc.points(0, 1) == 0.0);
  }

  TEST_CASE("load_csv skips the header row") {
    const auto dir = scratch_dir("load_header");
    const auto pc = data::load_csv(write_text(dir / "a.csv", "x,y\n0.5,2\n-1,3e2\n"), true);
    CHECK(pc.dim() == 2);
    CHECK(pc.points(1, 1) == 300.0);
  }

  TEST_CASE("load_csv rejects empty, ragged and non-numeric input") {
    const auto dir = scratch_dir("load_errors");
    CHECK_THROWS_WITH_AS(data::load_csv(write_text(dir / "e.csv", ""), false), doctest::Contains("no data rows"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(data::load_csv(write_text(dir / "r.csv", "1,2\n3\n"), false),
                         doctest::Contains("ragged"), std::runtime_error);
    CHECK_THROWS_WITH_AS(data::load_csv(write_text(dir / "n.csv", "1,2\n3,abc\n"), false),
                         doctest::Contains("row 2, column 2"), std::runtime_error);
    CHECK_THROWS(data::load_csv((dir / "missing.csv").string(), false));
  }

  TEST_CASE("load_csv extracts a named label column") {
    const auto dir = scratch_dir("load_labels");
    const auto pc =
        data::load_csv(write_text(dir / "l.csv", "x,label,y\n0,3,1\n2,4,5\n"), true, std::string("label"));
    REQUIRE(pc.labels);
    CHECK(pc.dim() == 2);
    CHECK((*pc.labels)(1) == 4);
    CHECK(pc.points(1, 1) == 5.0);
  }

  TEST_CASE("save_csv round-trips doubles exactly") {
    const auto dir = scratch_dir("roundtrip");
    std::mt19937_64 rng(3);
    PointCloud pc;
    pc.points = nfim::testing::gaussian_matrix(rng, 7, 4);
    const auto path = (dir / "p.csv").string();
    data::save_csv(path, pc);
    const auto back = data::load_csv(path, true);
    CHECK(back.points == pc.points);
  }

  TEST_CASE("gen_tree counts, labels and determinism") {
    const auto pc = data::gen_tree(10, 100, 60, 0.05, 7);
    CHECK(pc.size() == 1000);
    CHECK(pc.dim() == 60);
    REQUIRE(pc.labels);
    std::set<int> seen(pc.labels->data(), pc.labels->data() + pc.labels->size());
    CHECK(seen.size() == 10);
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == 9);
    const auto again = data::gen_tree(10, 100, 60, 0.05, 7);
    CHECK(again.points == pc.points);
  }

  TEST_CASE("gen_tree single branch without noise is an evenly spaced segment") {
    const auto pc = data::gen_tree(1, 20, 5, 0.0, 11);
    const Eigen::MatrixXd D = diffusion::pairwise_distances(pc);
    const double step = D(0, 1);
    CHECK(step == doctest::Approx(1.0 / 19.0).epsilon(1e-12));
    for (int i = 0; i < 20; ++i)
      for (int j = 0; j < 20; ++j) CHECK(D(i, j) == doctest::Approx(step * std::abs(i - j)).epsilon(1e-9));
  }

  TEST_CASE("gen_tree noiseless branches have unit length") {
    const auto pc = data::gen_tree(4, 15, 3, 0.0, 2);
    for (int b = 0; b < 4; ++b) {
      const auto first = pc.points.row(b * 15);
      const auto last = pc.points.row(b * 15 + 14);
      const double span = (last - first).norm();
      CHECK(span == doctest::Approx(b == 0 ? 1.0 : 14.0 / 15.0).epsilon(1e-12));
    }
  }

  TEST_CASE("spiral arclength closed form matches quadrature") {
    constexpr double pi = std::numbers::pi;
    CHECK(data::spiral_arclength(1.5 * pi, 1.5 * pi) == 0.0);
    const double quad = simpson_arclength(1.5 * pi, 4.5 * pi, 20000);
    CHECK(std::abs(data::spiral_arclength(1.5 * pi, 4.5 * pi) - quad) < 1e-8);
  }

  TEST_CASE("gen_swiss_roll geometry and intrinsic coordinates") {
    const auto pc = data::gen_swiss_roll(500, 1, 0.0);
    CHECK(pc.size() == 500);
    REQUIRE(pc.intrinsic);
    CHECK(pc.intrinsic->cols() == 2);
    constexpr double pi = std::numbers::pi;
    for (Eigen::Index i = 0; i < pc.size(); ++i) {
      const double u = std::hypot(pc.points(i, 0), pc.points(i, 2));
      CHECK(u >= 1.5 * pi - 1e-12);
      CHECK(u <= 4.5 * pi + 1e-12);
      CHECK(pc.points(i, 0) == doctest::Approx(u * std::cos(u)).epsilon(1e-9));
      CHECK((*pc.intrinsic)(i, 0) == doctest::Approx(data::spiral_arclength(1.5 * pi, u)).epsilon(1e-9));
      CHECK((*pc.intrinsic)(i, 1) == pc.points(i, 1));
    }
  }

  TEST_CASE("add_noise is deterministic and zero level is the identity") {
    const auto pc = data::gen_tree(3, 10, 4, 0.0, 5);
    CHECK(data::add_noise(pc, 0.0, 1).points == pc.points);
    const auto a = data::add_noise(pc, 0.0005, 9);
    const auto b = data::add_noise(pc, 0.0005, 9);
    CHECK(a.points == b.points);
    CHECK(a.points != pc.points);
    CHECK(*a.labels == *pc.labels);
  }

  TEST_CASE("subsample_indices draws distinct sorted indices") {
    const auto idx = data::subsample_indices(300, 50, 3);
    CHECK(idx.size() == 50);
    CHECK(std::is_sorted(idx.begin(), idx.end()));
    CHECK(std::set<Eigen::Index>(idx.begin(), idx.end()).size() == 50);
    CHECK(idx == data::subsample_indices(300, 50, 3));
  }

  TEST_CASE("PointCloud validation") {
    PointCloud pc;
    pc.points = Eigen::MatrixXd::Zero(2, 2);
    pc.labels = Eigen::VectorXi::Zero(3);
    CHECK_THROWS_AS(pc.validate(), std::invalid_argument);
    pc.labels.reset();
    pc.points(0, 0) = std::nan("");
    CHECK_THROWS_AS(pc.validate(), std::invalid_argument);
  }

  TEST_CASE("csv writer uses full-precision scientific notation") {
    CHECK(csv::format_real(0.1) == "1.00000000000000006e-01");
  }
}
