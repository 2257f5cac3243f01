#include <doctest.h>

#include <algorithm>
#include <set>

#include "halp/sphere_kmeans.hpp"
#include "test_util.hpp"

using namespace halp;
using namespace halp::testing;

namespace {

std::vector<UnitVector> points_at(std::initializer_list<double> degrees) {
  std::vector<UnitVector> pts;
  for (double d : degrees) pts.push_back(unit2(deg(d)));
  return pts;
}

}  // namespace

TEST_SUITE_BEGIN("sphere_kmeans");

TEST_CASE("init_plusplus exhaustion and determinism") {
  const auto pts = points_at({0, 10, 90, 100});
  const auto all = init_plusplus(pts, 4, 99);
  CHECK(all.size() == 4);
  std::set<double> seen;
  for (const auto& s : all) seen.insert(angle_of(s));
  CHECK(seen.size() == 4);  // distinct points, some order

  const auto one_a = init_plusplus(pts, 1, 5);
  const auto one_b = init_plusplus(pts, 1, 5);
  CHECK(one_a.front() == one_b.front());

  CHECK_THROWS_AS(init_plusplus(pts, 5, 0), TooFewPointsError);
}

TEST_CASE("init_plusplus splits well-separated clusters") {
  // Two tight 2-D clusters; over 1000 seeds the d^2 weighting should put
  // one seed in each cluster essentially always.
  std::vector<UnitVector> pts;
  for (double d : {0.0, 1.0, 2.0, 3.0, 4.0}) pts.push_back(unit2(deg(d)));
  for (double d : {90.0, 91.0, 92.0, 93.0, 94.0}) pts.push_back(unit2(deg(d)));

  int split = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto seeds = init_plusplus(pts, 2, seed);
    int low = 0;
    for (const auto& s : seeds) low += angle_of(s) < deg(45) ? 1 : 0;
    split += low == 1 ? 1 : 0;
  }
  CHECK(split >= 990);
}

TEST_CASE("assign basics and tie-break") {
  const std::vector<UnitVector> cents = {unit2(0), unit2(deg(90))};

  CHECK(assign({unit2(0)}, cents) == std::vector<int>{0});
  CHECK(assign({unit2(deg(90))}, cents) == std::vector<int>{1});

  // Exact tie at 45 degrees goes to the lowest index.
  Eigen::VectorXd diag(2);
  diag << 1.0, 1.0;
  CHECK(assign({UnitVector::project(diag)}, cents) == std::vector<int>{0});

  // cos(10 deg) = 0.985 beats cos(80 deg) = 0.174.
  CHECK(assign({unit2(deg(10))}, cents) == std::vector<int>{0});
}

TEST_CASE("frechet_mean special cases") {
  const UnitVector a = unit2(deg(20));
  bool conv = false;
  const UnitVector single = frechet_mean({a}, 1e-3, 1.0, 100, &conv);
  CHECK(single == a);
  CHECK(conv);

  // Midpoint of two points equals slerp at 1/2.
  const UnitVector b = unit2(deg(80));
  const UnitVector mid = frechet_mean({a, b}, 1e-9, 1.0, 100, &conv);
  CHECK(conv);
  CHECK((mid.coeffs() - slerp(a, b, 0.5).coeffs()).norm() <= 1e-9);

  // Circular-mean oracle on S^1: for nearby points the Karcher mean is the
  // angular mean, here (0 + 10) / 2 = 5 degrees.
  const UnitVector five = frechet_mean(points_at({0, 10}), 1e-3, 1.0, 100, &conv);
  CHECK(std::abs(angle_of(five) - deg(5)) <= 1e-3);

  CHECK_THROWS_AS(frechet_mean({}, 1e-3, 1.0, 100), EmptyClusterError);
}

TEST_CASE("frechet_mean agrees with the circular mean on short arcs") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<UnitVector> pts;
    std::vector<double> angles;
    const double base = rng.uniform(0.0, 2.0 * kPi);
    for (int i = 0; i < 6; ++i) {
      const double a = base + rng.uniform(0.0, kPi / 2 * 0.9);
      angles.push_back(a);
      pts.push_back(unit2(a));
    }
    double mean_angle = 0.0;
    for (double a : angles) mean_angle += a;
    mean_angle /= static_cast<double>(angles.size());

    const UnitVector m = frechet_mean(pts, 1e-9, 1.0, 200);
    const double got = angle_of(m);
    // Compare on the circle (wrap to the representative nearest the mean).
    double diff = std::remainder(got - mean_angle, 2.0 * kPi);
    CHECK(std::abs(diff) <= 1e-6);
  }
}

TEST_CASE("fit recovers the two-cluster configuration") {
  const auto pts = points_at({0, 10, 90, 100});
  KMeansConfig cfg;
  cfg.k = 2;
  cfg.seed = 3;
  const PrototypeSet ps = fit(pts, cfg);
  REQUIRE(ps.prototypes.size() == 2);

  std::vector<double> got = {angle_of(ps.prototypes[0]), angle_of(ps.prototypes[1])};
  std::sort(got.begin(), got.end());
  CHECK(std::abs(got[0] - deg(5)) <= 1e-3);
  CHECK(std::abs(got[1] - deg(95)) <= 1e-3);
  CHECK(ps.converged);
}

TEST_CASE("fit with k = 1 lands on the circular mean") {
  KMeansConfig cfg;
  cfg.k = 1;
  const PrototypeSet ps = fit(points_at({0, 10}), cfg);
  REQUIRE(ps.prototypes.size() == 1);
  CHECK(std::abs(angle_of(ps.prototypes[0]) - deg(5)) <= 1e-3);
}

TEST_CASE("fit with k = n gives zero inertia") {
  const auto pts = points_at({0, 45, 90, 135});
  KMeansConfig cfg;
  cfg.k = 4;
  cfg.seed = 11;
  const PrototypeSet ps = fit(pts, cfg);
  CHECK(ps.inertia == 0.0);
  std::set<double> got;
  for (const auto& p : ps.prototypes) got.insert(angle_of(p));
  CHECK(got.size() == 4);
}

TEST_CASE("fit guards") {
  const auto pts = points_at({0, 10});
  KMeansConfig cfg;
  cfg.k = 3;
  CHECK_THROWS_AS(fit(pts, cfg), TooFewPointsError);

  cfg.k = 1;
  cfg.tolerance = 0.0;
  CHECK_THROWS_AS(fit(pts, cfg), ConfigError);
  cfg.tolerance = 1e-3;
  cfg.step_size = 1.5;
  CHECK_THROWS_AS(fit(pts, cfg), ConfigError);
}

TEST_CASE("fit is deterministic and inertia never increases") {
  Rng rng(555);
  for (int run = 0; run < 20; ++run) {
    std::vector<UnitVector> pts;
    for (int i = 0; i < 60; ++i) pts.push_back(random_unit(rng, 5));
    KMeansConfig cfg;
    cfg.k = 4 + run % 3;
    cfg.seed = static_cast<std::uint64_t>(run);

    const PrototypeSet a = fit(pts, cfg);
    const PrototypeSet b = fit(pts, cfg);
    REQUIRE(a.prototypes.size() == b.prototypes.size());
    for (std::size_t i = 0; i < a.prototypes.size(); ++i) {
      CHECK(a.prototypes[i] == b.prototypes[i]);  // bit-for-bit
    }
    CHECK(a.inertia == b.inertia);

    for (std::size_t i = 1; i < a.inertia_history.size(); ++i) {
      CHECK(a.inertia_history[i] <= a.inertia_history[i - 1]);
    }
    for (const auto& p : a.prototypes) {
      CHECK(std::abs(p.coeffs().norm() - 1.0) <= 1e-9);
    }
  }
}

TEST_SUITE_END();
