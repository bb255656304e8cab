#include "hsbf/densrec.hpp"
#include "hsbf/error.hpp"
#include "hsbf/random.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace hsbf;

namespace {

// Brute-force mass of the q = 1 kernel inside [lo, hi], by the midpoint rule.
double mass_1d(double lo, double hi, double s, double h)
{
  const int m = 200000;
  double acc = 0.0;
  for (int k = 0; k < m; ++k) {
    const double u = -1.0 + (k + 0.5) * 2.0 / m;
    const double t = s + h * u;
    if (t >= lo && t <= hi) {
      acc += 0.75 * (1.0 - u * u);
    }
  }
  return acc * 2.0 / m;
}

// Brute-force mass of the q = 2 kernel inside a box, by a 2-D midpoint rule.
double mass_2d(const Box& box, double s0, double s1, double h)
{
  const int m = 1500;
  double acc = 0.0;
  for (int a = 0; a < m; ++a) {
    const double u = -1.0 + (a + 0.5) * 2.0 / m;
    for (int b = 0; b < m; ++b) {
      const double v = -1.0 + (b + 0.5) * 2.0 / m;
      const double rr = u * u + v * v;
      if (rr >= 1.0) {
        continue;
      }
      const double t0 = s0 + h * u;
      const double t1 = s1 + h * v;
      if (t0 >= box.lower(0) && t0 <= box.upper(0) && t1 >= box.lower(1) && t1 <= box.upper(1)) {
        acc += (2.0 / std::numbers::pi) * (1.0 - rr);
      }
    }
  }
  return acc * (2.0 / m) * (2.0 / m);
}

Eigen::MatrixXd uniform_points(int n, int q, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd x(n, q);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < q; ++k) {
      x(i, k) = u(rng);
    }
  }
  return x;
}

Eigen::MatrixXd circle_points(const std::vector<double>& angles)
{
  Eigen::MatrixXd x(static_cast<Eigen::Index>(angles.size()), 2);
  for (std::size_t i = 0; i < angles.size(); ++i) {
    x(static_cast<Eigen::Index>(i), 0) = std::cos(angles[i]);
    x(static_cast<Eigen::Index>(i), 1) = std::sin(angles[i]);
  }
  return x;
}

// Independent evaluation of the least-squares CV criterion for q = 1 boxes.
double cv_oracle(const Eigen::VectorXd& y,
                 const std::vector<std::size_t>& label,
                 std::size_t folds,
                 const GridSpec& grid,
                 double lo,
                 double hi,
                 double h)
{
  auto w = [&](double s) { return 1.0 / mass_1d(lo, hi, s, h); };
  auto kern = [&](double r) {
    const double t = std::abs(r) / h;
    return t < 1.0 ? 0.75 * (1.0 - t * t) / h : 0.0;
  };
  const auto n = static_cast<std::size_t>(y.size());
  const auto G = grid.size();
  std::vector<double> wg(G);
  for (std::size_t g = 0; g < G; ++g) {
    wg[g] = w(grid.point(g)(0));
  }
  auto estimate_on_grid = [&](int skip) {
    std::vector<double> v(G, 0.0);
    for (std::size_t g = 0; g < G; ++g) {
      for (std::size_t j = 0; j < n; ++j) {
        if (static_cast<int>(label[j]) != skip) {
          v[g] += kern(grid.point(g)(0) - y(static_cast<Eigen::Index>(j)));
        }
      }
      v[g] *= wg[g];
    }
    return v;
  };
  const auto full = estimate_on_grid(-1);
  double z = 0.0;
  double sq = 0.0;
  for (std::size_t g = 0; g < G; ++g) {
    z += grid.weights()(static_cast<Eigen::Index>(g)) * full[g];
  }
  for (std::size_t g = 0; g < G; ++g) {
    sq += grid.weights()(static_cast<Eigen::Index>(g)) * (full[g] / z) * (full[g] / z);
  }
  double cross = 0.0;
  for (std::size_t f = 0; f < folds; ++f) {
    const auto part = estimate_on_grid(static_cast<int>(f));
    double zf = 0.0;
    for (std::size_t g = 0; g < G; ++g) {
      zf += grid.weights()(static_cast<Eigen::Index>(g)) * part[g];
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (label[i] != f) {
        continue;
      }
      double v = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (label[j] != f) {
          v += kern(y(static_cast<Eigen::Index>(i)) - y(static_cast<Eigen::Index>(j)));
        }
      }
      if (zf > 0.0 && v > 0.0) {
        cross += w(y(static_cast<Eigen::Index>(i))) * v / zf;
      }
    }
  }
  return sq - 2.0 * cross / static_cast<double>(n);
}

} // namespace

TEST_CASE("Epanechnikov profile integrates to one")
{
  CHECK(epanechnikov(1, 0.0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(epanechnikov(2, 0.0) == doctest::Approx(2.0 / std::numbers::pi).epsilon(1e-15));
  CHECK(epanechnikov(1, 1.0) == 0.0);
  CHECK(epanechnikov(2, 1.5) == 0.0);
  // radial integrals: q = 1, 2, 3
  for (std::size_t q : { 1u, 2u, 3u }) {
    const int m = 100000;
    double acc = 0.0;
    for (int k = 0; k < m; ++k) {
      const double r = (k + 0.5) / m;
      const double shell = q == 1 ? 2.0 : (q == 2 ? 2.0 * std::numbers::pi * r : 4.0 * std::numbers::pi * r * r);
      acc += shell * epanechnikov(q, r) / m;
    }
    CHECK(acc == doctest::Approx(1.0).epsilon(1e-8));
  }
  CHECK_THROWS_AS(epanechnikov(0, 0.5), std::invalid_argument);
}

TEST_CASE("boundary factor is one in the interior and exact at edges")
{
  const Box unit(0.0, 1.0);
  Eigen::VectorXd s(1);
  s << 0.5;
  CHECK(boundary_factor(unit, s, 0.3) == 1.0);
  s << 0.0;
  CHECK(boundary_factor(unit, s, 0.3) == doctest::Approx(2.0).epsilon(1e-14));
  for (double x : { 0.02, 0.1, 0.25, 0.9 }) {
    s << x;
    CHECK(boundary_factor(unit, s, 0.3) == doctest::Approx(1.0 / mass_1d(0.0, 1.0, x, 0.3)).epsilon(2e-5));
    CHECK(boundary_factor(unit, s, 0.3) >= 1.0);
  }
  // a bandwidth wider than the box: both sides are cut
  s << 0.5;
  CHECK(boundary_factor(unit, s, 2.0) == doctest::Approx(1.0 / mass_1d(0.0, 1.0, 0.5, 2.0)).epsilon(2e-5));
}

TEST_CASE("two-dimensional boundary factor")
{
  const Box square({ { 0.0, 1.0 }, { 0.0, 1.0 } });
  Eigen::VectorXd s(2);
  s << 0.5, 0.5;
  CHECK(boundary_factor(square, s, 0.4) == 1.0);
  s << 0.0, 0.5;
  CHECK(boundary_factor(square, s, 0.3) == doctest::Approx(2.0).epsilon(1e-10));
  s << 0.0, 0.0;
  CHECK(boundary_factor(square, s, 0.3) == doctest::Approx(4.0).epsilon(1e-10));
  s << 0.05, 0.12;
  const double brute = 1.0 / mass_2d(square, 0.05, 0.12, 0.3);
  CHECK(boundary_factor(square, s, 0.3) == doctest::Approx(brute).epsilon(2e-5));
  const Box cube({ { 0.0, 1.0 }, { 0.0, 1.0 }, { 0.0, 1.0 } });
  Eigen::VectorXd t = Eigen::VectorXd::Constant(3, 0.01);
  CHECK_THROWS_AS(boundary_factor(cube, t, 0.3), std::invalid_argument);
}

TEST_CASE("box reconstruction integrates to one and recovers a uniform density")
{
  const Box unit(0.0, 1.0);
  const GridSpec grid = GridSpec::trapezoid(unit, { 101 });
  const Eigen::MatrixXd x = uniform_points(10000, 1, 11);
  const HilbertElement f = reconstruct_box(x, unit, grid, 0.2);
  CHECK(grid.weights().dot(f.coeffs()) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK((f.coeffs().array() - 1.0).abs().maxCoeff() < 0.1);
}

TEST_CASE("two-dimensional reconstruction recovers a uniform density")
{
  const Box square({ { 0.0, 1.0 }, { 0.0, 1.0 } });
  const GridSpec grid = GridSpec::trapezoid(square, { 21, 21 });
  const Eigen::MatrixXd x = uniform_points(10000, 2, 12);
  const HilbertElement f = reconstruct_box(x, square, grid, 0.3);
  CHECK(grid.weights().dot(f.coeffs()) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK((f.coeffs().array() - 1.0).abs().maxCoeff() < 0.2);
}

TEST_CASE("bandwidth too small is reported with the uncovered node")
{
  const Box unit(0.0, 1.0);
  const GridSpec grid = GridSpec::trapezoid(unit, { 11 });
  Eigen::MatrixXd x(2, 1);
  x << 0.0, 0.05;
  try {
    reconstruct_box(x, unit, grid, 0.3);
    FAIL("expected BandwidthTooSmall");
  } catch (const BandwidthTooSmall& e) {
    CHECK(e.node() == 4);
  }
  Eigen::MatrixXd outside(1, 1);
  outside << 1.5;
  CHECK_THROWS_AS(reconstruct_box(outside, unit, grid, 0.3), OutOfDomain);
  CHECK_THROWS_AS(reconstruct_box(x, unit, grid, 0.0), std::invalid_argument);
}

TEST_CASE("circle reconstruction is normalized and symmetric")
{
  const GridSpec grid = GridSpec::circle(200);
  const Eigen::MatrixXd x = circle_points({ 0.3, -0.3, 1.0, -1.0, 2.5, -2.5 });
  const HilbertElement f = reconstruct_sphere(x, grid, 1.2);
  CHECK(grid.weights().dot(f.coeffs()) == doctest::Approx(1.0).epsilon(1e-10));
  // reflection y -> -y maps node k to node (n - k) mod n for a grid starting at angle 0
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const std::size_t m = grid.size() - k;
    if (std::abs(grid.point(k)(0) - grid.point(m)(0)) < 1e-12) {
      CHECK(f.coeffs()(static_cast<Eigen::Index>(k)) ==
            doctest::Approx(f.coeffs()(static_cast<Eigen::Index>(m))).epsilon(1e-10));
    }
  }
  CHECK_THROWS_AS(reconstruct_sphere(x, grid, std::numbers::pi), std::invalid_argument);
}

TEST_CASE("circle estimate of uniform samples is near 1 / (2 pi)")
{
  const GridSpec grid = GridSpec::circle(100);
  std::vector<double> angles;
  for (int i = 0; i < 720; ++i) {
    angles.push_back(2.0 * std::numbers::pi * (i + 0.5) / 720.0);
  }
  const HilbertElement f = reconstruct_sphere(circle_points(angles), grid, 0.5);
  CHECK((f.coeffs().array() * 2.0 * std::numbers::pi - 1.0).abs().maxCoeff() < 1e-3);
}

TEST_CASE("sphere reconstruction around the north pole depends on latitude only")
{
  const GridSpec grid = GridSpec::sphere(24, 48);
  // ring of points at polar angle 0.4, evenly spaced in longitude (matching
  // the grid's rotational symmetry)
  Eigen::MatrixXd x(48, 3);
  for (int i = 0; i < 48; ++i) {
    const double phi = 2.0 * std::numbers::pi * i / 48.0;
    x.row(i) << std::sin(0.4) * std::cos(phi), std::sin(0.4) * std::sin(phi), std::cos(0.4);
  }
  const HilbertElement f = reconstruct_sphere(x, grid, 2.9);
  CHECK(grid.weights().dot(f.coeffs()) == doctest::Approx(1.0).epsilon(1e-10));
  for (int lat = 0; lat < 24; ++lat) {
    const double ref = f.coeffs()(lat * 48);
    for (int lon = 1; lon < 48; ++lon) {
      CHECK(f.coeffs()(lat * 48 + lon) == doctest::Approx(ref).epsilon(1e-9));
    }
  }
  // more mass near the ring than at the south pole
  CHECK(f.coeffs()(0) > f.coeffs()(23 * 48));
}

TEST_CASE("cross-validation score matches a brute-force evaluation")
{
  const Box unit(0.0, 1.0);
  const GridSpec grid = GridSpec::trapezoid(unit, { 41 });
  std::mt19937_64 rng(3);
  std::gamma_distribution<double> ga(2.0, 1.0);
  std::gamma_distribution<double> gb(5.0, 1.0);
  Eigen::MatrixXd x(40, 1);
  for (int i = 0; i < 40; ++i) {
    const double a = ga(rng);
    x(i, 0) = a / (a + gb(rng));
  }
  const std::vector<double> cand{ 0.35, 0.5, 0.7, 1.0 };
  const DensityCv cv = cv_bandwidth_box(x, unit, grid, cand, 10, 42);
  REQUIRE(cv.candidates.size() == cv.scores.size());
  const auto label = fold_assignment(40, 10, 42);
  for (std::size_t c = 0; c < cv.candidates.size(); ++c) {
    const double ref = cv_oracle(x.col(0), label, 10, grid, 0.0, 1.0, cv.candidates[c]);
    CHECK(cv.scores[c] == doctest::Approx(ref).epsilon(1e-6));
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < cv.scores.size(); ++c) {
    if (cv.scores[c] < cv.scores[best]) {
      best = c;
    }
  }
  CHECK(cv.bandwidth == cv.candidates[best]);
}

TEST_CASE("candidate filtering and tie breaking")
{
  const Box unit(0.0, 1.0);
  const GridSpec grid = GridSpec::trapezoid(unit, { 21 });
  const Eigen::MatrixXd x = uniform_points(30, 1, 4);
  const DensityCv def = cv_bandwidth_box(x, unit, grid);
  CHECK(def.candidates.size() == 41);
  CHECK(def.candidates.front() == doctest::Approx(def.lower));
  CHECK(def.lower > 0.0);
  // candidates below the positivity bound are dropped
  const DensityCv filtered = cv_bandwidth_box(x, unit, grid, std::vector<double>{ def.lower * 0.5, 0.8 });
  CHECK(filtered.candidates.size() == 1);
  CHECK(filtered.bandwidth == 0.8);
  CHECK_THROWS_AS(cv_bandwidth_box(x, unit, grid, std::vector<double>{ def.lower * 0.5 }), BandwidthTooSmall);
  // equal candidates tie; the first (smallest) wins
  const DensityCv tie = cv_bandwidth_box(x, unit, grid, std::vector<double>{ 0.9, 0.9 });
  CHECK(tie.scores[0] == tie.scores[1]);
  CHECK(tie.bandwidth == 0.9);
  // the chosen bandwidth is reproducible for a fixed seed
  CHECK(cv_bandwidth_box(x, unit, grid, std::nullopt, 10, 9).bandwidth ==
        cv_bandwidth_box(x, unit, grid, std::nullopt, 10, 9).bandwidth);
}

TEST_CASE("sphere candidates stay below pi")
{
  const GridSpec grid = GridSpec::circle(60);
  const Eigen::MatrixXd x = circle_points({ 0.0, 1.0, 2.0, 3.0, 4.0, 5.0 });
  const DensityCv cv = cv_bandwidth_sphere(x, grid);
  CHECK(!cv.candidates.empty());
  for (double h : cv.candidates) {
    CHECK(h < std::numbers::pi);
    CHECK(h >= cv.lower);
  }
  SampleSet set{ x, std::nullopt };
  const HilbertElement f = reconstruct_sphere(set, grid);
  CHECK(grid.weights().dot(f.coeffs()) == doctest::Approx(1.0).epsilon(1e-10));
  set.bandwidth = 1.5;
  const HilbertElement g = reconstruct_sphere(set, grid);
  CHECK((g.coeffs() - reconstruct_sphere(x, grid, 1.5).coeffs()).norm() == 0.0);
}
