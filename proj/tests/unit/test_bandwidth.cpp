#include "hsbf/bandwidth.hpp"
#include "hsbf/error.hpp"
#include "hsbf/random.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace hsbf;

namespace {

RegressionData scalar_curve(int n, std::uint64_t seed, double noise = 0.3)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> e(0.0, noise);
  Eigen::MatrixXd x(n, 1);
  std::vector<HilbertElement> y;
  const auto space = SpaceDescriptor::euclidean(1);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = u(rng);
    Eigen::VectorXd v(1);
    v << std::sin(2.0 * std::numbers::pi * x(i, 0)) + e(rng);
    y.emplace_back(space, v);
  }
  return RegressionData({ Box(0.0, 1.0) }, x, y);
}

RegressionData composition_data(int n, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> e(0.0, 0.2);
  Eigen::MatrixXd x(n, 2);
  std::vector<HilbertElement> y;
  const auto space = SpaceDescriptor::simplex(3);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = u(rng);
    x(i, 1) = u(rng);
    Eigen::VectorXd c(3);
    c << x(i, 0) + e(rng), -x(i, 1) * x(i, 1) + e(rng), e(rng);
    y.push_back(clr_inv(c.array() - c.mean(), space));
  }
  return RegressionData({ Box(0.0, 1.0), Box(0.0, 1.0) }, x, y);
}

// Brute-force CV criterion through the public weight-form fit and predict.
double cv_oracle(const RegressionData& data,
                 const std::vector<GridSpec>& grids,
                 const std::vector<double>& h,
                 const std::vector<std::size_t>& labels,
                 std::size_t folds)
{
  SbfOptions tight;
  tight.tol = 1e-24;
  tight.max_iter = 2000;
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < data.n(); ++i) {
      if (labels[i] != f) {
        rows.push_back(i);
      }
    }
    const SbfFit m = fit(data.subset(rows), grids, h, tight);
    for (std::size_t i = 0; i < data.n(); ++i) {
      if (labels[i] == f) {
        const Eigen::VectorXd x = data.predictors().row(static_cast<Eigen::Index>(i)).transpose();
        const double dist = distance(data.responses()[i], predict(m, x));
        total += dist * dist;
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

} // namespace

TEST_CASE("CV score agrees with a brute-force evaluation")
{
  const RegressionData data = composition_data(60, 1);
  const auto grids = default_grids(data.domains());
  const auto labels = fold_assignment(data.n(), 5, 3);
  SbfOptions tight;
  tight.tol = 1e-24;
  tight.max_iter = 2000;
  for (const std::vector<double>& h : { std::vector<double>{ 0.25, 0.3 }, std::vector<double>{ 0.4, 0.2 } }) {
    const double got = cv_score(data, grids, h, labels, tight);
    CHECK(got == doctest::Approx(cv_oracle(data, grids, h, labels, 5)).epsilon(1e-8));
  }
}

TEST_CASE("single candidate per coordinate is returned after one sweep")
{
  const RegressionData data = composition_data(50, 2);
  CbsConfig cfg;
  cfg.candidates = { { 0.3 }, { 0.35 } };
  const CbsResult r = cbs_select(data, cfg);
  CHECK(r.bandwidths == std::vector<double>{ 0.3, 0.35 });
  CHECK(r.sweeps == 1);
  CHECK(!r.hit_max_sweeps);
  CHECK(r.trace.size() == 1);
}

TEST_CASE("one predictor: coordinate search equals exhaustive search")
{
  const RegressionData data = scalar_curve(150, 5);
  CbsConfig cfg;
  cfg.grids = default_grids(data.domains());
  cfg.candidates.resize(1);
  for (int k = 0; k < 25; ++k) {
    cfg.candidates[0].push_back(0.04 + 0.04 * k);
  }
  cfg.seed = 17;
  const CbsResult r = cbs_select(data, cfg);
  const auto labels = fold_assignment(data.n(), cfg.folds, cfg.seed);
  double best = std::numeric_limits<double>::infinity();
  double arg = 0.0;
  for (double h : cfg.candidates[0]) {
    double s = std::numeric_limits<double>::infinity();
    try {
      s = cv_score(data, cfg.grids, { h }, labels);
    } catch (const ConditionAViolation&) {
    }
    if (s < best) {
      best = s;
      arg = h;
    }
  }
  CHECK(r.score <= best + 1e-12);
  CHECK(r.bandwidths[0] == arg);
  CHECK(r.bandwidths[0] > cfg.candidates[0].front());
  CHECK(r.bandwidths[0] < cfg.candidates[0].back());
}

TEST_CASE("ties go to the smaller bandwidth")
{
  // constant responses are predicted exactly by every bandwidth
  const RegressionData base = scalar_curve(40, 6);
  std::vector<HilbertElement> y(base.n(), HilbertElement(SpaceDescriptor::euclidean(1), Eigen::VectorXd::Ones(1)));
  const RegressionData data(base.domains(), base.predictors(), y);
  CbsConfig cfg;
  cfg.candidates = { { 0.3, 0.4, 0.5, 0.6 } };
  const CbsResult r = cbs_select(data, cfg);
  CHECK(r.score == doctest::Approx(0.0).scale(1.0).epsilon(1e-20));
  CHECK(r.bandwidths[0] == 0.3);
}

TEST_CASE("coordinate moves never increase the criterion and are deterministic")
{
  const RegressionData data = composition_data(80, 7);
  CbsConfig cfg = default_cbs_config(data, GridRule::simulation);
  for (auto& c : cfg.candidates) {
    // thin the grid to keep the test short
    std::vector<double> thin;
    for (std::size_t k = 0; k < c.size(); k += 4) {
      thin.push_back(c[k] + 0.15);
    }
    c = thin;
  }
  cfg.seed = 4;
  const CbsResult a = cbs_select(data, cfg);
  const CbsResult b = cbs_select(data, cfg);
  CHECK(a.bandwidths == b.bandwidths);
  CHECK(a.score == b.score);
  CHECK(a.trace.size() == b.trace.size());
  CHECK(a.score <= a.trace.front().score);
  // the final vector is a coordinate-wise minimum
  const auto labels = fold_assignment(data.n(), cfg.folds, cfg.seed);
  for (std::size_t j = 0; j < 2; ++j) {
    for (double c : cfg.candidates[j]) {
      auto h = a.bandwidths;
      h[j] = c;
      try {
        CHECK(cv_score(data, cfg.grids, h, labels) >= a.score - 1e-12);
      } catch (const ConditionAViolation&) {
      }
    }
  }
}

TEST_CASE("infeasible candidates are skipped and recorded")
{
  const RegressionData data = scalar_curve(60, 8);
  CbsConfig cfg;
  cfg.candidates = { { 0.001, 0.2, 0.3 } };
  const CbsResult r = cbs_select(data, cfg);
  REQUIRE(r.infeasible[0].size() == 1);
  CHECK(r.infeasible[0][0] == 0.001);
  CHECK(r.bandwidths[0] != 0.001);
  bool logged = false;
  for (const auto& ev : r.trace) {
    if (!ev.feasible) {
      logged = true;
      CHECK(!ev.reason.empty());
    }
  }
  CHECK(logged);
  cfg.candidates = { { 0.001, 0.002 } };
  CHECK_THROWS_AS(cbs_select(data, cfg), BandwidthSelectionError);
  cfg.candidates = {};
  CHECK_THROWS_AS(cbs_select(data, cfg), std::invalid_argument);
}

TEST_CASE("sweep cap returns the best-so-far with a warning flag")
{
  const RegressionData data = composition_data(60, 9);
  CbsConfig cfg;
  cfg.candidates = { { 0.2, 0.3, 0.4, 0.5, 0.6, 0.7 }, { 0.2, 0.3, 0.4, 0.5, 0.6, 0.7 } };
  cfg.max_sweeps = 1;
  const CbsResult capped = cbs_select(data, cfg);
  cfg.max_sweeps = 20;
  const CbsResult full = cbs_select(data, cfg);
  // with one sweep the flag is raised exactly when a coordinate moved
  CHECK(capped.sweeps == 1);
  CHECK(full.score <= capped.score);
  if (full.sweeps > 1) {
    CHECK(capped.hit_max_sweeps);
  }
  CHECK(!full.hit_max_sweeps);
}

TEST_CASE("default candidate grids")
{
  const RegressionData data = composition_data(100, 10);
  const auto grids = default_grids(data.domains());
  const auto c = default_candidates(data, grids[0], 0, GridRule::simulation);
  REQUIRE(c.size() == 21);
  CHECK(c[1] - c[0] == doctest::Approx(0.01));
  // c_0 is the first multiple of the step satisfying condition (A)
  const Eigen::MatrixXd x = data.predictor_block(0);
  CHECK(!first_uncovered_node(grids[0], x, c[0]));
  if (c[0] > 0.015) {
    CHECK(first_uncovered_node(grids[0], x, c[0] - 0.01));
  }
  CHECK(std::abs(c[0] / 0.01 - std::round(c[0] / 0.01)) < 1e-9);

  // planar predictor: step 0.05
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd x2(80, 2);
  std::vector<HilbertElement> y;
  for (int i = 0; i < 80; ++i) {
    x2.row(i) << u(rng), u(rng);
    y.emplace_back(SpaceDescriptor::euclidean(1), Eigen::VectorXd::Constant(1, u(rng)));
  }
  const RegressionData planar({ Box({ { 0.0, 1.0 }, { 0.0, 1.0 } }) }, x2, y);
  const auto g2 = default_grids(planar.domains());
  const auto c2 = default_candidates(planar, g2[0], 0, GridRule::simulation);
  CHECK(c2[1] - c2[0] == doctest::Approx(0.05));
  CHECK(!first_uncovered_node(g2[0], x2, c2[0]));

  // application rule: 0.025 for scalar predictors, a_j / 40 for planar ones
  CHECK(candidate_step(data, 0, GridRule::application) == 0.025);
  const Eigen::MatrixXd xd = planar.predictor_block(0);
  double diam = 0.0;
  for (Eigen::Index a = 0; a < xd.rows(); ++a) {
    for (Eigen::Index b = 0; b < xd.rows(); ++b) {
      diam = std::max(diam, (xd.row(a) - xd.row(b)).norm());
    }
  }
  CHECK(candidate_step(planar, 0, GridRule::application) == doctest::Approx(diam / 40.0).epsilon(1e-14));
  const auto cd = default_candidates(planar, g2[0], 0, GridRule::application, 5);
  CHECK(cd.size() == 5);
  CHECK(!first_uncovered_node(g2[0], x2, cd[0]));
}
