#include "hsbf/bandwidth.hpp"

#include "hsbf/error.hpp"
#include "hsbf/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

namespace hsbf {

namespace {

constexpr double kInfeasible = std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxScan = 1000000;

Eigen::MatrixXd in_domain_block(const RegressionData& data, std::size_t j)
{
  const Eigen::MatrixXd block = data.predictor_block(j);
  const auto& idx = data.in_domain();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), block.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = block.row(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

// Response coordinates in an orthonormal basis of the span of the centered
// responses, with the metric folded in: squared distances between rows equal
// squared response-norm distances, and the backfitting fixed point is
// unchanged because the fit is affine in the responses.
Eigen::MatrixXd compressed_responses(const RegressionData& data)
{
  const Eigen::VectorXd root = data.space().metric().cwiseSqrt();
  Eigen::MatrixXd z = data.response_coordinates() * root.asDiagonal();
  const Eigen::RowVectorXd centre = z.colwise().mean();
  z.rowwise() -= centre;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(z, Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > 1e-12 * std::max(1.0, s(0))) {
    ++rank;
  }
  if (rank == 0) {
    return Eigen::MatrixXd::Zero(z.rows(), 1);
  }
  return z * svd.matrixV().leftCols(rank);
}

// Fold datasets and compressed responses shared by all CV evaluations.
struct CvContext
{
  const RegressionData& data;
  std::vector<GridSpec> grids;
  SbfOptions opts;
  Eigen::MatrixXd y;
  std::vector<RegressionData> train;
  std::vector<std::vector<std::size_t>> train_rows;
  std::vector<std::vector<std::size_t>> held_out;
  std::size_t n_held = 0;

  CvContext(const RegressionData& d,
            std::vector<GridSpec> g,
            const std::vector<std::size_t>& labels,
            const SbfOptions& o)
    : data(d)
    , grids(std::move(g))
    , opts(o)
    , y(compressed_responses(d))
  {
    if (labels.size() != d.n()) {
      throw std::invalid_argument("one fold label per observation is required");
    }
    const std::size_t K = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    if (K < 2) {
      throw std::invalid_argument("cross-validation needs at least two folds");
    }
    train_rows.resize(K);
    held_out.resize(K);
    for (std::size_t i = 0; i < d.n(); ++i) {
      for (std::size_t f = 0; f < K; ++f) {
        if (labels[i] != f) {
          train_rows[f].push_back(i);
        }
      }
      if (d.contains(d.predictors().row(static_cast<Eigen::Index>(i)).transpose())) {
        held_out[labels[i]].push_back(i);
        ++n_held;
      }
    }
    if (n_held == 0) {
      throw InvariantViolation("no in-domain observation is available for validation");
    }
  }

  RegressionData& fold(std::size_t f)
  {
    // built on first use: a fold without in-domain observations raises here
    while (train.size() <= f) {
      train.push_back(data.subset(train_rows[train.size()]));
    }
    return train[f];
  }

  double score(const std::vector<double>& h)
  {
    double total = 0.0;
    for (std::size_t f = 0; f < held_out.size(); ++f) {
      if (held_out[f].empty()) {
        continue;
      }
      const RegressionData& tr = fold(f);
      const DensityEstimates dens = estimate_densities(tr, grids, h);
      Eigen::MatrixXd yf(static_cast<Eigen::Index>(dens.n_in_domain()), y.cols());
      for (std::size_t i = 0; i < dens.n_in_domain(); ++i) {
        yf.row(static_cast<Eigen::Index>(i)) = y.row(static_cast<Eigen::Index>(train_rows[f][dens.in_domain[i]]));
      }
      const AdditiveSurface surface = backfit_coordinates(dens, yf, opts);
      for (std::size_t i : held_out[f]) {
        const auto row = static_cast<Eigen::Index>(i);
        total += (y.row(row).transpose() - surface.evaluate(data.predictors().row(row).transpose())).squaredNorm();
      }
    }
    return total / static_cast<double>(n_held);
  }
};

} // namespace

double candidate_step(const RegressionData& data, std::size_t j, GridRule rule)
{
  if (j >= data.d()) {
    throw std::out_of_range("predictor index out of range");
  }
  if (rule == GridRule::simulation) {
    if (data.dim(j) == 1) {
      return 0.01;
    }
    if (data.dim(j) == 2) {
      return 0.05;
    }
    throw std::invalid_argument("the simulation rule covers predictors of dimension 1 and 2");
  }
  if (data.dim(j) == 1) {
    return 0.025;
  }
  const Eigen::MatrixXd x = in_domain_block(data, j);
  double diameter = 0.0;
  for (Eigen::Index a = 0; a < x.rows(); ++a) {
    for (Eigen::Index b = a + 1; b < x.rows(); ++b) {
      diameter = std::max(diameter, (x.row(a) - x.row(b)).norm());
    }
  }
  if (!(diameter > 0.0)) {
    throw InvariantViolation("predictor " + std::to_string(j) + " has zero diameter in the domain");
  }
  return diameter / 40.0;
}

std::vector<double> default_candidates(const RegressionData& data,
                                       const GridSpec& grid,
                                       std::size_t j,
                                       GridRule rule,
                                       std::size_t count)
{
  if (count == 0) {
    throw std::invalid_argument("candidate count must be positive");
  }
  const double b = candidate_step(data, j, rule);
  const Eigen::MatrixXd x = in_domain_block(data, j);
  std::size_t m = 1;
  while (first_uncovered_node(grid, x, b * static_cast<double>(m))) {
    if (++m > kMaxScan) {
      throw BandwidthSelectionError(j, "no bandwidth covers the grid of predictor " + std::to_string(j));
    }
  }
  const double c = b * static_cast<double>(m);
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    out.push_back(c + b * static_cast<double>(k));
  }
  return out;
}

CbsConfig default_cbs_config(const RegressionData& data, GridRule rule, std::vector<GridSpec> grids)
{
  CbsConfig cfg;
  cfg.grids = grids.empty() ? default_grids(data.domains()) : std::move(grids);
  for (std::size_t j = 0; j < data.d(); ++j) {
    cfg.candidates.push_back(default_candidates(data, cfg.grids[j], j, rule));
  }
  return cfg;
}

double cv_score(const RegressionData& data,
                const std::vector<GridSpec>& grids,
                const std::vector<double>& bandwidths,
                const std::vector<std::size_t>& labels,
                const SbfOptions& opts)
{
  CvContext ctx(data, grids, labels, opts);
  return ctx.score(bandwidths);
}

CbsResult cbs_select(const RegressionData& data, const CbsConfig& config)
{
  const std::size_t d = data.d();
  if (config.candidates.size() != d) {
    throw std::invalid_argument("one candidate list per predictor is required");
  }
  std::vector<std::vector<double>> cand = config.candidates;
  for (auto& list : cand) {
    if (list.empty()) {
      throw std::invalid_argument("candidate lists must be nonempty");
    }
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    if (!(list.front() > 0.0) || !std::isfinite(list.back())) {
      throw std::invalid_argument("candidates must be positive and finite");
    }
  }
  if (config.max_sweeps == 0) {
    throw std::invalid_argument("at least one sweep is required");
  }
  const std::size_t K = std::min(config.folds, data.n());
  if (K < 2) {
    throw std::invalid_argument("cross-validation needs at least two folds");
  }
  std::vector<GridSpec> grids = config.grids.empty() ? default_grids(data.domains()) : config.grids;
  CvContext ctx(data, std::move(grids), fold_assignment(data.n(), K, config.seed), config.sbf);

  CbsResult out;
  out.infeasible.resize(d);
  std::map<std::vector<double>, double> memo;
  auto evaluate = [&](const std::vector<double>& h, std::size_t sweep, std::size_t j) {
    if (auto it = memo.find(h); it != memo.end()) {
      return it->second;
    }
    CvEvaluation ev{ sweep, j, h, 0.0, true, {} };
    try {
      ev.score = ctx.score(h);
    } catch (const ConditionAViolation& e) {
      ev.score = kInfeasible;
      ev.feasible = false;
      ev.reason = e.what();
    } catch (const ConvergenceError& e) {
      ev.score = kInfeasible;
      ev.feasible = false;
      ev.reason = e.what();
    } catch (const InvariantViolation& e) {
      // a training fold without in-domain observations
      ev.score = kInfeasible;
      ev.feasible = false;
      ev.reason = e.what();
    }
    memo.emplace(h, ev.score);
    out.trace.push_back(ev);
    return ev.score;
  };

  std::vector<double> h(d);
  for (std::size_t j = 0; j < d; ++j) {
    h[j] = cand[j][(cand[j].size() - 1) / 2];
  }
  out.score = evaluate(h, 0, 0);
  bool moved = true;
  while (moved && out.sweeps < config.max_sweeps) {
    ++out.sweeps;
    moved = false;
    for (std::size_t j = 0; j < d; ++j) {
      std::vector<double> trial = h;
      double best = kInfeasible;
      double arg = h[j];
      for (double c : cand[j]) {
        trial[j] = c;
        const double s = evaluate(trial, out.sweeps, j);
        if (!std::isfinite(s)) {
          auto& bad = out.infeasible[j];
          if (std::find(bad.begin(), bad.end(), c) == bad.end()) {
            bad.push_back(c);
          }
        }
        if (s < best) {
          best = s;
          arg = c;
        }
      }
      if (!std::isfinite(best)) {
        throw BandwidthSelectionError(j, "every bandwidth candidate of predictor " + std::to_string(j) +
                                           " is infeasible given the others");
      }
      if (arg != h[j]) {
        h[j] = arg;
        moved = true;
      }
      out.score = best;
    }
  }
  for (auto& bad : out.infeasible) {
    std::sort(bad.begin(), bad.end());
  }
  out.hit_max_sweeps = moved;
  out.bandwidths = h;
  return out;
}

} // namespace hsbf
