#pragma once

#include "hsbf/sbf.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace hsbf {

//! How the candidate step b_j is chosen.
enum class GridRule
{
  simulation, //!< b_j = 0.01 for scalar predictors, 0.05 for planar ones
  application //!< b_j = 0.025 for scalar predictors, a_j / 40 otherwise, with
              //!< a_j the diameter of the in-domain values of predictor j
};

//! Step b_j of the candidate grid of predictor j.
double candidate_step(const RegressionData& data, std::size_t j, GridRule rule);

//! Candidates {c_j + b_j k : k = 0..count-1}, where c_j is the first multiple
//! of b_j for which every node of `grid` has an in-domain observation
//! strictly within that distance.
std::vector<double> default_candidates(const RegressionData& data,
                                       const GridSpec& grid,
                                       std::size_t j,
                                       GridRule rule,
                                       std::size_t count = 21);

struct CbsConfig
{
  //! One ascending list of candidates per predictor.
  std::vector<std::vector<double>> candidates;
  //! Estimation grids; the defaults of `default_grids` when empty.
  std::vector<GridSpec> grids;
  std::size_t folds = 5;
  std::size_t max_sweeps = 20;
  std::uint64_t seed = 0;
  SbfOptions sbf;
};

//! Candidate grids from `default_candidates` for every predictor.
CbsConfig default_cbs_config(const RegressionData& data, GridRule rule, std::vector<GridSpec> grids = {});

//! One evaluation of the CV criterion.
struct CvEvaluation
{
  std::size_t sweep = 0;
  std::size_t predictor = 0;
  std::vector<double> bandwidths;
  //! +infinity when some training fold could not be fitted.
  double score = 0.0;
  bool feasible = true;
  std::string reason;
};

struct CbsResult
{
  std::vector<double> bandwidths;
  double score = 0.0;
  std::size_t sweeps = 0;
  //! The sweep cap was reached while coordinates were still moving; the
  //! bandwidths are the best found so far.
  bool hit_max_sweeps = false;
  std::vector<CvEvaluation> trace;
  //! Per predictor, candidates that made some fold infeasible.
  std::vector<std::vector<double>> infeasible;
};

//! K-fold prediction error: the mean over held-out in-domain observations of
//! the squared response-norm distance between Y_i and the prediction of the
//! fit on the remaining folds. `labels` assigns each observation a fold.
//! Throws ConditionAViolation or ConvergenceError when a fold cannot be fit.
double cv_score(const RegressionData& data,
                const std::vector<GridSpec>& grids,
                const std::vector<double>& bandwidths,
                const std::vector<std::size_t>& labels,
                const SbfOptions& opts = {});

//! Coordinate-wise bandwidth selection: starting from the middle candidate of
//! each grid, cycle through the predictors and move each to the candidate
//! minimizing the CV score with the others fixed (ties to the smaller
//! bandwidth) until a full sweep leaves every coordinate unchanged. Raises
//! BandwidthSelectionError when all candidates of a predictor are infeasible.
CbsResult cbs_select(const RegressionData& data, const CbsConfig& config);

} // namespace hsbf
