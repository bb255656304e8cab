#pragma once

#include "hsbf/hilbert.hpp"
#include "hsbf/kernelgrid.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <vector>

namespace hsbf {

//! Observations (xi_i, Y_i), i = 1..n, with d predictors. Predictor j
//! occupies columns [offset(j), offset(j) + dim(j)) of `predictors()` and is
//! estimated on the box `domains()[j]`.
class RegressionData
{
public:
  RegressionData(std::vector<Box> domains,
                 Eigen::MatrixXd predictors,
                 std::vector<HilbertElement> responses);

  std::size_t n() const { return static_cast<std::size_t>(predictors_.rows()); }
  std::size_t d() const { return domains_.size(); }
  std::size_t dim(std::size_t j) const { return domains_[j].dim(); }
  std::size_t offset(std::size_t j) const { return offsets_[j]; }

  const std::vector<Box>& domains() const { return domains_; }
  const Eigen::MatrixXd& predictors() const { return predictors_; }
  //! n x dim(j) block of predictor j.
  Eigen::MatrixXd predictor_block(std::size_t j) const;
  const std::vector<HilbertElement>& responses() const { return responses_; }
  const SpaceDescriptor& space() const { return responses_.front().space(); }
  //! n x m isometric coordinates of the responses.
  const Eigen::MatrixXd& response_coordinates() const { return coords_; }

  //! Indices of observations whose predictor vector lies in D.
  const std::vector<std::size_t>& in_domain() const { return in_domain_; }
  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  //! Observations `rows` (in that order).
  RegressionData subset(const std::vector<std::size_t>& rows) const;

private:
  std::vector<Box> domains_;
  std::vector<std::size_t> offsets_;
  Eigen::MatrixXd predictors_;
  std::vector<HilbertElement> responses_;
  Eigen::MatrixXd coords_;
  std::vector<std::size_t> in_domain_;
};

//! Default estimation grids: trapezoidal tensor grids over each domain.
std::vector<GridSpec> default_grids(const std::vector<Box>& domains);

//! Kernel estimates of the densities of xi restricted to D, tabulated on the
//! estimation grids.
struct DensityEstimates
{
  std::vector<GridSpec> grids;
  std::vector<Box> domains;
  std::vector<double> bandwidths;
  //! Fraction of observations lying in D.
  double p0 = 0.0;
  //! Observations in D, as indices into the data set.
  std::vector<std::size_t> in_domain;
  //! Normalized kernel values, grid nodes x in-domain observations.
  std::vector<Eigen::MatrixXd> kernels;
  //! Marginal density of predictor j on its grid.
  std::vector<Eigen::VectorXd> marginal;
  //! joint[j][k], j != k: N_j x N_k table of the bivariate density.
  std::vector<std::vector<Eigen::MatrixXd>> joint;

  std::size_t d() const { return grids.size(); }
  std::size_t n_in_domain() const { return in_domain.size(); }
};

//! Throws ConditionAViolation when some node of some grid has no in-domain
//! observation strictly within one bandwidth, or when a marginal density
//! falls below 1e-12; std::invalid_argument on shape errors.
DensityEstimates estimate_densities(const RegressionData& data,
                                    const std::vector<GridSpec>& grids,
                                    const std::vector<double>& bandwidths);

enum class SbfInit
{
  smoother, //!< centered marginal kernel smoothers
  zero
};

struct SbfOptions
{
  double tol = 1e-4;
  int max_iter = 50;
  SbfInit init = SbfInit::smoother;
  //! Also require the sup-norm residual of the backfitting equations to be
  //! below max(tol, 1e-10) before stopping. The increment criterion is an
  //! integrated square and alone bounds the residual only by about sqrt(tol).
  bool check_residual = true;
};

//! Additive surface in isometric coordinates: f0 plus one table of component
//! values (grid nodes x m) per predictor.
struct AdditiveSurface
{
  std::vector<GridSpec> grids;
  std::vector<Box> domains;
  Eigen::VectorXd f0;
  std::vector<Eigen::MatrixXd> components;

  //! Coordinates of f_j(x_j) by multilinear interpolation on grid j.
  Eigen::VectorXd component_at(std::size_t j, const Eigen::Ref<const Eigen::VectorXd>& xj) const;
  //! Coordinates of f0 + sum_j f_j(x_j) for a full predictor vector x.
  Eigen::VectorXd evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

//! Iteration record of the backfitting loop.
struct BackfitTrace
{
  int iterations = 0;
  double convergence = 0.0;
  std::vector<double> deltas;
};

//! Backfitting on plain responses. `y` holds one row per in-domain
//! observation (in `dens.in_domain` order) in coordinates whose inner product
//! is the ordinary dot product. Throws ConvergenceError at the iteration cap.
AdditiveSurface backfit_coordinates(const DensityEstimates& dens,
                                    const Eigen::Ref<const Eigen::MatrixXd>& y,
                                    const SbfOptions& opts = {},
                                    BackfitTrace* trace = nullptr);

//! Fitted additive model. Component j at grid node x is the linear combination
//! sum_i weights(j)(x, i) (.) Y_i over in-domain observations i; f0 is the
//! in-domain response mean.
class SbfFit
{
public:
  SbfFit(const RegressionData& data,
         std::shared_ptr<const DensityEstimates> densities,
         std::vector<Eigen::MatrixXd> weights,
         BackfitTrace trace);

  const SpaceDescriptor& space() const { return space_; }
  const DensityEstimates& densities() const { return *densities_; }
  std::size_t d() const { return weights_.size(); }
  const std::vector<double>& bandwidths() const { return densities_->bandwidths; }
  const GridSpec& grid(std::size_t j) const { return densities_->grids[j]; }
  const Box& domain(std::size_t j) const { return densities_->domains[j]; }

  //! N_j x n_D weight table of component j.
  const Eigen::MatrixXd& weights(std::size_t j) const { return weights_[j]; }
  //! n_D x m coordinates of the in-domain responses.
  const Eigen::MatrixXd& response_coordinates() const { return y_; }
  //! Coordinates of all components and of f0.
  const AdditiveSurface& surface() const { return surface_; }

  HilbertElement f0() const;
  //! Component j at grid node `node`.
  HilbertElement component_at_node(std::size_t j, std::size_t node) const;

  int iterations() const { return trace_.iterations; }
  double convergence() const { return trace_.convergence; }
  const std::vector<double>& deltas() const { return trace_.deltas; }

private:
  SpaceDescriptor space_;
  std::shared_ptr<const DensityEstimates> densities_;
  std::vector<Eigen::MatrixXd> weights_;
  Eigen::MatrixXd y_;
  AdditiveSurface surface_;
  BackfitTrace trace_;
};

//! Smooth backfitting estimator in weight form.
SbfFit fit(const RegressionData& data,
           const std::vector<GridSpec>& grids,
           const std::vector<double>& bandwidths,
           const SbfOptions& opts = {});

//! Component j at x_j in D_j; OutOfDomain otherwise.
HilbertElement evaluate_component(const SbfFit& fit, std::size_t j, const Eigen::Ref<const Eigen::VectorXd>& xj);
//! f0 (+) sum_j f_j(x_j); OutOfDomain when x is not in D.
HilbertElement predict(const SbfFit& fit, const Eigen::Ref<const Eigen::VectorXd>& x);

//! Sup over components and grid nodes of the distance between f_j and the
//! right-hand side of the backfitting equation evaluated at the fit.
double residual_norm(const SbfFit& fit);
//! Norm of the quadrature of f_j against the marginal density.
double centering_norm(const SbfFit& fit, std::size_t j);

} // namespace hsbf
