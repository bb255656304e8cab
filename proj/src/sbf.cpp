#include "hsbf/sbf.hpp"

#include "hsbf/error.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hsbf {

namespace {

constexpr double kMarginalFloor = 1e-12;
// Residual target used when `tol` is below what rounding allows.
constexpr double kResidualFloor = 1e-10;

void require(bool ok, const std::string& msg)
{
  if (!ok) {
    throw std::invalid_argument(msg);
  }
}

} // namespace

RegressionData::RegressionData(std::vector<Box> domains,
                               Eigen::MatrixXd predictors,
                               std::vector<HilbertElement> responses)
  : domains_(std::move(domains))
  , predictors_(std::move(predictors))
  , responses_(std::move(responses))
{
  require(!domains_.empty(), "at least one predictor is required");
  require(!responses_.empty(), "at least one observation is required");
  require(static_cast<std::size_t>(predictors_.rows()) == responses_.size(),
          "predictor rows and responses differ in number");
  std::size_t total = 0;
  for (const auto& box : domains_) {
    require(box.dim() >= 1, "every domain needs at least one axis");
    offsets_.push_back(total);
    total += box.dim();
  }
  require(static_cast<std::size_t>(predictors_.cols()) == total,
          "predictor columns do not match the domain dimensions");
  if (!predictors_.allFinite()) {
    throw InvariantViolation("predictors must be finite");
  }
  coords_ = coordinate_matrix(responses_);
  for (std::size_t i = 0; i < n(); ++i) {
    if (contains(predictors_.row(static_cast<Eigen::Index>(i)).transpose())) {
      in_domain_.push_back(i);
    }
  }
  if (in_domain_.empty()) {
    throw InvariantViolation("no observation lies in the estimation domain D");
  }
}

Eigen::MatrixXd RegressionData::predictor_block(std::size_t j) const
{
  return predictors_.middleCols(static_cast<Eigen::Index>(offsets_[j]),
                                static_cast<Eigen::Index>(dim(j)));
}

bool RegressionData::contains(const Eigen::Ref<const Eigen::VectorXd>& x) const
{
  if (x.size() != predictors_.cols()) {
    return false;
  }
  for (std::size_t j = 0; j < d(); ++j) {
    if (!domains_[j].contains(x.segment(static_cast<Eigen::Index>(offsets_[j]),
                                        static_cast<Eigen::Index>(dim(j))))) {
      return false;
    }
  }
  return true;
}

RegressionData RegressionData::subset(const std::vector<std::size_t>& rows) const
{
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), predictors_.cols());
  std::vector<HilbertElement> y;
  y.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r] < n(), "subset index out of range");
    x.row(static_cast<Eigen::Index>(r)) = predictors_.row(static_cast<Eigen::Index>(rows[r]));
    y.push_back(responses_[rows[r]]);
  }
  return RegressionData(domains_, std::move(x), std::move(y));
}

std::vector<GridSpec> default_grids(const std::vector<Box>& domains)
{
  std::vector<GridSpec> grids;
  grids.reserve(domains.size());
  for (const auto& box : domains) {
    grids.push_back(GridSpec::trapezoid(box));
  }
  return grids;
}

DensityEstimates estimate_densities(const RegressionData& data,
                                    const std::vector<GridSpec>& grids,
                                    const std::vector<double>& bandwidths)
{
  const std::size_t d = data.d();
  require(grids.size() == d, "one grid per predictor is required");
  require(bandwidths.size() == d, "one bandwidth per predictor is required");

  DensityEstimates est;
  est.grids = grids;
  est.domains = data.domains();
  est.bandwidths = bandwidths;
  est.in_domain = data.in_domain();
  est.p0 = static_cast<double>(est.in_domain.size()) / static_cast<double>(data.n());
  const auto nd = static_cast<Eigen::Index>(est.in_domain.size());

  est.kernels.resize(d);
  est.marginal.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    require(grids[j].dim() == data.dim(j), "grid " + std::to_string(j) + " has wrong dimension");
    require(bandwidths[j] > 0.0 && std::isfinite(bandwidths[j]),
            "bandwidth " + std::to_string(j) + " must be positive and finite");
    Eigen::MatrixXd xj(nd, static_cast<Eigen::Index>(data.dim(j)));
    const Eigen::MatrixXd block = data.predictor_block(j);
    for (Eigen::Index i = 0; i < nd; ++i) {
      xj.row(i) = block.row(static_cast<Eigen::Index>(est.in_domain[static_cast<std::size_t>(i)]));
    }
    if (auto node = first_uncovered_node(grids[j], xj, bandwidths[j])) {
      throw ConditionAViolation(j, *node,
                                "grid node " + std::to_string(*node) + " of predictor " +
                                  std::to_string(j) +
                                  " has no in-domain observation within the bandwidth " +
                                  std::to_string(bandwidths[j]));
    }
    est.kernels[j] = normalized_kernel_matrix(data.domains()[j], grids[j], xj, bandwidths[j]).values;
    est.marginal[j] = est.kernels[j].rowwise().sum() / static_cast<double>(nd);
    Eigen::Index low = 0;
    if (est.marginal[j].minCoeff(&low) < kMarginalFloor) {
      throw ConditionAViolation(j, static_cast<std::size_t>(low),
                                "marginal density of predictor " + std::to_string(j) +
                                  " vanishes at grid node " + std::to_string(low));
    }
  }
  est.joint.assign(d, std::vector<Eigen::MatrixXd>(d));
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t k = j + 1; k < d; ++k) {
      est.joint[j][k] = est.kernels[j] * est.kernels[k].transpose() / static_cast<double>(nd);
      est.joint[k][j] = est.joint[j][k].transpose();
    }
  }
  return est;
}

namespace {

// Linear operators of the discretized backfitting equations
//   F_j = T_j - sum_{k != j} P_jk F_k,
// with T_j = S_j Y - 1 ybar^T.
struct Operators
{
  std::vector<Eigen::MatrixXd> smoother; // S_j, N_j x n_D
  std::vector<std::vector<Eigen::MatrixXd>> projection; // P_jk, N_j x N_k
};

Operators build_operators(const DensityEstimates& dens)
{
  const std::size_t d = dens.d();
  const double nd = static_cast<double>(dens.n_in_domain());
  Operators ops;
  ops.smoother.resize(d);
  ops.projection.assign(d, std::vector<Eigen::MatrixXd>(d));
  for (std::size_t j = 0; j < d; ++j) {
    const Eigen::VectorXd inv = dens.marginal[j].cwiseInverse();
    ops.smoother[j] = (inv / nd).asDiagonal() * dens.kernels[j];
    for (std::size_t k = 0; k < d; ++k) {
      if (k != j) {
        ops.projection[j][k] =
          inv.asDiagonal() * dens.joint[j][k] * dens.grids[k].weights().asDiagonal();
      }
    }
  }
  return ops;
}

std::vector<Eigen::MatrixXd> targets(const Operators& ops, const Eigen::Ref<const Eigen::MatrixXd>& y)
{
  const Eigen::RowVectorXd ybar = y.colwise().mean();
  std::vector<Eigen::MatrixXd> t(ops.smoother.size());
  for (std::size_t j = 0; j < t.size(); ++j) {
    t[j] = ops.smoother[j] * y;
    t[j].rowwise() -= ybar;
  }
  return t;
}

// Quadrature of the squared norm of the rows of `diff` (after mapping by
// `metric_map` when given).
double integrated_sq_norm(const Eigen::MatrixXd& diff,
                          const Eigen::VectorXd& weights,
                          const Eigen::MatrixXd* metric_map)
{
  if (metric_map != nullptr) {
    const Eigen::MatrixXd mapped = diff * (*metric_map);
    return weights.dot(mapped.rowwise().squaredNorm());
  }
  return weights.dot(diff.rowwise().squaredNorm());
}

// Largest response-norm violation of the backfitting equations over all
// components and grid nodes.
double sup_residual(const DensityEstimates& dens,
                    const Operators& ops,
                    const std::vector<Eigen::MatrixXd>& t,
                    const std::vector<Eigen::MatrixXd>& f,
                    const Eigen::MatrixXd* metric_map)
{
  double worst = 0.0;
  for (std::size_t j = 0; j < dens.d(); ++j) {
    Eigen::MatrixXd r = f[j] - t[j];
    for (std::size_t k = 0; k < dens.d(); ++k) {
      if (k != j) {
        r.noalias() += ops.projection[j][k] * f[k];
      }
    }
    const double v = metric_map != nullptr ? (r * (*metric_map)).rowwise().norm().maxCoeff()
                                           : r.rowwise().norm().maxCoeff();
    worst = std::max(worst, v);
  }
  return worst;
}

std::vector<Eigen::MatrixXd> solve(const DensityEstimates& dens,
                                   const Operators& ops,
                                   const Eigen::Ref<const Eigen::MatrixXd>& y,
                                   const Eigen::MatrixXd* metric_map,
                                   const SbfOptions& opts,
                                   BackfitTrace& trace)
{
  require(opts.tol > 0.0 && opts.max_iter >= 1, "tolerance must be positive and max_iter >= 1");
  const std::size_t d = dens.d();
  const auto t = targets(ops, y);
  std::vector<Eigen::MatrixXd> f(d);
  for (std::size_t j = 0; j < d; ++j) {
    f[j] = opts.init == SbfInit::smoother ? t[j] : Eigen::MatrixXd::Zero(t[j].rows(), t[j].cols());
  }
  trace = {};
  Eigen::MatrixXd next;
  for (int r = 1; r <= opts.max_iter; ++r) {
    double delta = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      next = t[j];
      for (std::size_t k = 0; k < d; ++k) {
        if (k != j) {
          next.noalias() -= ops.projection[j][k] * f[k];
        }
      }
      delta = std::max(delta, integrated_sq_norm(next - f[j], dens.grids[j].weights(), metric_map));
      f[j].swap(next);
    }
    trace.deltas.push_back(delta);
    trace.iterations = r;
    trace.convergence = delta;
    if (delta < opts.tol &&
        (!opts.check_residual ||
         sup_residual(dens, ops, t, f, metric_map) < std::max(opts.tol, kResidualFloor))) {
      return f;
    }
  }
  throw ConvergenceError("smooth backfitting did not converge within " +
                           std::to_string(opts.max_iter) + " iterations",
                         trace.deltas);
}

} // namespace

Eigen::VectorXd AdditiveSurface::component_at(std::size_t j, const Eigen::Ref<const Eigen::VectorXd>& xj) const
{
  if (j >= components.size()) {
    throw std::out_of_range("component index out of range");
  }
  if (!domains[j].contains(xj)) {
    throw OutOfDomain("point outside the domain of predictor " + std::to_string(j));
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(components[j].cols());
  for (const auto& [node, w] : interpolation_stencil(grids[j], xj)) {
    out += w * components[j].row(static_cast<Eigen::Index>(node)).transpose();
  }
  return out;
}

Eigen::VectorXd AdditiveSurface::evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const
{
  Eigen::VectorXd out = f0;
  Eigen::Index pos = 0;
  for (std::size_t j = 0; j < components.size(); ++j) {
    const auto len = static_cast<Eigen::Index>(domains[j].dim());
    if (pos + len > x.size()) {
      throw std::invalid_argument("predictor vector is too short");
    }
    out += component_at(j, x.segment(pos, len));
    pos += len;
  }
  if (pos != x.size()) {
    throw std::invalid_argument("predictor vector is too long");
  }
  return out;
}

AdditiveSurface backfit_coordinates(const DensityEstimates& dens,
                                    const Eigen::Ref<const Eigen::MatrixXd>& y,
                                    const SbfOptions& opts,
                                    BackfitTrace* trace)
{
  require(static_cast<std::size_t>(y.rows()) == dens.n_in_domain(),
          "response rows must match the in-domain observations");
  const Operators ops = build_operators(dens);
  BackfitTrace local;
  AdditiveSurface s;
  s.components = solve(dens, ops, y, nullptr, opts, local);
  s.grids = dens.grids;
  s.domains = dens.domains;
  s.f0 = y.colwise().mean().transpose();
  if (trace != nullptr) {
    *trace = std::move(local);
  }
  return s;
}

SbfFit::SbfFit(const RegressionData& data,
               std::shared_ptr<const DensityEstimates> densities,
               std::vector<Eigen::MatrixXd> weights,
               BackfitTrace trace)
  : space_(data.space())
  , densities_(std::move(densities))
  , weights_(std::move(weights))
  , trace_(std::move(trace))
{
  const auto& idx = densities_->in_domain;
  const auto& all = data.response_coordinates();
  y_.resize(static_cast<Eigen::Index>(idx.size()), all.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    y_.row(static_cast<Eigen::Index>(i)) = all.row(static_cast<Eigen::Index>(idx[i]));
  }
  surface_.grids = densities_->grids;
  surface_.domains = densities_->domains;
  surface_.f0 = y_.colwise().mean().transpose();
  for (const auto& w : weights_) {
    surface_.components.push_back(w * y_);
  }
}

HilbertElement SbfFit::f0() const
{
  return from_coordinates(surface_.f0, space_);
}

HilbertElement SbfFit::component_at_node(std::size_t j, std::size_t node) const
{
  return from_coordinates(surface_.components.at(j).row(static_cast<Eigen::Index>(node)).transpose(),
                          space_);
}

SbfFit fit(const RegressionData& data,
           const std::vector<GridSpec>& grids,
           const std::vector<double>& bandwidths,
           const SbfOptions& opts)
{
  auto dens = std::make_shared<const DensityEstimates>(estimate_densities(data, grids, bandwidths));
  const Operators ops = build_operators(*dens);
  const auto nd = static_cast<Eigen::Index>(dens->n_in_domain());

  // The increments are measured in the response norm: row i of the map holds
  // the isometric coordinates of Y_i scaled by the square root of the metric.
  const auto& all = data.response_coordinates();
  const Eigen::VectorXd root = data.space().metric().cwiseSqrt();
  Eigen::MatrixXd metric_map(nd, all.cols());
  for (Eigen::Index i = 0; i < nd; ++i) {
    metric_map.row(i) =
      all.row(static_cast<Eigen::Index>(dens->in_domain[static_cast<std::size_t>(i)])).cwiseProduct(
        root.transpose());
  }
  BackfitTrace trace;
  auto weights = solve(*dens, ops, Eigen::MatrixXd::Identity(nd, nd), &metric_map, opts, trace);
  return SbfFit(data, std::move(dens), std::move(weights), std::move(trace));
}

HilbertElement evaluate_component(const SbfFit& fit, std::size_t j, const Eigen::Ref<const Eigen::VectorXd>& xj)
{
  return from_coordinates(fit.surface().component_at(j, xj), fit.space());
}

HilbertElement predict(const SbfFit& fit, const Eigen::Ref<const Eigen::VectorXd>& x)
{
  return from_coordinates(fit.surface().evaluate(x), fit.space());
}

double residual_norm(const SbfFit& fit)
{
  const auto& dens = fit.densities();
  const Operators ops = build_operators(dens);
  const auto t = targets(ops, fit.response_coordinates());
  const Eigen::MatrixXd root = fit.space().metric().cwiseSqrt().asDiagonal();
  return sup_residual(dens, ops, t, fit.surface().components, &root);
}

double centering_norm(const SbfFit& fit, std::size_t j)
{
  const auto& dens = fit.densities();
  const Eigen::VectorXd q = dens.grids.at(j).weights().cwiseProduct(dens.marginal[j]);
  const Eigen::VectorXd integral = fit.surface().components[j].transpose() * q;
  return std::sqrt(fit.space().metric().dot(integral.cwiseAbs2()));
}

} // namespace hsbf
