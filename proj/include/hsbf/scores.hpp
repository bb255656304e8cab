#pragma once

#include "hsbf/hilbert.hpp"
#include "hsbf/manifold.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>

namespace hsbf {

enum class ScoreMethod
{
  pca,   //!< principal components
  sca,   //!< singular components of the cross-covariance
  irfpc, //!< principal components of Log-transformed sphere curves
  irsc   //!< singular components of Log-transformed sphere curves
};

std::string to_string(ScoreMethod method);

//! Eigen-decomposition of a (cross-)covariance operator together with the
//! scores of the sample it was computed from. Eigen-elements are stored as
//! isometric coordinates and are orthonormal under the space metric.
struct ScoreModel
{
  ScoreMethod method = ScoreMethod::pca;
  SpaceDescriptor space = SpaceDescriptor::euclidean(1);
  //! Coordinates of the centering element.
  Eigen::VectorXd mean;
  //! lambda_r (pca, irfpc) or sigma_r^2 (sca, irsc), descending.
  Eigen::VectorXd values;
  //! Row r holds the coordinates of the r-th eigen-element.
  Eigen::MatrixXd basis;
  //! n x r score matrix.
  Eigen::MatrixXd scores;
  //! Divisor used in the covariance estimator (n - 1 or n).
  double divisor = 1.0;
  //! Mean curve along which the tangent fields live (irfpc, irsc).
  std::optional<SphereCurve> base_curve;
  std::shared_ptr<const GridSpec> time_grid;
  //! True when the operator vanished (all values below 1e-12 relative to the
  //! data scale); eigen-elements are then an arbitrary orthonormal set.
  bool degenerate = false;
  //! Sign convention of the eigen-elements.
  std::string sign_rule = "largest-absolute-coordinate-positive";

  std::size_t rank() const { return static_cast<std::size_t>(values.size()); }
  HilbertElement element(std::size_t r) const;
  //! Scores of a new element of `space`.
  Eigen::VectorXd project(const HilbertElement& x) const;
};

//! Principal components of X, via the centered Gram matrix with divisor n - 1.
//! Requires n >= 2 and r <= min(n - 1, dim). Throws InvariantViolation for a
//! sample whose elements are all equal.
ScoreModel hpca(std::span<const HilbertElement> x, std::size_t r);

//! Singular components of the cross-covariance between X and Y: eigenpairs
//! of C_XY C_YX computed inside the span of the centered X.
ScoreModel hsca(std::span<const HilbertElement> x, std::span<const HilbertElement> y, std::size_t r);

//! Principal components of the Log fields of `z` at their intrinsic mean
//! curve, with divisor n. Curves that all coincide give zero scores and a
//! degenerate model.
ScoreModel irfpc(std::shared_ptr<const GridSpec> time_grid, std::span<const SphereCurve> z, std::size_t r);

//! Singular components between the Log fields of `z` and responses `y`,
//! with divisor n.
ScoreModel irsc(std::shared_ptr<const GridSpec> time_grid,
                std::span<const SphereCurve> z,
                std::span<const HilbertElement> y,
                std::size_t r);

//! Canonical correlations between the columns of two score matrices with the
//! same number of rows, in descending order.
Eigen::VectorXd canonical_correlations(const Eigen::Ref<const Eigen::MatrixXd>& a,
                                       const Eigen::Ref<const Eigen::MatrixXd>& b);

} // namespace hsbf
