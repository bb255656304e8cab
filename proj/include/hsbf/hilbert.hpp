#pragma once

#include "hsbf/kernelgrid.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hsbf {

enum class SpaceKind
{
  euclidean,
  simplex,
  bayes_hilbert,
  l2_grid
};

std::string to_string(SpaceKind kind);

//! Geometry of a separable Hilbert space. Every space is represented through
//! isometric coordinates in a weighted R^m: raw coordinates for Euclidean and
//! L2 spaces, centered log-ratios for the simplex and the Bayes-Hilbert space.
//! `metric()` holds the weight of each coordinate in the inner product.
class SpaceDescriptor
{
public:
  //! R^dim with the dot product.
  static SpaceDescriptor euclidean(std::size_t dim);
  //! Open simplex of `parts` positive proportions (parts >= 2), Aitchison
  //! geometry.
  static SpaceDescriptor simplex(std::size_t parts);
  //! Positive densities on the nodes of `grid` with respect to its quadrature
  //! weights.
  static SpaceDescriptor bayes_hilbert(GridSpec grid);
  //! Square-integrable R^components valued functions on `grid`; coefficient
  //! layout is node-major (node k occupies [k*c, (k+1)*c)).
  static SpaceDescriptor l2_grid(GridSpec grid, std::size_t components = 1);

  SpaceKind kind() const { return kind_; }
  //! Length of the coefficient vector.
  std::size_t dimension() const { return static_cast<std::size_t>(metric_->size()); }
  //! Values per grid node (L2 spaces), 1 otherwise.
  std::size_t components() const { return components_; }
  const Eigen::VectorXd& metric() const { return *metric_; }
  //! Grid of a Bayes-Hilbert or L2 space, nullptr otherwise.
  const GridSpec* grid() const { return grid_.get(); }
  //! Sum of the measure weights (nu(S) for Bayes-Hilbert, k for a simplex).
  double total_measure() const;
  //! True for spaces whose elements are positive and normalized.
  bool is_log_ratio() const
  {
    return kind_ == SpaceKind::simplex || kind_ == SpaceKind::bayes_hilbert;
  }

  friend bool operator==(const SpaceDescriptor& a, const SpaceDescriptor& b);

private:
  SpaceDescriptor() = default;

  SpaceKind kind_ = SpaceKind::euclidean;
  std::size_t components_ = 1;
  std::shared_ptr<const Eigen::VectorXd> metric_;
  std::shared_ptr<const GridSpec> grid_;
};

//! Element of a Hilbert space: natural coefficients (coordinates,
//! proportions, density values, function values) plus the space.
class HilbertElement
{
public:
  //! Validates the coefficients against the space invariants.
  HilbertElement(SpaceDescriptor space, Eigen::VectorXd coeffs);

  const SpaceDescriptor& space() const { return space_; }
  const Eigen::VectorXd& coeffs() const { return coeffs_; }

private:
  SpaceDescriptor space_;
  Eigen::VectorXd coeffs_;
};

//! Zero vector of the space.
HilbertElement zero(const SpaceDescriptor& space);

//! a (.) v (+) b (.) w.
HilbertElement combine(double a, const HilbertElement& v, double b, const HilbertElement& w);
//! v (-) w.
HilbertElement subtract(const HilbertElement& v, const HilbertElement& w);

double inner(const HilbertElement& v, const HilbertElement& w);
double norm(const HilbertElement& v);
double distance(const HilbertElement& v, const HilbertElement& w);

//! Centered log-ratio of a simplex or Bayes-Hilbert element; its
//! metric-weighted mean is zero.
Eigen::VectorXd clr(const HilbertElement& v);
//! Inverse of clr. The input must have weighted mean zero within 1e-8.
HilbertElement clr_inv(const Eigen::Ref<const Eigen::VectorXd>& z, const SpaceDescriptor& space);

//! Isometric coordinates: clr for log-ratio spaces, coefficients otherwise.
Eigen::VectorXd to_coordinates(const HilbertElement& v);
//! Inverse of `to_coordinates`; for log-ratio spaces the weighted mean of `z`
//! is removed before exponentiation.
HilbertElement from_coordinates(const Eigen::Ref<const Eigen::VectorXd>& z,
                                const SpaceDescriptor& space);

//! Rows are `to_coordinates(elements[i])`.
Eigen::MatrixXd coordinate_matrix(std::span<const HilbertElement> elements);

//! (1/n) (.) (+)_i v_i.
HilbertElement mean(std::span<const HilbertElement> elements);

} // namespace hsbf
