#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace hsbf {

//! Compact box prod_l [lower_l, upper_l] in R^L.
class Box
{
public:
  Box() = default;
  explicit Box(std::vector<std::pair<double, double>> bounds);
  //! One-dimensional interval [lower, upper].
  Box(double lower, double upper);

  std::size_t dim() const { return bounds_.size(); }
  double lower(std::size_t axis) const { return bounds_[axis].first; }
  double upper(std::size_t axis) const { return bounds_[axis].second; }
  const std::vector<std::pair<double, double>>& bounds() const { return bounds_; }
  double volume() const;
  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  //! Largest r such that the ball B(x, r) stays inside the box (<= 0 when x
  //! is outside).
  double depth(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  friend bool operator==(const Box&, const Box&) = default;

private:
  std::vector<std::pair<double, double>> bounds_;
};

//! Quadrature grid: node coordinates and nonnegative weights. Tensor grids
//! additionally keep their per-axis nodes; node index runs with the last axis
//! fastest.
class GridSpec
{
public:
  GridSpec() = default;
  GridSpec(Eigen::MatrixXd points, Eigen::VectorXd weights);

  //! Tensor trapezoidal grid with `counts[l]` equispaced nodes on axis l.
  static GridSpec trapezoid(const Box& box, const std::vector<int>& counts);
  //! Default resolution: 41 nodes for L = 1, 21 per axis otherwise.
  static GridSpec trapezoid(const Box& box);
  //! Uniform angular grid on the unit circle, nodes (cos s, sin s) with
  //! s = 2 pi k / n; periodic trapezoid weights 2 pi / n.
  static GridSpec circle(int n);
  //! Latitude-longitude grid on S^2 with midpoint latitudes and sin-latitude
  //! weights.
  static GridSpec sphere(int n_lat, int n_lon);

  std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(points_.cols()); }
  const Eigen::MatrixXd& points() const { return points_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  auto point(std::size_t i) const { return points_.row(static_cast<Eigen::Index>(i)); }
  double total_measure() const { return weights_.sum(); }

  bool is_tensor() const { return !axes_.empty(); }
  const std::vector<Eigen::VectorXd>& axes() const { return axes_; }
  //! Node index of the tensor multi-index `idx`.
  std::size_t flat_index(const std::vector<std::size_t>& idx) const;

  friend bool operator==(const GridSpec& a, const GridSpec& b);

private:
  Eigen::MatrixXd points_;
  Eigen::VectorXd weights_;
  std::vector<Eigen::VectorXd> axes_;
};

//! Biweight profile (1 - t^2)^2 on [0, 1], zero beyond.
double biweight(double t);

//! Normalized boundary kernel K_h(x, u) for every grid node x: the biweight
//! numerator h^{-L} K(|x - u| / h) divided by its quadrature over the domain
//! on the same grid; the constant 1 / |D| when that quadrature is <= 1e-14.
Eigen::VectorXd normalized_kernel(const Box& domain,
                                  const GridSpec& grid,
                                  const Eigen::Ref<const Eigen::VectorXd>& u,
                                  double h);

//! Kernel values for a set of data points (rows of `data`).
struct KernelMatrix
{
  Eigen::MatrixXd values; // nodes x points
  double bandwidth = 0.0;
  std::vector<bool> fallback; // per point: constant 1/|D| column
};

KernelMatrix normalized_kernel_matrix(const Box& domain,
                                      const GridSpec& grid,
                                      const Eigen::Ref<const Eigen::MatrixXd>& data,
                                      double h);

//! First grid node with no data point (row of `data`) strictly within
//! distance h, if any.
std::optional<std::size_t> first_uncovered_node(const GridSpec& grid,
                                                const Eigen::Ref<const Eigen::MatrixXd>& data,
                                                double h);

//! Smallest radius r such that every grid node has a data point at distance
//! < r would hold for any h > r.
double coverage_radius(const GridSpec& grid, const Eigen::Ref<const Eigen::MatrixXd>& data);

//! Multilinear interpolation weights of `x` on a tensor grid: pairs of
//! (node index, weight). Exact at nodes.
std::vector<std::pair<std::size_t, double>> interpolation_stencil(
  const GridSpec& grid,
  const Eigen::Ref<const Eigen::VectorXd>& x);

} // namespace hsbf
