#pragma once

#include "hsbf/hilbert.hpp"
#include "hsbf/kernelgrid.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace hsbf {

//! Unit vector in R^{q+1}, q >= 1.
class SpherePoint
{
public:
  //! Requires | |coords| - 1 | <= 1e-12.
  explicit SpherePoint(Eigen::VectorXd coords);
  //! Projects a nonzero vector onto the sphere.
  static SpherePoint normalized(const Eigen::Ref<const Eigen::VectorXd>& v);

  const Eigen::VectorXd& coords() const { return coords_; }
  //! Intrinsic dimension q.
  std::size_t dim() const { return static_cast<std::size_t>(coords_.size()) - 1; }

private:
  Eigen::VectorXd coords_;
};

//! Ambient-coordinate tangent vector at `base`.
class TangentVector
{
public:
  //! Requires |<base, vec>| <= 1e-10.
  TangentVector(SpherePoint base, Eigen::VectorXd vec);
  static TangentVector zero(const SpherePoint& base);

  const SpherePoint& base() const { return base_; }
  const Eigen::VectorXd& vec() const { return vec_; }

private:
  SpherePoint base_;
  Eigen::VectorXd vec_;
};

//! Sphere-valued curve sampled on a time grid: row t is a unit vector.
class SphereCurve
{
public:
  explicit SphereCurve(Eigen::MatrixXd points);

  const Eigen::MatrixXd& points() const { return points_; }
  std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
  std::size_t ambient_dim() const { return static_cast<std::size_t>(points_.cols()); }
  SpherePoint at(std::size_t t) const;

private:
  Eigen::MatrixXd points_;
};

//! Vector field along a base curve: row t of `vectors()` is tangent at
//! row t of the base curve.
class TangentField
{
public:
  TangentField(std::shared_ptr<const GridSpec> time_grid, SphereCurve base, Eigen::MatrixXd vectors);

  const GridSpec& time_grid() const { return *time_grid_; }
  const std::shared_ptr<const GridSpec>& time_grid_ptr() const { return time_grid_; }
  const SphereCurve& base() const { return base_; }
  const Eigen::MatrixXd& vectors() const { return vectors_; }

  //! L2 space along the time grid holding these fields.
  SpaceDescriptor space() const;
  HilbertElement to_element() const;

private:
  std::shared_ptr<const GridSpec> time_grid_;
  SphereCurve base_;
  Eigen::MatrixXd vectors_;
};

double geodesic_distance(const SpherePoint& p, const SpherePoint& q);

SpherePoint sphere_exp(const SpherePoint& p, const TangentVector& v);
//! Throws CutLocusError when <p, q> <= -1 + 1e-9.
TangentVector sphere_log(const SpherePoint& p, const SpherePoint& q);
//! Transport of v (at p) to q along the minimizing geodesic.
TangentVector parallel_transport(const SpherePoint& p, const SpherePoint& q, const TangentVector& v);

struct FrechetOptions
{
  double step_tol = 1e-10;
  int max_iter = 200;
  double gradient_tol = 1e-8;
};

//! Sample intrinsic mean by fixed-point iteration from the normalized
//! Euclidean mean.
SpherePoint frechet_mean(std::span<const SpherePoint> points, const FrechetOptions& opts = {});

//! Pointwise intrinsic mean of curves sharing one time grid.
SphereCurve intrinsic_mean_curve(std::span<const SphereCurve> curves, const FrechetOptions& opts = {});

//! Pointwise Log of `curve` at `base`.
TangentField log_field(std::shared_ptr<const GridSpec> time_grid,
                       const SphereCurve& base,
                       const SphereCurve& curve);
//! Pointwise Exp of a tangent field.
SphereCurve exp_field(const TangentField& field);

double tensor_inner(const TangentField& a, const TangentField& b);

//! Volume density (sin r / r)^(q-1) of S^q at geodesic distance r in [0, pi).
double sphere_volume_density(std::size_t q, double r);

} // namespace hsbf
