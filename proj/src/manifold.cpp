#include "hsbf/manifold.hpp"

#include "hsbf/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hsbf {

namespace {

constexpr double kUnitTol = 1e-12;
constexpr double kTangentTol = 1e-10;
constexpr double kAntipodalTol = 1e-9;

using Vec = Eigen::VectorXd;

// Log map on raw unit vectors; no validation beyond the cut locus.
Vec raw_log(const Eigen::Ref<const Vec>& p, const Eigen::Ref<const Vec>& q)
{
  const double c = p.dot(q);
  if (c <= -1.0 + kAntipodalTol) {
    throw CutLocusError("points are antipodal; Log is undefined on the cut locus");
  }
  Vec u = q - c * p;
  const double s = u.norm();
  if (s == 0.0) {
    return Vec::Zero(p.size());
  }
  return (std::atan2(s, c) / s) * u;
}

Vec raw_exp(const Eigen::Ref<const Vec>& p, const Eigen::Ref<const Vec>& v)
{
  const double t = v.norm();
  if (t == 0.0) {
    return p;
  }
  Vec out = std::cos(t) * p + (std::sin(t) / t) * v;
  out /= out.norm();
  return out;
}

// Frechet mean of the rows of `pts`.
Vec raw_frechet_mean(const Eigen::Ref<const Eigen::MatrixXd>& pts, const FrechetOptions& opts)
{
  const Eigen::Index n = pts.rows();
  if (n == 0) {
    throw std::invalid_argument("Frechet mean of an empty sample");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = i + 1; k < n; ++k) {
      const double c = std::clamp(pts.row(i).dot(pts.row(k)), -1.0, 1.0);
      if (std::acos(c) >= std::numbers::pi - 1e-6) {
        throw InvariantViolation("sample is not contained in an open hemisphere (points " +
                                 std::to_string(i) + " and " + std::to_string(k) + ")");
      }
    }
  }
  Vec mu = pts.colwise().sum().transpose();
  const double len = mu.norm();
  if (!(len > 0.0)) {
    throw NumericError("Euclidean mean of the sample is zero");
  }
  mu /= len;
  Vec grad = Vec::Zero(pts.cols());
  for (int it = 0; it < opts.max_iter; ++it) {
    grad.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      grad += raw_log(mu, pts.row(i).transpose());
    }
    grad /= static_cast<double>(n);
    mu = raw_exp(mu, grad);
    if (grad.norm() < opts.step_tol) {
      break;
    }
  }
  grad.setZero();
  for (Eigen::Index i = 0; i < n; ++i) {
    grad += raw_log(mu, pts.row(i).transpose());
  }
  grad /= static_cast<double>(n);
  if (!(grad.norm() < opts.gradient_tol)) {
    throw ConvergenceError("Frechet mean iteration did not reach the first-order condition",
                           { grad.norm() });
  }
  return mu;
}

} // namespace

SpherePoint::SpherePoint(Eigen::VectorXd coords)
  : coords_(std::move(coords))
{
  if (coords_.size() < 2) {
    throw InvariantViolation("sphere points need ambient dimension >= 2");
  }
  if (!coords_.allFinite() || std::abs(coords_.norm() - 1.0) > kUnitTol) {
    throw InvariantViolation("sphere point must have unit norm");
  }
}

SpherePoint SpherePoint::normalized(const Eigen::Ref<const Eigen::VectorXd>& v)
{
  const double len = v.norm();
  if (!(len > 0.0) || !std::isfinite(len)) {
    throw InvariantViolation("cannot normalize a zero or non-finite vector");
  }
  return SpherePoint(v / len);
}

TangentVector::TangentVector(SpherePoint base, Eigen::VectorXd vec)
  : base_(std::move(base))
  , vec_(std::move(vec))
{
  if (vec_.size() != base_.coords().size()) {
    throw InvariantViolation("tangent vector has wrong ambient dimension");
  }
  if (!vec_.allFinite() || std::abs(base_.coords().dot(vec_)) > kTangentTol) {
    throw InvariantViolation("vector is not tangent at its base point");
  }
}

TangentVector TangentVector::zero(const SpherePoint& base)
{
  return TangentVector(base, Eigen::VectorXd::Zero(base.coords().size()));
}

SphereCurve::SphereCurve(Eigen::MatrixXd points)
  : points_(std::move(points))
{
  if (points_.rows() == 0 || points_.cols() < 2) {
    throw InvariantViolation("sphere curve needs at least one point in R^{q+1}, q >= 1");
  }
  for (Eigen::Index t = 0; t < points_.rows(); ++t) {
    if (std::abs(points_.row(t).norm() - 1.0) > kUnitTol) {
      throw InvariantViolation("curve point " + std::to_string(t) + " is not a unit vector");
    }
  }
}

SpherePoint SphereCurve::at(std::size_t t) const
{
  return SpherePoint(points_.row(static_cast<Eigen::Index>(t)).transpose());
}

TangentField::TangentField(std::shared_ptr<const GridSpec> time_grid,
                           SphereCurve base,
                           Eigen::MatrixXd vectors)
  : time_grid_(std::move(time_grid))
  , base_(std::move(base))
  , vectors_(std::move(vectors))
{
  if (!time_grid_ || time_grid_->size() != base_.size()) {
    throw InvariantViolation("base curve and time grid lengths differ");
  }
  if (vectors_.rows() != base_.points().rows() || vectors_.cols() != base_.points().cols()) {
    throw InvariantViolation("tangent field shape does not match its base curve");
  }
  for (Eigen::Index t = 0; t < vectors_.rows(); ++t) {
    if (std::abs(vectors_.row(t).dot(base_.points().row(t))) > kTangentTol) {
      throw InvariantViolation("field vector " + std::to_string(t) + " is not tangent");
    }
  }
}

SpaceDescriptor TangentField::space() const
{
  return SpaceDescriptor::l2_grid(*time_grid_, base_.ambient_dim());
}

HilbertElement TangentField::to_element() const
{
  // node-major layout: row t occupies coefficients [t*c, (t+1)*c)
  Eigen::MatrixXd rowmajor = vectors_.transpose();
  return HilbertElement(space(), Eigen::Map<const Eigen::VectorXd>(rowmajor.data(), rowmajor.size()));
}

double geodesic_distance(const SpherePoint& p, const SpherePoint& q)
{
  if (p.coords().size() != q.coords().size()) {
    throw SpaceMismatch("sphere points of different dimension");
  }
  const double c = p.coords().dot(q.coords());
  const double s = (q.coords() - c * p.coords()).norm();
  return std::atan2(s, c);
}

SpherePoint sphere_exp(const SpherePoint& p, const TangentVector& v)
{
  if ((v.base().coords() - p.coords()).norm() > kUnitTol) {
    throw InvariantViolation("tangent vector is not based at the given point");
  }
  return SpherePoint(raw_exp(p.coords(), v.vec()));
}

TangentVector sphere_log(const SpherePoint& p, const SpherePoint& q)
{
  if (p.coords().size() != q.coords().size()) {
    throw SpaceMismatch("sphere points of different dimension");
  }
  Vec u = raw_log(p.coords(), q.coords());
  u -= p.coords().dot(u) * p.coords();
  return TangentVector(p, std::move(u));
}

TangentVector parallel_transport(const SpherePoint& p, const SpherePoint& q, const TangentVector& v)
{
  if ((v.base().coords() - p.coords()).norm() > kUnitTol) {
    throw InvariantViolation("tangent vector is not based at the source point");
  }
  const Vec u = raw_log(p.coords(), q.coords());
  const double theta = u.norm();
  if (theta == 0.0) {
    return TangentVector(q, v.vec());
  }
  const Vec e = u / theta;
  const double along = e.dot(v.vec());
  Vec out = v.vec() + along * ((std::cos(theta) - 1.0) * e - std::sin(theta) * p.coords());
  out -= q.coords().dot(out) * q.coords();
  return TangentVector(q, std::move(out));
}

SpherePoint frechet_mean(std::span<const SpherePoint> points, const FrechetOptions& opts)
{
  if (points.empty()) {
    throw std::invalid_argument("Frechet mean of an empty sample");
  }
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(points.size()), points.front().coords().size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].coords().size() != pts.cols()) {
      throw SpaceMismatch("sphere points of different dimension");
    }
    pts.row(static_cast<Eigen::Index>(i)) = points[i].coords().transpose();
  }
  return SpherePoint(raw_frechet_mean(pts, opts));
}

SphereCurve intrinsic_mean_curve(std::span<const SphereCurve> curves, const FrechetOptions& opts)
{
  if (curves.empty()) {
    throw std::invalid_argument("intrinsic mean of an empty sample of curves");
  }
  const auto T = static_cast<Eigen::Index>(curves.front().size());
  const auto c = static_cast<Eigen::Index>(curves.front().ambient_dim());
  for (const auto& z : curves) {
    if (static_cast<Eigen::Index>(z.size()) != T || static_cast<Eigen::Index>(z.ambient_dim()) != c) {
      throw SpaceMismatch("curves do not share one time grid and sphere");
    }
  }
  Eigen::MatrixXd out(T, c);
  Eigen::MatrixXd slice(static_cast<Eigen::Index>(curves.size()), c);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < curves.size(); ++i) {
      slice.row(static_cast<Eigen::Index>(i)) = curves[i].points().row(t);
    }
    try {
      out.row(t) = raw_frechet_mean(slice, opts).transpose();
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("time index " + std::to_string(t) + ": " + e.what(), e.history());
    } catch (const InvariantViolation& e) {
      throw InvariantViolation("time index " + std::to_string(t) + ": " + e.what());
    } catch (const NumericError& e) {
      throw NumericError("time index " + std::to_string(t) + ": " + e.what());
    }
  }
  return SphereCurve(std::move(out));
}

TangentField log_field(std::shared_ptr<const GridSpec> time_grid,
                       const SphereCurve& base,
                       const SphereCurve& curve)
{
  if (base.size() != curve.size() || base.ambient_dim() != curve.ambient_dim()) {
    throw SpaceMismatch("curve and base curve differ in shape");
  }
  Eigen::MatrixXd vecs(base.points().rows(), base.points().cols());
  for (Eigen::Index t = 0; t < vecs.rows(); ++t) {
    const Vec p = base.points().row(t).transpose();
    Vec u;
    try {
      u = raw_log(p, curve.points().row(t).transpose());
    } catch (const CutLocusError&) {
      throw CutLocusError("curve hits the cut locus of the base curve at time index " +
                          std::to_string(t));
    }
    u -= p.dot(u) * p;
    vecs.row(t) = u.transpose();
  }
  return TangentField(std::move(time_grid), base, std::move(vecs));
}

SphereCurve exp_field(const TangentField& field)
{
  const auto& base = field.base().points();
  Eigen::MatrixXd out(base.rows(), base.cols());
  for (Eigen::Index t = 0; t < base.rows(); ++t) {
    out.row(t) = raw_exp(base.row(t).transpose(), field.vectors().row(t).transpose()).transpose();
  }
  return SphereCurve(std::move(out));
}

double tensor_inner(const TangentField& a, const TangentField& b)
{
  if (!(a.time_grid() == b.time_grid()) || a.base().points() != b.base().points()) {
    throw SpaceMismatch("tangent fields live along different base curves");
  }
  const Eigen::VectorXd pointwise = (a.vectors().array() * b.vectors().array()).rowwise().sum();
  return a.time_grid().weights().dot(pointwise);
}

double sphere_volume_density(std::size_t q, double r)
{
  if (q == 0) {
    throw std::invalid_argument("sphere dimension must be >= 1");
  }
  if (!(r >= 0.0 && r < std::numbers::pi)) {
    throw std::invalid_argument("volume density needs 0 <= r < pi");
  }
  if (q == 1 || r == 0.0) {
    return 1.0;
  }
  return std::pow(std::sin(r) / r, static_cast<double>(q - 1));
}

} // namespace hsbf
