#include "hsbf/kernelgrid.hpp"

#include "hsbf/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hsbf {

Box::Box(std::vector<std::pair<double, double>> bounds)
  : bounds_(std::move(bounds))
{
  if (bounds_.empty()) {
    throw std::invalid_argument("box needs at least one axis");
  }
  for (const auto& [lo, hi] : bounds_) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
      throw std::invalid_argument("box bounds must be finite with lower < upper");
    }
  }
}

Box::Box(double lower, double upper)
  : Box(std::vector<std::pair<double, double>>{ { lower, upper } })
{
}

double Box::volume() const
{
  double v = 1.0;
  for (const auto& [lo, hi] : bounds_) {
    v *= hi - lo;
  }
  return v;
}

bool Box::contains(const Eigen::Ref<const Eigen::VectorXd>& x) const
{
  if (static_cast<std::size_t>(x.size()) != bounds_.size()) {
    return false;
  }
  for (std::size_t l = 0; l < bounds_.size(); ++l) {
    const double xl = x(static_cast<Eigen::Index>(l));
    if (!(xl >= bounds_[l].first && xl <= bounds_[l].second)) {
      return false;
    }
  }
  return true;
}

double Box::depth(const Eigen::Ref<const Eigen::VectorXd>& x) const
{
  double r = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < bounds_.size(); ++l) {
    const double xl = x(static_cast<Eigen::Index>(l));
    r = std::min({ r, xl - bounds_[l].first, bounds_[l].second - xl });
  }
  return r;
}

GridSpec::GridSpec(Eigen::MatrixXd points, Eigen::VectorXd weights)
  : points_(std::move(points))
  , weights_(std::move(weights))
{
  if (points_.rows() == 0 || points_.rows() != weights_.size()) {
    throw std::invalid_argument("grid needs matching, nonempty points and weights");
  }
  if ((weights_.array() < 0.0).any() || !weights_.allFinite()) {
    throw std::invalid_argument("grid weights must be finite and nonnegative");
  }
}

GridSpec GridSpec::trapezoid(const Box& box, const std::vector<int>& counts)
{
  const std::size_t dim = box.dim();
  if (counts.size() != dim) {
    throw std::invalid_argument("one node count per box axis required");
  }
  std::vector<Eigen::VectorXd> axes(dim);
  std::vector<Eigen::VectorXd> axis_w(dim);
  Eigen::Index total = 1;
  for (std::size_t l = 0; l < dim; ++l) {
    if (counts[l] < 2) {
      throw std::invalid_argument("trapezoid grid needs at least 2 nodes per axis");
    }
    const double lo = box.lower(l);
    const double hi = box.upper(l);
    axes[l] = Eigen::VectorXd::LinSpaced(counts[l], lo, hi);
    // pin the end nodes exactly to the bounds
    axes[l](0) = lo;
    axes[l](counts[l] - 1) = hi;
    const double step = (hi - lo) / (counts[l] - 1);
    axis_w[l] = Eigen::VectorXd::Constant(counts[l], step);
    axis_w[l](0) *= 0.5;
    axis_w[l](counts[l] - 1) *= 0.5;
    total *= counts[l];
  }
  Eigen::MatrixXd points(total, static_cast<Eigen::Index>(dim));
  Eigen::VectorXd weights(total);
  std::vector<std::size_t> idx(dim, 0);
  for (Eigen::Index k = 0; k < total; ++k) {
    double w = 1.0;
    for (std::size_t l = 0; l < dim; ++l) {
      points(k, static_cast<Eigen::Index>(l)) = axes[l](static_cast<Eigen::Index>(idx[l]));
      w *= axis_w[l](static_cast<Eigen::Index>(idx[l]));
    }
    weights(k) = w;
    for (std::size_t l = dim; l-- > 0;) {
      if (++idx[l] < static_cast<std::size_t>(counts[l])) {
        break;
      }
      idx[l] = 0;
    }
  }
  GridSpec grid(std::move(points), std::move(weights));
  grid.axes_ = std::move(axes);
  return grid;
}

GridSpec GridSpec::trapezoid(const Box& box)
{
  const int per_axis = box.dim() == 1 ? 41 : 21;
  return trapezoid(box, std::vector<int>(box.dim(), per_axis));
}

GridSpec GridSpec::circle(int n)
{
  if (n < 2) {
    throw std::invalid_argument("circle grid needs at least 2 nodes");
  }
  Eigen::MatrixXd points(n, 2);
  for (int k = 0; k < n; ++k) {
    const double s = 2.0 * std::numbers::pi * k / n;
    points(k, 0) = std::cos(s);
    points(k, 1) = std::sin(s);
  }
  return GridSpec(std::move(points), Eigen::VectorXd::Constant(n, 2.0 * std::numbers::pi / n));
}

GridSpec GridSpec::sphere(int n_lat, int n_lon)
{
  if (n_lat < 2 || n_lon < 3) {
    throw std::invalid_argument("sphere grid needs n_lat >= 2 and n_lon >= 3");
  }
  const double dlat = std::numbers::pi / n_lat;
  const double dlon = 2.0 * std::numbers::pi / n_lon;
  Eigen::MatrixXd points(n_lat * n_lon, 3);
  Eigen::VectorXd weights(n_lat * n_lon);
  for (int a = 0; a < n_lat; ++a) {
    const double polar = (a + 0.5) * dlat;
    for (int b = 0; b < n_lon; ++b) {
      const double azim = b * dlon;
      const int k = a * n_lon + b;
      points(k, 0) = std::sin(polar) * std::cos(azim);
      points(k, 1) = std::sin(polar) * std::sin(azim);
      points(k, 2) = std::cos(polar);
      weights(k) = std::sin(polar) * dlat * dlon;
    }
  }
  return GridSpec(std::move(points), std::move(weights));
}

std::size_t GridSpec::flat_index(const std::vector<std::size_t>& idx) const
{
  std::size_t k = 0;
  for (std::size_t l = 0; l < axes_.size(); ++l) {
    k = k * static_cast<std::size_t>(axes_[l].size()) + idx[l];
  }
  return k;
}

bool operator==(const GridSpec& a, const GridSpec& b)
{
  return a.points_.rows() == b.points_.rows() && a.points_.cols() == b.points_.cols() &&
         a.points_ == b.points_ && a.weights_ == b.weights_;
}

double biweight(double t)
{
  if (!(t >= 0.0)) {
    throw std::invalid_argument("biweight argument must be nonnegative");
  }
  if (t >= 1.0) {
    return 0.0;
  }
  const double s = 1.0 - t * t;
  return s * s;
}

namespace {

constexpr double kDenominatorFloor = 1e-14;

void fill_column(const Box& domain,
                 const GridSpec& grid,
                 const Eigen::Ref<const Eigen::VectorXd>& u,
                 double h,
                 Eigen::Ref<Eigen::VectorXd> out,
                 bool& fallback)
{
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw std::invalid_argument("bandwidth must be positive and finite");
  }
  if (static_cast<std::size_t>(u.size()) != domain.dim() || grid.dim() != domain.dim()) {
    throw std::invalid_argument("kernel point, grid and domain dimensions differ");
  }
  const auto& pts = grid.points();
  const double scale = std::pow(h, -static_cast<double>(domain.dim()));
  const double inv_h2 = 1.0 / (h * h);
  for (Eigen::Index k = 0; k < pts.rows(); ++k) {
    const double r2 = (pts.row(k).transpose() - u).squaredNorm() * inv_h2;
    if (r2 < 1.0) {
      const double s = 1.0 - r2;
      out(k) = scale * s * s;
    } else {
      out(k) = 0.0;
    }
  }
  const double denom = grid.weights().dot(out);
  fallback = !(denom > kDenominatorFloor);
  if (fallback) {
    out.setConstant(1.0 / grid.total_measure());
  } else {
    out /= denom;
  }
}

} // namespace

Eigen::VectorXd normalized_kernel(const Box& domain,
                                  const GridSpec& grid,
                                  const Eigen::Ref<const Eigen::VectorXd>& u,
                                  double h)
{
  Eigen::VectorXd col(grid.size());
  bool fallback = false;
  fill_column(domain, grid, u, h, col, fallback);
  return col;
}

KernelMatrix normalized_kernel_matrix(const Box& domain,
                                      const GridSpec& grid,
                                      const Eigen::Ref<const Eigen::MatrixXd>& data,
                                      double h)
{
  KernelMatrix km;
  km.bandwidth = h;
  km.values.resize(static_cast<Eigen::Index>(grid.size()), data.rows());
  km.fallback.resize(static_cast<std::size_t>(data.rows()));
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    bool fallback = false;
    fill_column(domain, grid, data.row(i).transpose(), h, km.values.col(i), fallback);
    km.fallback[static_cast<std::size_t>(i)] = fallback;
  }
  return km;
}

double coverage_radius(const GridSpec& grid, const Eigen::Ref<const Eigen::MatrixXd>& data)
{
  if (data.rows() == 0) {
    return std::numeric_limits<double>::infinity();
  }
  double worst = 0.0;
  const auto& pts = grid.points();
  for (Eigen::Index k = 0; k < pts.rows(); ++k) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      best = std::min(best, (data.row(i) - pts.row(k)).squaredNorm());
    }
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

std::optional<std::size_t> first_uncovered_node(const GridSpec& grid,
                                                const Eigen::Ref<const Eigen::MatrixXd>& data,
                                                double h)
{
  const auto& pts = grid.points();
  const double h2 = h * h;
  for (Eigen::Index k = 0; k < pts.rows(); ++k) {
    bool covered = false;
    for (Eigen::Index i = 0; i < data.rows() && !covered; ++i) {
      covered = (data.row(i) - pts.row(k)).squaredNorm() < h2;
    }
    if (!covered) {
      return static_cast<std::size_t>(k);
    }
  }
  return std::nullopt;
}

std::vector<std::pair<std::size_t, double>> interpolation_stencil(
  const GridSpec& grid,
  const Eigen::Ref<const Eigen::VectorXd>& x)
{
  if (!grid.is_tensor()) {
    throw std::invalid_argument("interpolation requires a tensor grid");
  }
  const auto& axes = grid.axes();
  if (static_cast<std::size_t>(x.size()) != axes.size()) {
    throw std::invalid_argument("interpolation point has wrong dimension");
  }
  const std::size_t dim = axes.size();
  std::vector<std::size_t> lo(dim);
  std::vector<double> frac(dim);
  for (std::size_t l = 0; l < dim; ++l) {
    const auto& ax = axes[l];
    const double xl = x(static_cast<Eigen::Index>(l));
    const double a = ax(0);
    const double b = ax(ax.size() - 1);
    if (!(xl >= a && xl <= b)) {
      throw OutOfDomain("point outside the estimation domain on axis " + std::to_string(l));
    }
    const auto* begin = ax.data();
    const auto* end = ax.data() + ax.size();
    auto it = std::upper_bound(begin, end, xl);
    std::size_t i = it == begin ? 0 : static_cast<std::size_t>(it - begin) - 1;
    if (i + 1 >= static_cast<std::size_t>(ax.size())) {
      i = static_cast<std::size_t>(ax.size()) - 2;
    }
    lo[l] = i;
    const double left = ax(static_cast<Eigen::Index>(i));
    const double right = ax(static_cast<Eigen::Index>(i + 1));
    frac[l] = (xl - left) / (right - left);
  }
  std::vector<std::pair<std::size_t, double>> stencil;
  stencil.reserve(std::size_t{ 1 } << dim);
  std::vector<std::size_t> idx(dim);
  for (std::size_t corner = 0; corner < (std::size_t{ 1 } << dim); ++corner) {
    double w = 1.0;
    for (std::size_t l = 0; l < dim; ++l) {
      const bool up = (corner >> l) & 1U;
      idx[l] = lo[l] + (up ? 1 : 0);
      w *= up ? frac[l] : 1.0 - frac[l];
    }
    if (w != 0.0) {
      stencil.emplace_back(grid.flat_index(idx), w);
    }
  }
  return stencil;
}

} // namespace hsbf
