#include "hsbf/hilbert.hpp"

#include "hsbf/error.hpp"

#include <cmath>
#include <stdexcept>

namespace hsbf {

namespace {

constexpr double kSimplexSumTol = 1e-12;
constexpr double kDensityIntegralTol = 1e-10;
constexpr double kClrMeanTol = 1e-8;
constexpr double kPositivityFloor = 1e-300;

void require_same_space(const SpaceDescriptor& a, const SpaceDescriptor& b)
{
  if (!(a == b)) {
    throw SpaceMismatch("elements belong to different spaces (" + to_string(a.kind()) + " vs " +
                        to_string(b.kind()) + ")");
  }
}

double weighted_mean(const Eigen::Ref<const Eigen::VectorXd>& z, const Eigen::VectorXd& w)
{
  return w.dot(z) / w.sum();
}

} // namespace

std::string to_string(SpaceKind kind)
{
  switch (kind) {
    case SpaceKind::euclidean:
      return "euclidean";
    case SpaceKind::simplex:
      return "simplex";
    case SpaceKind::bayes_hilbert:
      return "bayes_hilbert";
    case SpaceKind::l2_grid:
      return "l2";
  }
  return "unknown";
}

SpaceDescriptor SpaceDescriptor::euclidean(std::size_t dim)
{
  if (dim == 0) {
    throw std::invalid_argument("euclidean space needs dimension >= 1");
  }
  SpaceDescriptor s;
  s.kind_ = SpaceKind::euclidean;
  s.metric_ = std::make_shared<const Eigen::VectorXd>(
    Eigen::VectorXd::Ones(static_cast<Eigen::Index>(dim)));
  return s;
}

SpaceDescriptor SpaceDescriptor::simplex(std::size_t parts)
{
  if (parts < 2) {
    throw std::invalid_argument("simplex needs at least 2 parts");
  }
  SpaceDescriptor s;
  s.kind_ = SpaceKind::simplex;
  s.metric_ = std::make_shared<const Eigen::VectorXd>(
    Eigen::VectorXd::Ones(static_cast<Eigen::Index>(parts)));
  return s;
}

SpaceDescriptor SpaceDescriptor::bayes_hilbert(GridSpec grid)
{
  if (grid.size() < 2) {
    throw std::invalid_argument("Bayes-Hilbert grid needs at least 2 nodes");
  }
  if (!((grid.weights().array() > 0.0).all()) || !grid.weights().allFinite()) {
    throw std::invalid_argument("Bayes-Hilbert measure weights must be positive and finite");
  }
  SpaceDescriptor s;
  s.kind_ = SpaceKind::bayes_hilbert;
  s.metric_ = std::make_shared<const Eigen::VectorXd>(grid.weights());
  s.grid_ = std::make_shared<const GridSpec>(std::move(grid));
  return s;
}

SpaceDescriptor SpaceDescriptor::l2_grid(GridSpec grid, std::size_t components)
{
  if (components == 0) {
    throw std::invalid_argument("L2 space needs at least one component");
  }
  if (!((grid.weights().array() > 0.0).all())) {
    throw std::invalid_argument("L2 measure weights must be positive");
  }
  const auto n = static_cast<Eigen::Index>(grid.size());
  const auto c = static_cast<Eigen::Index>(components);
  Eigen::VectorXd metric(n * c);
  for (Eigen::Index k = 0; k < n; ++k) {
    metric.segment(k * c, c).setConstant(grid.weights()(k));
  }
  SpaceDescriptor s;
  s.kind_ = SpaceKind::l2_grid;
  s.components_ = components;
  s.metric_ = std::make_shared<const Eigen::VectorXd>(std::move(metric));
  s.grid_ = std::make_shared<const GridSpec>(std::move(grid));
  return s;
}

double SpaceDescriptor::total_measure() const
{
  return metric_->sum() / static_cast<double>(components_);
}

bool operator==(const SpaceDescriptor& a, const SpaceDescriptor& b)
{
  if (a.kind_ != b.kind_ || a.components_ != b.components_) {
    return false;
  }
  if (a.metric_ != b.metric_ &&
      (a.metric_->size() != b.metric_->size() || *a.metric_ != *b.metric_)) {
    return false;
  }
  if (a.grid_ == b.grid_) {
    return true;
  }
  if (!a.grid_ || !b.grid_) {
    return false;
  }
  return *a.grid_ == *b.grid_;
}

HilbertElement::HilbertElement(SpaceDescriptor space, Eigen::VectorXd coeffs)
  : space_(std::move(space))
  , coeffs_(std::move(coeffs))
{
  if (static_cast<std::size_t>(coeffs_.size()) != space_.dimension()) {
    throw InvariantViolation("coefficient length " + std::to_string(coeffs_.size()) +
                             " does not match space dimension " +
                             std::to_string(space_.dimension()));
  }
  if (!coeffs_.allFinite()) {
    throw InvariantViolation("coefficients must be finite");
  }
  if (space_.is_log_ratio()) {
    if (!(coeffs_.array() > 0.0).all()) {
      throw InvariantViolation(to_string(space_.kind()) + " element needs strictly positive entries");
    }
    const double total = space_.metric().dot(coeffs_);
    const double tol =
      space_.kind() == SpaceKind::simplex ? kSimplexSumTol : kDensityIntegralTol;
    if (std::abs(total - 1.0) > tol) {
      throw InvariantViolation(to_string(space_.kind()) + " element must integrate to 1 (got " +
                               std::to_string(total) + ")");
    }
  }
}

HilbertElement zero(const SpaceDescriptor& space)
{
  if (space.is_log_ratio()) {
    return HilbertElement(space,
                          Eigen::VectorXd::Constant(static_cast<Eigen::Index>(space.dimension()),
                                                    1.0 / space.total_measure()));
  }
  return HilbertElement(space, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.dimension())));
}

Eigen::VectorXd clr(const HilbertElement& v)
{
  if (!v.space().is_log_ratio()) {
    throw SpaceMismatch("clr is defined for simplex and Bayes-Hilbert elements only");
  }
  Eigen::VectorXd z = v.coeffs().array().log().matrix();
  z.array() -= weighted_mean(z, v.space().metric());
  return z;
}

namespace {

HilbertElement exp_normalize(Eigen::VectorXd z, const SpaceDescriptor& space)
{
  z.array() -= z.maxCoeff();
  Eigen::VectorXd e = z.array().exp().matrix();
  const double total = space.metric().dot(e);
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericError("exponentiation overflow while materializing element");
  }
  e /= total;
  if (e.minCoeff() < kPositivityFloor) {
    throw NumericError("density value below 1e-300 after exponentiation");
  }
  return HilbertElement(space, std::move(e));
}

} // namespace

HilbertElement clr_inv(const Eigen::Ref<const Eigen::VectorXd>& z, const SpaceDescriptor& space)
{
  if (!space.is_log_ratio()) {
    throw SpaceMismatch("clr_inv targets simplex and Bayes-Hilbert spaces only");
  }
  if (static_cast<std::size_t>(z.size()) != space.dimension()) {
    throw InvariantViolation("clr vector has wrong length");
  }
  if (std::abs(weighted_mean(z, space.metric())) > kClrMeanTol) {
    throw InvariantViolation("clr vector must have weighted mean zero");
  }
  return exp_normalize(z, space);
}

Eigen::VectorXd to_coordinates(const HilbertElement& v)
{
  return v.space().is_log_ratio() ? clr(v) : v.coeffs();
}

HilbertElement from_coordinates(const Eigen::Ref<const Eigen::VectorXd>& z,
                                const SpaceDescriptor& space)
{
  if (static_cast<std::size_t>(z.size()) != space.dimension()) {
    throw InvariantViolation("coordinate vector has wrong length");
  }
  if (space.is_log_ratio()) {
    return exp_normalize(z, space);
  }
  return HilbertElement(space, z);
}

Eigen::MatrixXd coordinate_matrix(std::span<const HilbertElement> elements)
{
  if (elements.empty()) {
    return {};
  }
  const auto& space = elements.front().space();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(elements.size()),
                      static_cast<Eigen::Index>(space.dimension()));
  for (std::size_t i = 0; i < elements.size(); ++i) {
    require_same_space(space, elements[i].space());
    out.row(static_cast<Eigen::Index>(i)) = to_coordinates(elements[i]).transpose();
  }
  return out;
}

HilbertElement combine(double a, const HilbertElement& v, double b, const HilbertElement& w)
{
  require_same_space(v.space(), w.space());
  if (v.space().is_log_ratio()) {
    return exp_normalize(a * clr(v) + b * clr(w), v.space());
  }
  return HilbertElement(v.space(), a * v.coeffs() + b * w.coeffs());
}

HilbertElement subtract(const HilbertElement& v, const HilbertElement& w)
{
  return combine(1.0, v, -1.0, w);
}

double inner(const HilbertElement& v, const HilbertElement& w)
{
  require_same_space(v.space(), w.space());
  const auto& metric = v.space().metric();
  if (v.space().is_log_ratio()) {
    return (metric.array() * clr(v).array() * clr(w).array()).sum();
  }
  return (metric.array() * v.coeffs().array() * w.coeffs().array()).sum();
}

double norm(const HilbertElement& v)
{
  return std::sqrt(inner(v, v));
}

double distance(const HilbertElement& v, const HilbertElement& w)
{
  require_same_space(v.space(), w.space());
  const Eigen::VectorXd diff = to_coordinates(v) - to_coordinates(w);
  return std::sqrt((v.space().metric().array() * diff.array().square()).sum());
}

HilbertElement mean(std::span<const HilbertElement> elements)
{
  if (elements.empty()) {
    throw std::invalid_argument("mean of an empty list");
  }
  const auto& space = elements.front().space();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.dimension()));
  for (const auto& e : elements) {
    require_same_space(space, e.space());
    acc += to_coordinates(e);
  }
  acc /= static_cast<double>(elements.size());
  return from_coordinates(acc, space);
}

} // namespace hsbf
