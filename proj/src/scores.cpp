#include "hsbf/scores.hpp"

#include "hsbf/error.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace hsbf {

namespace {

// Eigenvalues below this fraction of the largest one are treated as zero.
constexpr double kRelativeRankTol = 1e-10;
constexpr double kDegenerateTol = 1e-12;

struct Decomposition
{
  Eigen::VectorXd values;
  Eigen::MatrixXd basis_w; // rows: eigen-elements in metric-scaled coordinates
  Eigen::MatrixXd scores;
  bool degenerate = false;
};

// Descending eigenpairs of a symmetric matrix.
void sorted_eigen(const Eigen::MatrixXd& a, Eigen::VectorXd& values, Eigen::MatrixXd& vectors)
{
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  if (eig.info() != Eigen::Success) {
    throw NumericError("symmetric eigen-decomposition failed");
  }
  values = eig.eigenvalues().reverse();
  vectors = eig.eigenvectors().rowwise().reverse();
}

// Extends the orthonormal rows [0, filled) of `basis` by Gram-Schmidt on the
// standard unit vectors, row `filled` onwards.
void complete_basis(Eigen::MatrixXd& basis, Eigen::Index filled)
{
  const Eigen::Index m = basis.cols();
  Eigen::Index next = filled;
  for (Eigen::Index k = 0; k < m && next < basis.rows(); ++k) {
    Eigen::RowVectorXd v = Eigen::RowVectorXd::Unit(m, k);
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index s = 0; s < next; ++s) {
        v -= v.dot(basis.row(s)) * basis.row(s);
      }
    }
    const double len = v.norm();
    if (len > 0.5) {
      basis.row(next++) = v / len;
    }
  }
  if (next < basis.rows()) {
    throw NumericError("could not complete an orthonormal basis");
  }
}

// Flips eigen-elements so that the coordinate of largest absolute value is
// positive; ties go to the first such coordinate.
void fix_signs(Decomposition& dec, const Eigen::VectorXd& root_metric)
{
  for (Eigen::Index r = 0; r < dec.basis_w.rows(); ++r) {
    const Eigen::RowVectorXd coords = dec.basis_w.row(r).cwiseQuotient(root_metric.transpose());
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index k = 0; k < coords.size(); ++k) {
      if (std::abs(coords(k)) > best) {
        best = std::abs(coords(k));
        arg = k;
      }
    }
    if (coords(arg) < 0.0) {
      dec.basis_w.row(r) *= -1.0;
      dec.scores.col(r) *= -1.0;
    }
  }
}

void check_rank(std::size_t r, std::size_t n, std::size_t dim)
{
  if (n < 2) {
    throw std::invalid_argument("at least two observations are required");
  }
  if (r == 0 || r > std::min(n - 1, dim)) {
    throw std::invalid_argument("number of components must be in [1, min(n - 1, dim)]");
  }
}

// xw: centered data in metric-scaled coordinates (rows).
Decomposition pca_gram(const Eigen::MatrixXd& xw, std::size_t r, double divisor, double scale)
{
  const auto R = static_cast<Eigen::Index>(r);
  Eigen::VectorXd lambda;
  Eigen::MatrixXd u;
  sorted_eigen(xw * xw.transpose() / divisor, lambda, u);
  Decomposition dec;
  dec.values = lambda.head(R).cwiseMax(0.0);
  dec.degenerate = !(lambda(0) > kDegenerateTol * kDegenerateTol * std::max(1.0, scale));
  dec.basis_w.resize(R, xw.cols());
  Eigen::Index filled = 0;
  if (!dec.degenerate) {
    const double cutoff = kRelativeRankTol * lambda(0);
    for (; filled < R && lambda(filled) > cutoff; ++filled) {
      dec.basis_w.row(filled) =
        (xw.transpose() * u.col(filled)).transpose() / std::sqrt(lambda(filled) * divisor);
    }
  }
  for (Eigen::Index s = filled; s < R; ++s) {
    dec.values(s) = 0.0;
  }
  complete_basis(dec.basis_w, filled);
  dec.scores = xw * dec.basis_w.transpose();
  return dec;
}

Decomposition sca_gram(const Eigen::MatrixXd& xw,
                       const Eigen::MatrixXd& yw,
                       std::size_t r,
                       double divisor)
{
  const auto R = static_cast<Eigen::Index>(r);
  Eigen::VectorXd dx;
  Eigen::MatrixXd v;
  sorted_eigen(xw * xw.transpose(), dx, v);
  Eigen::Index s = 0;
  while (s < dx.size() && dx(s) > kRelativeRankTol * std::max(dx(0), 0.0) && dx(s) > 0.0) {
    ++s;
  }
  Decomposition dec;
  dec.values = Eigen::VectorXd::Zero(R);
  dec.basis_w.resize(R, xw.cols());
  Eigen::Index filled = 0;
  const double scale = xw.norm() * yw.norm() / divisor;
  if (s > 0) {
    const Eigen::VectorXd root = dx.head(s).cwiseSqrt();
    const Eigen::MatrixXd a = v.leftCols(s) * root.asDiagonal();
    const Eigen::MatrixXd m = a.transpose() * (yw * (yw.transpose() * a)) / (divisor * divisor);
    Eigen::VectorXd sigma2;
    Eigen::MatrixXd c;
    sorted_eigen(m, sigma2, c);
    dec.degenerate = !(std::sqrt(std::max(sigma2(0), 0.0)) > kDegenerateTol * std::max(1.0, scale));
    // basis of span(xw^T): B = xw^T V D^{-1/2}
    const Eigen::MatrixXd b = xw.transpose() * v.leftCols(s) * root.cwiseInverse().asDiagonal();
    const Eigen::Index take = std::min<Eigen::Index>(R, s);
    for (; filled < take; ++filled) {
      if (!dec.degenerate && !(sigma2(filled) > kRelativeRankTol * sigma2(0))) {
        break;
      }
      dec.values(filled) = std::max(sigma2(filled), 0.0);
      dec.basis_w.row(filled) = (b * c.col(filled)).transpose();
    }
  } else {
    dec.degenerate = true;
  }
  complete_basis(dec.basis_w, filled);
  dec.scores = xw * dec.basis_w.transpose();
  return dec;
}

Eigen::MatrixXd scaled(const Eigen::MatrixXd& coords, const Eigen::VectorXd& root)
{
  return coords * root.asDiagonal();
}

ScoreModel assemble(ScoreMethod method,
                    const SpaceDescriptor& space,
                    Eigen::VectorXd mean,
                    Decomposition dec,
                    double divisor)
{
  const Eigen::VectorXd root = space.metric().cwiseSqrt();
  fix_signs(dec, root);
  ScoreModel model;
  model.method = method;
  model.space = space;
  model.mean = std::move(mean);
  model.values = std::move(dec.values);
  model.basis = dec.basis_w * root.cwiseInverse().asDiagonal();
  model.scores = std::move(dec.scores);
  model.divisor = divisor;
  model.degenerate = dec.degenerate;
  return model;
}

Eigen::MatrixXd centered(const Eigen::MatrixXd& coords, Eigen::VectorXd& mean)
{
  mean = coords.colwise().mean().transpose();
  return coords.rowwise() - mean.transpose();
}

struct TangentSample
{
  SphereCurve base;
  SpaceDescriptor space;
  Eigen::MatrixXd coords; // n x (T c), node-major
};

TangentSample log_sample(const std::shared_ptr<const GridSpec>& time_grid, std::span<const SphereCurve> z)
{
  if (!time_grid) {
    throw std::invalid_argument("a time grid is required");
  }
  if (z.empty()) {
    throw std::invalid_argument("at least one curve is required");
  }
  SphereCurve mu = intrinsic_mean_curve(z);
  const auto T = static_cast<Eigen::Index>(mu.size());
  const auto c = static_cast<Eigen::Index>(mu.ambient_dim());
  Eigen::MatrixXd coords(static_cast<Eigen::Index>(z.size()), T * c);
  for (std::size_t i = 0; i < z.size(); ++i) {
    const TangentField f = log_field(time_grid, mu, z[i]);
    const Eigen::MatrixXd rowmajor = f.vectors().transpose();
    coords.row(static_cast<Eigen::Index>(i)) =
      Eigen::Map<const Eigen::RowVectorXd>(rowmajor.data(), rowmajor.size());
  }
  SpaceDescriptor space = SpaceDescriptor::l2_grid(*time_grid, static_cast<std::size_t>(c));
  return { std::move(mu), std::move(space), std::move(coords) };
}

} // namespace

std::string to_string(ScoreMethod method)
{
  switch (method) {
    case ScoreMethod::pca:
      return "pca";
    case ScoreMethod::sca:
      return "sca";
    case ScoreMethod::irfpc:
      return "irfpc";
    case ScoreMethod::irsc:
      return "irsc";
  }
  return "unknown";
}

HilbertElement ScoreModel::element(std::size_t r) const
{
  return from_coordinates(basis.row(static_cast<Eigen::Index>(r)).transpose(), space);
}

Eigen::VectorXd ScoreModel::project(const HilbertElement& x) const
{
  if (!(x.space() == space)) {
    throw SpaceMismatch("element does not live in the score model's space");
  }
  const Eigen::VectorXd diff = (to_coordinates(x) - mean).cwiseProduct(space.metric());
  return basis * diff;
}

ScoreModel hpca(std::span<const HilbertElement> x, std::size_t r)
{
  check_rank(r, x.size(), x.empty() ? 0 : x.front().space().dimension());
  const auto& space = x.front().space();
  const Eigen::MatrixXd coords = coordinate_matrix(x);
  Eigen::VectorXd mean;
  const Eigen::VectorXd root = space.metric().cwiseSqrt();
  const Eigen::MatrixXd xw = scaled(centered(coords, mean), root);
  const double scale = scaled(coords, root).rowwise().squaredNorm().mean();
  const double divisor = static_cast<double>(x.size()) - 1.0;
  Decomposition dec = pca_gram(xw, r, divisor, scale);
  if (dec.degenerate) {
    throw InvariantViolation("degenerate sample: all elements are equal");
  }
  return assemble(ScoreMethod::pca, space, std::move(mean), std::move(dec), divisor);
}

ScoreModel hsca(std::span<const HilbertElement> x, std::span<const HilbertElement> y, std::size_t r)
{
  if (x.size() != y.size()) {
    throw std::invalid_argument("X and Y samples must have the same length");
  }
  check_rank(r, x.size(), x.empty() ? 0 : x.front().space().dimension());
  const auto& space = x.front().space();
  Eigen::VectorXd mean, ymean;
  const Eigen::MatrixXd xw = scaled(centered(coordinate_matrix(x), mean), space.metric().cwiseSqrt());
  const Eigen::MatrixXd yw =
    scaled(centered(coordinate_matrix(y), ymean), y.front().space().metric().cwiseSqrt());
  const double divisor = static_cast<double>(x.size()) - 1.0;
  return assemble(ScoreMethod::sca, space, std::move(mean), sca_gram(xw, yw, r, divisor), divisor);
}

ScoreModel irfpc(std::shared_ptr<const GridSpec> time_grid, std::span<const SphereCurve> z, std::size_t r)
{
  TangentSample s = log_sample(time_grid, z);
  check_rank(r, z.size(), s.space.dimension());
  Eigen::VectorXd mean;
  const Eigen::VectorXd root = s.space.metric().cwiseSqrt();
  const Eigen::MatrixXd xw = scaled(centered(s.coords, mean), root);
  const double scale = scaled(s.coords, root).rowwise().squaredNorm().mean();
  const double divisor = static_cast<double>(z.size());
  ScoreModel model =
    assemble(ScoreMethod::irfpc, s.space, std::move(mean), pca_gram(xw, r, divisor, scale), divisor);
  model.base_curve = std::move(s.base);
  model.time_grid = std::move(time_grid);
  return model;
}

ScoreModel irsc(std::shared_ptr<const GridSpec> time_grid,
                std::span<const SphereCurve> z,
                std::span<const HilbertElement> y,
                std::size_t r)
{
  if (z.size() != y.size()) {
    throw std::invalid_argument("curves and responses must have the same length");
  }
  TangentSample s = log_sample(time_grid, z);
  check_rank(r, z.size(), s.space.dimension());
  Eigen::VectorXd mean, ymean;
  const Eigen::MatrixXd xw = scaled(centered(s.coords, mean), s.space.metric().cwiseSqrt());
  const Eigen::MatrixXd yw =
    scaled(centered(coordinate_matrix(y), ymean), y.front().space().metric().cwiseSqrt());
  const double divisor = static_cast<double>(z.size());
  ScoreModel model =
    assemble(ScoreMethod::irsc, s.space, std::move(mean), sca_gram(xw, yw, r, divisor), divisor);
  model.base_curve = std::move(s.base);
  model.time_grid = std::move(time_grid);
  return model;
}

Eigen::VectorXd canonical_correlations(const Eigen::Ref<const Eigen::MatrixXd>& a,
                                       const Eigen::Ref<const Eigen::MatrixXd>& b)
{
  if (a.rows() != b.rows() || a.rows() < 2) {
    throw std::invalid_argument("score matrices need the same number (>= 2) of rows");
  }
  auto orth = [](const Eigen::MatrixXd& m) {
    const Eigen::MatrixXd c = m.rowwise() - m.colwise().mean();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(c);
    return Eigen::MatrixXd(qr.householderQ() * Eigen::MatrixXd::Identity(c.rows(), c.cols()));
  };
  const Eigen::MatrixXd qa = orth(a);
  const Eigen::MatrixXd qb = orth(b);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(qa.transpose() * qb);
  return svd.singularValues().cwiseMin(1.0);
}

} // namespace hsbf
