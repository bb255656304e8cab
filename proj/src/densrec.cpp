#include "hsbf/densrec.hpp"

#include "hsbf/error.hpp"
#include "hsbf/manifold.hpp"
#include "hsbf/random.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hsbf {

namespace {

constexpr double kCandidateStep = 0.1;
constexpr int kCandidateCount = 41;

double unit_ball_volume(std::size_t q)
{
  const double half = 0.5 * static_cast<double>(q);
  return std::pow(std::numbers::pi, half) / std::tgamma(half + 1.0);
}

// Integral of the q = 1 profile over [-1, u].
double epanechnikov_cdf(double u)
{
  u = std::clamp(u, -1.0, 1.0);
  return 0.75 * (u - u * u * u / 3.0) + 0.5;
}

void check_bandwidth(double h)
{
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw std::invalid_argument("reconstruction bandwidth must be positive and finite");
  }
}

// Points are stored as columns so that each one is contiguous.
double geodesic(const double* a, const double* b, Eigen::Index p)
{
  double c = 0.0;
  for (Eigen::Index l = 0; l < p; ++l) {
    c += a[l] * b[l];
  }
  double s = 0.0;
  for (Eigen::Index l = 0; l < p; ++l) {
    const double v = b[l] - c * a[l];
    s += v * v;
  }
  return std::atan2(std::sqrt(s), c);
}

double euclidean(const double* a, const double* b, Eigen::Index p)
{
  double s = 0.0;
  for (Eigen::Index l = 0; l < p; ++l) {
    const double v = a[l] - b[l];
    s += v * v;
  }
  return std::sqrt(s);
}

// Geometry shared by the box and sphere estimators.
struct Geometry
{
  std::size_t q = 1;
  bool sphere = false;
  const Box* box = nullptr;

  double dist(const double* a, const double* b, Eigen::Index p) const
  {
    return sphere ? geodesic(a, b, p) : euclidean(a, b, p);
  }
  //! c_q / h^q, the kernel value at distance zero.
  double peak(double h) const { return epanechnikov(q, 0.0) / std::pow(h, static_cast<double>(q)); }
  //! Reciprocal volume density at distance r (1 for boxes and circles).
  double inverse_density(double r) const
  {
    return sphere && q > 1 ? 1.0 / sphere_volume_density(q, r) : 1.0;
  }
  // Kernel weight of a sample at distance r < h.
  static double kernel(double r, double h, double peak, double inv_density)
  {
    const double t = r / h;
    return peak * (1.0 - t * t) * inv_density;
  }
  double factor(const Eigen::Ref<const Eigen::VectorXd>& s, double h) const
  {
    return sphere ? 1.0 : boundary_factor(*box, s, h);
  }
};

void check_samples(const Geometry& g, const Eigen::Ref<const Eigen::MatrixXd>& samples, const GridSpec& grid)
{
  if (samples.rows() == 0) {
    throw std::invalid_argument("sample set is empty");
  }
  const auto ambient = static_cast<Eigen::Index>(g.sphere ? g.q + 1 : g.q);
  if (samples.cols() != ambient || static_cast<Eigen::Index>(grid.dim()) != ambient) {
    throw std::invalid_argument("samples, grid and domain dimensions differ");
  }
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    if (g.sphere) {
      if (std::abs(samples.row(i).norm() - 1.0) > 1e-9) {
        throw OutOfDomain("sample " + std::to_string(i) + " is not on the unit sphere");
      }
    } else if (!g.box->contains(samples.row(i).transpose())) {
      throw OutOfDomain("sample " + std::to_string(i) + " lies outside the domain");
    }
  }
}

// Raw (unnormalized) estimate on the grid, boundary factor included.
Eigen::VectorXd raw_on_grid(const Geometry& g,
                            const Eigen::Ref<const Eigen::MatrixXd>& samples,
                            const GridSpec& grid,
                            double h)
{
  const Eigen::MatrixXd pts = samples.transpose();
  const Eigen::MatrixXd nodes = grid.points().transpose();
  const Eigen::Index p = pts.rows();
  const double peak = g.peak(h);
  const auto G = nodes.cols();
  Eigen::VectorXd out(G);
  for (Eigen::Index k = 0; k < G; ++k) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < pts.cols(); ++i) {
      const double r = g.dist(nodes.col(k).data(), pts.col(i).data(), p);
      if (r < h) {
        acc += Geometry::kernel(r, h, peak, g.inverse_density(r));
      }
    }
    out(k) = acc > 0.0 ? g.factor(nodes.col(k), h) * acc / static_cast<double>(pts.cols()) : 0.0;
  }
  return out;
}

HilbertElement finish(const Eigen::VectorXd& raw, const GridSpec& grid, double h)
{
  for (Eigen::Index k = 0; k < raw.size(); ++k) {
    if (!(raw(k) > 0.0)) {
      throw BandwidthTooSmall(static_cast<std::size_t>(k),
                              "reconstructed density vanishes at grid node " + std::to_string(k) +
                                "; bandwidth " + std::to_string(h) + " is too small");
    }
  }
  const double total = grid.weights().dot(raw);
  return HilbertElement(SpaceDescriptor::bayes_hilbert(grid), raw / total);
}

// Smallest bandwidth for which every grid node has a sample strictly inside
// the kernel support.
double positivity_bound(const Geometry& g, const Eigen::MatrixXd& pts, const Eigen::MatrixXd& nodes)
{
  const Eigen::Index p = pts.rows();
  double worst = 0.0;
  for (Eigen::Index k = 0; k < nodes.cols(); ++k) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < pts.cols(); ++i) {
      best = std::min(best, g.dist(nodes.col(k).data(), pts.col(i).data(), p));
    }
    worst = std::max(worst, best);
  }
  // strictly above the largest gap, with room for rounding
  return worst * (1.0 + 1e-9) + 1e-12;
}

DensityCv cross_validate(const Geometry& g,
                         const Eigen::Ref<const Eigen::MatrixXd>& samples,
                         const GridSpec& grid,
                         std::optional<std::vector<double>> candidates,
                         std::size_t folds,
                         std::uint64_t seed)
{
  check_samples(g, samples, grid);
  const Eigen::MatrixXd pts = samples.transpose();
  const Eigen::MatrixXd nodes = grid.points().transpose();
  const Eigen::Index p = pts.rows();
  DensityCv out;
  out.lower = positivity_bound(g, pts, nodes);
  std::vector<double> cand = candidates ? *candidates : density_candidates(out.lower);
  std::sort(cand.begin(), cand.end());
  for (double h : cand) {
    if (h >= out.lower && std::isfinite(h) && (!g.sphere || h < std::numbers::pi)) {
      out.candidates.push_back(h);
    }
  }
  if (out.candidates.empty()) {
    throw BandwidthTooSmall(0, "no candidate bandwidth gives a positive reconstruction");
  }
  const auto n = static_cast<std::size_t>(samples.rows());
  const std::size_t C = out.candidates.size();
  if (n < 2) {
    out.scores.assign(C, 0.0);
    out.bandwidth = out.candidates.front();
    return out;
  }
  const std::size_t K = std::min(folds, n);
  const auto label = fold_assignment(n, K, seed);
  const auto G = nodes.cols();
  std::vector<double> peak(C);
  for (std::size_t c = 0; c < C; ++c) {
    peak[c] = g.peak(out.candidates[c]);
  }
  // The kernel at distance r is peak_c (1 - r^2 / h_c^2) / theta(r) for every
  // candidate h_c > r. Sums over samples are therefore kept as two moments
  // binned by the first candidate exceeding r, then prefix-summed.
  struct Binned
  {
    Eigen::MatrixXd m0, m2;
  };
  auto make_binned = [&](Eigen::Index rows) {
    return Binned{ Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(C)),
                   Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(C)) };
  };
  auto add = [&](Binned& b, Eigen::Index row, double r) {
    const auto it = std::upper_bound(out.candidates.begin(), out.candidates.end(), r);
    if (it == out.candidates.end()) {
      return;
    }
    const auto c = static_cast<Eigen::Index>(it - out.candidates.begin());
    const double inv = g.inverse_density(r);
    b.m0(row, c) += inv;
    b.m2(row, c) += inv * r * r;
  };
  auto kernel_sums = [&](const Binned& b) {
    Eigen::MatrixXd outm(b.m0.rows(), b.m0.cols());
    for (Eigen::Index row = 0; row < b.m0.rows(); ++row) {
      double s0 = 0.0;
      double s2 = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        const auto cc = static_cast<Eigen::Index>(c);
        s0 += b.m0(row, cc);
        s2 += b.m2(row, cc);
        const double h = out.candidates[c];
        outm(row, cc) = std::max(0.0, peak[c] * (s0 - s2 / (h * h)));
      }
    }
    return outm;
  };

  // per-fold kernel sums on the grid, one column per candidate
  std::vector<Binned> fold_bins(K, make_binned(G));
  for (Eigen::Index k = 0; k < G; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      add(fold_bins[label[i]], k, g.dist(nodes.col(k).data(), pts.col(static_cast<Eigen::Index>(i)).data(), p));
    }
  }
  std::vector<Eigen::MatrixXd> fold_grid;
  Eigen::MatrixXd total_grid = Eigen::MatrixXd::Zero(G, static_cast<Eigen::Index>(C));
  for (const auto& b : fold_bins) {
    fold_grid.push_back(kernel_sums(b));
    total_grid += fold_grid.back();
  }
  // boundary factors on the grid
  Eigen::MatrixXd factor_grid(G, static_cast<Eigen::Index>(C));
  for (Eigen::Index k = 0; k < G; ++k) {
    for (std::size_t c = 0; c < C; ++c) {
      factor_grid(k, static_cast<Eigen::Index>(c)) = g.factor(nodes.col(k), out.candidates[c]);
    }
  }
  // leave-fold-out kernel sums at the held-out samples; distances are
  // symmetric, so each pair is visited once
  Binned held_bins = make_binned(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (label[j] == label[i]) {
        continue;
      }
      const double r =
        g.dist(pts.col(static_cast<Eigen::Index>(i)).data(), pts.col(static_cast<Eigen::Index>(j)).data(), p);
      add(held_bins, static_cast<Eigen::Index>(i), r);
      add(held_bins, static_cast<Eigen::Index>(j), r);
    }
  }
  const Eigen::MatrixXd held = kernel_sums(held_bins);
  out.scores.assign(C, 0.0);
  const Eigen::VectorXd& q = grid.weights();
  for (std::size_t c = 0; c < C; ++c) {
    const auto cc = static_cast<Eigen::Index>(c);
    const Eigen::VectorXd full = factor_grid.col(cc).cwiseProduct(total_grid.col(cc));
    const double zfull = q.dot(full);
    const double sq = q.dot(full.cwiseAbs2()) / (zfull * zfull);
    std::vector<double> zfold(K, 0.0);
    for (std::size_t f = 0; f < K; ++f) {
      const Eigen::VectorXd rest =
        factor_grid.col(cc).cwiseProduct(total_grid.col(cc) - fold_grid[f].col(cc));
      zfold[f] = q.dot(rest);
    }
    double cross = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = zfold[label[i]];
      const double v = held(static_cast<Eigen::Index>(i), cc);
      if (z > 0.0 && v > 0.0) {
        cross += g.factor(pts.col(static_cast<Eigen::Index>(i)), out.candidates[c]) * v / z;
      }
    }
    out.scores[c] = sq - 2.0 * cross / static_cast<double>(n);
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < C; ++c) {
    if (out.scores[c] < out.scores[best]) {
      best = c;
    }
  }
  out.bandwidth = out.candidates[best];
  return out;
}

Geometry box_geometry(const Box& domain)
{
  Geometry g;
  g.q = domain.dim();
  g.box = &domain;
  return g;
}

Geometry sphere_geometry(const GridSpec& grid)
{
  if (grid.dim() < 2) {
    throw std::invalid_argument("sphere grids need ambient dimension >= 2");
  }
  Geometry g;
  g.q = grid.dim() - 1;
  g.sphere = true;
  return g;
}

} // namespace

double epanechnikov(std::size_t q, double t)
{
  if (q == 0) {
    throw std::invalid_argument("kernel dimension must be >= 1");
  }
  if (!(t >= 0.0)) {
    throw std::invalid_argument("kernel argument must be nonnegative");
  }
  if (t >= 1.0) {
    return 0.0;
  }
  const double c = (static_cast<double>(q) + 2.0) / (2.0 * unit_ball_volume(q));
  return c * (1.0 - t * t);
}

double boundary_factor(const Box& box, const Eigen::Ref<const Eigen::VectorXd>& s, double h)
{
  check_bandwidth(h);
  if (static_cast<std::size_t>(s.size()) != box.dim()) {
    throw std::invalid_argument("point and box dimensions differ");
  }
  if (box.depth(s) >= h) {
    return 1.0;
  }
  double mass = 0.0;
  if (box.dim() == 1) {
    mass = epanechnikov_cdf((box.upper(0) - s(0)) / h) - epanechnikov_cdf((box.lower(0) - s(0)) / h);
  } else if (box.dim() == 2) {
    const double a1 = std::max(-1.0, (box.lower(0) - s(0)) / h);
    const double b1 = std::min(1.0, (box.upper(0) - s(0)) / h);
    const double a2 = (box.lower(1) - s(1)) / h;
    const double b2 = (box.upper(1) - s(1)) / h;
    const double c2 = 2.0 / std::numbers::pi;
    if (b1 > a1) {
      auto inner = [&](double u1) {
        const double rr = std::max(0.0, 1.0 - u1 * u1);
        const double r = std::sqrt(rr);
        const double lo = std::max(a2, -r);
        const double hi = std::min(b2, r);
        if (!(hi > lo)) {
          return 0.0;
        }
        auto prim = [rr](double v) { return rr * v - v * v * v / 3.0; };
        return c2 * (prim(hi) - prim(lo));
      };
      mass = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(inner, a1, b1, 15, 1e-13);
    }
  } else {
    throw std::invalid_argument("boundary correction is implemented for q = 1 and q = 2");
  }
  if (!(mass > 0.0)) {
    throw NumericError("kernel has no mass inside the domain at this point");
  }
  return 1.0 / mass;
}

HilbertElement reconstruct_box(const Eigen::Ref<const Eigen::MatrixXd>& samples,
                               const Box& domain,
                               const GridSpec& grid,
                               double h)
{
  check_bandwidth(h);
  const Geometry g = box_geometry(domain);
  check_samples(g, samples, grid);
  return finish(raw_on_grid(g, samples, grid, h), grid, h);
}

HilbertElement reconstruct_sphere(const Eigen::Ref<const Eigen::MatrixXd>& samples,
                                  const GridSpec& grid,
                                  double h)
{
  check_bandwidth(h);
  if (!(h < std::numbers::pi)) {
    throw std::invalid_argument("sphere bandwidth must be below pi");
  }
  const Geometry g = sphere_geometry(grid);
  check_samples(g, samples, grid);
  return finish(raw_on_grid(g, samples, grid, h), grid, h);
}

std::vector<double> density_candidates(double lower)
{
  std::vector<double> out;
  out.reserve(kCandidateCount);
  for (int k = 0; k < kCandidateCount; ++k) {
    out.push_back(lower + kCandidateStep * k);
  }
  return out;
}

DensityCv cv_bandwidth_box(const Eigen::Ref<const Eigen::MatrixXd>& samples,
                           const Box& domain,
                           const GridSpec& grid,
                           std::optional<std::vector<double>> candidates,
                           std::size_t folds,
                           std::uint64_t seed)
{
  return cross_validate(box_geometry(domain), samples, grid, std::move(candidates), folds, seed);
}

DensityCv cv_bandwidth_sphere(const Eigen::Ref<const Eigen::MatrixXd>& samples,
                              const GridSpec& grid,
                              std::optional<std::vector<double>> candidates,
                              std::size_t folds,
                              std::uint64_t seed)
{
  return cross_validate(sphere_geometry(grid), samples, grid, std::move(candidates), folds, seed);
}

HilbertElement reconstruct_box(const SampleSet& set, const Box& domain, const GridSpec& grid, std::uint64_t seed)
{
  const double h =
    set.bandwidth ? *set.bandwidth : cv_bandwidth_box(set.points, domain, grid, std::nullopt, 10, seed).bandwidth;
  return reconstruct_box(set.points, domain, grid, h);
}

HilbertElement reconstruct_sphere(const SampleSet& set, const GridSpec& grid, std::uint64_t seed)
{
  const double h =
    set.bandwidth ? *set.bandwidth : cv_bandwidth_sphere(set.points, grid, std::nullopt, 10, seed).bandwidth;
  return reconstruct_sphere(set.points, grid, h);
}

} // namespace hsbf
