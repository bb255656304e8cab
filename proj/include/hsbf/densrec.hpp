#pragma once

#include "hsbf/hilbert.hpp"
#include "hsbf/kernelgrid.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace hsbf {

//! Raw observations of one random density: rows of `points` lie in a box of
//! R^q or on the unit sphere S^q (as unit vectors of R^{q+1}).
struct SampleSet
{
  Eigen::MatrixXd points;
  //! Fixed reconstruction bandwidth; chosen by cross-validation when empty.
  std::optional<double> bandwidth;
};

//! Epanechnikov profile normalized on R^q: c_q (1 - t^2) for 0 <= t < 1, so
//! that the integral of K(|u|) over R^q is one (c_1 = 3/4, c_2 = 2/pi).
double epanechnikov(std::size_t q, double t);

//! Boundary factor w(s, h): inverse of the mass of u -> h^-q K(|s - u| / h)
//! inside the box. Exactly 1 when the ball B(s, h) lies in the box. Closed
//! form for q = 1, inner closed form plus adaptive Gauss-Kronrod for q = 2.
double boundary_factor(const Box& box, const Eigen::Ref<const Eigen::VectorXd>& s, double h);

//! Boundary-corrected kernel density estimate on a box, evaluated on `grid`
//! and renormalized to integrate to one under the grid quadrature. Throws
//! BandwidthTooSmall when it vanishes at some grid node.
HilbertElement reconstruct_box(const Eigen::Ref<const Eigen::MatrixXd>& samples,
                               const Box& domain,
                               const GridSpec& grid,
                               double h);

//! Kernel density estimate on S^q with geodesic distances and the volume
//! density correction, evaluated on `grid` and renormalized under its
//! quadrature. Requires 0 < h < pi.
HilbertElement reconstruct_sphere(const Eigen::Ref<const Eigen::MatrixXd>& samples,
                                  const GridSpec& grid,
                                  double h);

//! Outcome of the cross-validated bandwidth search.
struct DensityCv
{
  double bandwidth = 0.0;
  //! Smallest bandwidth giving a strictly positive estimate on the grid.
  double lower = 0.0;
  std::vector<double> candidates;
  std::vector<double> scores;
};

//! {lower + 0.1 k : k = 0..40}.
std::vector<double> density_candidates(double lower);

//! K-fold least-squares cross-validation: the integral of the squared
//! estimate minus twice the mean of the leave-fold-out estimate at the
//! held-out samples. Candidates that do not give a positive estimate (and for
//! the sphere those >= pi) are dropped; ties go to the smaller bandwidth.
//! With no candidate list the default grid above the positivity bound is used.
DensityCv cv_bandwidth_box(const Eigen::Ref<const Eigen::MatrixXd>& samples,
                           const Box& domain,
                           const GridSpec& grid,
                           std::optional<std::vector<double>> candidates = std::nullopt,
                           std::size_t folds = 10,
                           std::uint64_t seed = 0);

DensityCv cv_bandwidth_sphere(const Eigen::Ref<const Eigen::MatrixXd>& samples,
                              const GridSpec& grid,
                              std::optional<std::vector<double>> candidates = std::nullopt,
                              std::size_t folds = 10,
                              std::uint64_t seed = 0);

//! Reconstruction with the sample set's bandwidth, or the CV choice.
HilbertElement reconstruct_box(const SampleSet& set, const Box& domain, const GridSpec& grid, std::uint64_t seed = 0);
HilbertElement reconstruct_sphere(const SampleSet& set, const GridSpec& grid, std::uint64_t seed = 0);

} // namespace hsbf
