#pragma once

#include "hsbf/hilbert.hpp"
#include "hsbf/manifold.hpp"
#include "hsbf/sbf.hpp"
#include "hsbf/scores.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace hsbf {

// ---------------------------------------------------------------------------
// Density responses on the circle

//! Densities on S^1 driven by two correlated normal predictors:
//! Y = f1(xi1) (+) f2(xi2) (+) eps in the Bayes-Hilbert geometry, with
//! f1(x) = g1^cos(pi x), f2(x) = g2^sin(2 pi x), eps = g3^delta for von Mises
//! densities g1, g2, g3 and delta ~ N(0, 1).
struct Sim1Config
{
  std::size_t n = 400;
  //! Sample size drawn from each density; the densities themselves are used
  //! when empty.
  std::optional<std::size_t> n_star;
  std::size_t replications = 100;
  std::uint64_t seed = 0;
  int circle_nodes = 100;
  double concentration = 1.0;
  std::array<double, 3> means{ -std::numbers::pi / 2.0, std::numbers::pi / 2.0, 0.0 };
  double predictor_mean = 0.5;
  double predictor_sd = 0.25;
  //! Covariance of the two predictors.
  double predictor_cov = 0.25 * 0.25 * 0.25;
  //! Folds of the reconstruction bandwidth search.
  std::size_t reconstruction_folds = 10;
};

struct Sim1Dataset
{
  //! Predictors with the exact density responses.
  std::shared_ptr<const RegressionData> truth;
  //! Predictors with densities reconstructed from samples (n_star set).
  std::shared_ptr<const RegressionData> reconstructed;
  //! Cross-validated bandwidth of each reconstruction.
  std::vector<double> reconstruction_bandwidths;
  std::vector<double> delta;
};

//! Bayes-Hilbert space on the circle grid of the configuration.
SpaceDescriptor sim1_space(const Sim1Config& config);
//! Von Mises density with the configured concentration and mean `means[k]`.
HilbertElement von_mises(const Sim1Config& config, std::size_t k);
//! True component f_j(x), j in {0, 1}.
HilbertElement sim1_component(const Sim1Config& config, std::size_t j, double x);
//! Replication `rep` (seeded from the configuration seed and rep).
Sim1Dataset generate_sim1(const Sim1Config& config, std::size_t rep);
//! All replications.
std::vector<Sim1Dataset> gen_sim1(const Sim1Config& config);

//! Draws from a density on the circle grid by inverting the piecewise-linear
//! interpolation of its cumulative distribution over the node angles; rows
//! are (cos s, sin s).
Eigen::MatrixXd sample_circle_density(const HilbertElement& density, std::size_t count, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Scalar responses with sphere-valued functional predictors

//! Two S^2-valued curves Z_k(t) = Exp_{mu_k(t)}(eta_k1 psi_1(t) + eta_k2 psi_2(t))
//! and Y = sin(pi eta_11) / 5 - eta_12^3 + eta_21 tan(eta_22) + eps.
struct Sim2Config
{
  std::size_t n = 400;
  std::size_t replications = 100;
  std::uint64_t seed = 0;
  int time_nodes = 101;
  double noise_sd = 0.1;
  //! Score scales c_11, c_12, c_21, c_22.
  std::array<double, 4> scales{ 1.0, 0.75, 0.75, 0.5 };
  //! Normal law truncated to [-score_bound, score_bound].
  double score_sd = 0.5;
  double score_bound = 1.0;
};

struct Sim2Dataset
{
  std::shared_ptr<const GridSpec> time_grid;
  std::array<std::vector<SphereCurve>, 2> curves;
  //! n x 4 true scores (eta_11, eta_12, eta_21, eta_22).
  Eigen::MatrixXd scores;
  Eigen::VectorXd y;
  //! Draws redrawn because their tangent vector reached the cut locus.
  std::size_t redrawn = 0;
};

std::shared_ptr<const GridSpec> sim2_time_grid(const Sim2Config& config);
//! Mean curve mu_k, k in {0, 1}.
SphereCurve sim2_mean_curve(const GridSpec& time_grid, std::size_t k);
//! Basis field psi_r (r in {0, 1}) along mu_k: sqrt(2) sin(2 pi t) e_1(t) and
//! sqrt(2) cos(2 pi t) e_2(t), where (e_1, e_2) is the frame (1,0,0), (0,1,0)
//! at mu_k(0) parallel-transported along the grid.
TangentField sim2_basis(std::shared_ptr<const GridSpec> time_grid, std::size_t k, std::size_t r);
//! Domains of the additive model: multivariate (3 predictors, the last one
//! planar) or univariate (4 scalar predictors).
std::vector<Box> sim2_domains(bool multivariate);
//! True component j of the multivariate model at x.
double sim2_component(std::size_t j, const Eigen::Ref<const Eigen::VectorXd>& x);
Sim2Dataset generate_sim2(const Sim2Config& config, std::size_t rep);
std::vector<Sim2Dataset> gen_sim2(const Sim2Config& config);

//! n x 4 scores from iRFPC (two components per curve), with each
//! eigen-element's sign chosen to agree with the true basis field.
Eigen::MatrixXd estimated_scores(const Sim2Dataset& data, std::vector<ScoreModel>* models = nullptr);

// ---------------------------------------------------------------------------
// Measurement error and metrics

enum class ErrorLaw
{
  gaussian,
  uniform //!< uniform on [-1, 1]
};

//! Predictors replaced by xi + sigma U with independent draws of U.
RegressionData perturb_predictors(const RegressionData& data, double sigma, ErrorLaw law, std::uint64_t seed);

struct ComponentMetric
{
  double imse = 0.0;
  double isb = 0.0;
  double iv = 0.0;
};

//! Integrated squared error decomposition over replications. `truth` and each
//! estimate hold one row per quadrature node with coordinates in which the
//! response norm is the Euclidean norm.
ComponentMetric integrated_metrics(const Eigen::Ref<const Eigen::MatrixXd>& truth,
                                   const std::vector<Eigen::MatrixXd>& estimates,
                                   const Eigen::Ref<const Eigen::VectorXd>& quadrature);

struct MetricReport
{
  std::string label;
  std::vector<ComponentMetric> components;
  //! Replications that produced a fit.
  std::size_t replications = 0;
  std::vector<std::string> failures;
  double runtime_seconds = 0.0;
  //! Selected bandwidths per successful replication.
  std::vector<std::vector<double>> bandwidths;
};

struct StudyOptions
{
  //! Fixed bandwidths; CBS when empty. For the univariate sim2 model the last
  //! value is used for both parts of the planar predictor.
  std::optional<std::vector<double>> bandwidths;
  std::size_t folds = 5;
  std::size_t max_sweeps = 20;
  SbfOptions sbf;
};

//! Fits every replication on the true densities (n_star empty) or on the
//! reconstructions and reports IMSE, ISB and IV of both components.
MetricReport run_sim1(const Sim1Config& config, const StudyOptions& options = {});

enum class Sim2Variant
{
  estimated_univariate,
  estimated_multivariate,
  true_multivariate,
  true_univariate
};

std::string to_string(Sim2Variant variant);

//! One report per requested variant, sharing the generated data.
std::vector<MetricReport> run_sim2(const Sim2Config& config,
                                   const std::vector<Sim2Variant>& variants,
                                   const StudyOptions& options = {});

} // namespace hsbf
