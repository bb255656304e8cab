#include "hsbf/simharness.hpp"

#include "hsbf/bandwidth.hpp"
#include "hsbf/densrec.hpp"
#include "hsbf/error.hpp"
#include "hsbf/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace hsbf {

namespace {

// Stream indices for seeds derived from a replication seed.
constexpr std::uint64_t kDataStream = 0;
constexpr std::uint64_t kSampleStream = 1;
constexpr std::uint64_t kReconstructionStream = 2;
constexpr std::uint64_t kBandwidthStream = 3;

double node_angle(const GridSpec& grid, std::size_t k)
{
  return std::atan2(grid.point(k)(1), grid.point(k)(0));
}

Eigen::VectorXd log_von_mises(const Sim1Config& config, std::size_t k)
{
  const SpaceDescriptor space = sim1_space(config);
  const GridSpec& grid = *space.grid();
  const double kappa = config.concentration;
  const double norm = std::log(2.0 * std::numbers::pi * std::cyl_bessel_i(0.0, kappa));
  Eigen::VectorXd out(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    out(static_cast<Eigen::Index>(g)) = kappa * std::cos(node_angle(grid, g) - config.means.at(k)) - norm;
  }
  return out;
}

double sim1_exponent(std::size_t j, double x)
{
  if (j == 0) {
    return std::cos(std::numbers::pi * x);
  }
  if (j == 1) {
    return std::sin(2.0 * std::numbers::pi * x);
  }
  throw std::out_of_range("the density study has two components");
}

double truncated_normal(std::mt19937_64& rng, double sd, double bound)
{
  std::normal_distribution<double> z(0.0, sd);
  for (;;) {
    const double v = z(rng);
    if (std::abs(v) <= bound) {
      return v;
    }
  }
}

// Response coordinates scaled so that the response norm is Euclidean.
Eigen::MatrixXd scaled_in_domain_responses(const RegressionData& data, const DensityEstimates& dens)
{
  const Eigen::VectorXd root = data.space().metric().cwiseSqrt();
  Eigen::MatrixXd y(static_cast<Eigen::Index>(dens.n_in_domain()), data.response_coordinates().cols());
  for (std::size_t i = 0; i < dens.n_in_domain(); ++i) {
    y.row(static_cast<Eigen::Index>(i)) =
      data.response_coordinates().row(static_cast<Eigen::Index>(dens.in_domain[i])).cwiseProduct(root.transpose());
  }
  return y;
}

struct ScaledFit
{
  AdditiveSurface surface;
  std::vector<double> bandwidths;
};

ScaledFit fit_scaled(const RegressionData& data,
                     const std::vector<GridSpec>& grids,
                     const StudyOptions& options,
                     const std::optional<std::vector<double>>& fixed,
                     std::uint64_t seed)
{
  ScaledFit out;
  if (fixed) {
    out.bandwidths = *fixed;
  } else {
    CbsConfig cfg = default_cbs_config(data, GridRule::simulation, grids);
    cfg.folds = options.folds;
    cfg.max_sweeps = options.max_sweeps;
    cfg.seed = seed;
    cfg.sbf = options.sbf;
    out.bandwidths = cbs_select(data, cfg).bandwidths;
  }
  const DensityEstimates dens = estimate_densities(data, grids, out.bandwidths);
  out.surface = backfit_coordinates(dens, scaled_in_domain_responses(data, dens), options.sbf);
  return out;
}

ComponentMetric failed_metric()
{
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return { nan, nan, nan };
}

std::vector<ComponentMetric> collect(const std::vector<Eigen::MatrixXd>& truth,
                                     const std::vector<std::vector<Eigen::MatrixXd>>& estimates,
                                     const std::vector<GridSpec>& grids)
{
  std::vector<ComponentMetric> out;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    out.push_back(estimates[j].empty() ? failed_metric()
                                       : integrated_metrics(truth[j], estimates[j], grids[j].weights()));
  }
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point start)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace

// ---------------------------------------------------------------------------

SpaceDescriptor sim1_space(const Sim1Config& config)
{
  if (config.circle_nodes < 3) {
    throw std::invalid_argument("the circle grid needs at least 3 nodes");
  }
  return SpaceDescriptor::bayes_hilbert(GridSpec::circle(config.circle_nodes));
}

HilbertElement von_mises(const Sim1Config& config, std::size_t k)
{
  return from_coordinates(log_von_mises(config, k), sim1_space(config));
}

HilbertElement sim1_component(const Sim1Config& config, std::size_t j, double x)
{
  return from_coordinates(sim1_exponent(j, x) * log_von_mises(config, j), sim1_space(config));
}

Eigen::MatrixXd sample_circle_density(const HilbertElement& density, std::size_t count, std::mt19937_64& rng)
{
  const GridSpec* grid = density.space().grid();
  if (density.space().kind() != SpaceKind::bayes_hilbert || grid == nullptr || grid->dim() != 2) {
    throw SpaceMismatch("sampling needs a density on a circle grid");
  }
  const std::size_t G = grid->size();
  std::vector<double> angle(G + 1);
  for (std::size_t k = 0; k < G; ++k) {
    angle[k] = node_angle(*grid, k);
    if (k > 0) {
      while (angle[k] <= angle[k - 1]) {
        angle[k] += 2.0 * std::numbers::pi;
      }
    }
  }
  angle[G] = angle[0] + 2.0 * std::numbers::pi;
  std::vector<double> cdf(G + 1, 0.0);
  const Eigen::VectorXd& f = density.coeffs();
  for (std::size_t k = 0; k < G; ++k) {
    const double next = f(static_cast<Eigen::Index>((k + 1) % G));
    cdf[k + 1] = cdf[k] + 0.5 * (f(static_cast<Eigen::Index>(k)) + next) * (angle[k + 1] - angle[k]);
  }
  std::uniform_real_distribution<double> u(0.0, cdf[G]);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(count), 2);
  for (std::size_t i = 0; i < count; ++i) {
    const double v = u(rng);
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), v);
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), G) - 1;
    const double span = cdf[k + 1] - cdf[k];
    const double s = angle[k] + (span > 0.0 ? (v - cdf[k]) / span : 0.0) * (angle[k + 1] - angle[k]);
    out.row(static_cast<Eigen::Index>(i)) << std::cos(s), std::sin(s);
  }
  return out;
}

Sim1Dataset generate_sim1(const Sim1Config& config, std::size_t rep)
{
  if (config.n == 0) {
    throw std::invalid_argument("sample size must be positive");
  }
  const SpaceDescriptor space = sim1_space(config);
  const std::uint64_t seed = derive_seed(config.seed, rep);
  std::mt19937_64 rng(derive_seed(seed, kDataStream));
  std::normal_distribution<double> z(0.0, 1.0);
  const double sd = config.predictor_sd;
  const double rho = config.predictor_cov / (sd * sd);
  if (!(std::abs(rho) <= 1.0)) {
    throw std::invalid_argument("predictor covariance exceeds the variances");
  }
  std::array<Eigen::VectorXd, 3> logg;
  for (std::size_t k = 0; k < 3; ++k) {
    logg[k] = log_von_mises(config, k);
  }
  const auto n = static_cast<Eigen::Index>(config.n);
  Eigen::MatrixXd x(n, 2);
  std::vector<HilbertElement> y;
  Sim1Dataset out;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z1 = z(rng);
    const double z2 = z(rng);
    const double delta = z(rng);
    x(i, 0) = config.predictor_mean + sd * z1;
    x(i, 1) = config.predictor_mean + sd * (rho * z1 + std::sqrt(1.0 - rho * rho) * z2);
    const Eigen::VectorXd log_density =
      sim1_exponent(0, x(i, 0)) * logg[0] + sim1_exponent(1, x(i, 1)) * logg[1] + delta * logg[2];
    y.push_back(from_coordinates(log_density, space));
    out.delta.push_back(delta);
  }
  const std::vector<Box> domains{ Box(0.0, 1.0), Box(0.0, 1.0) };
  out.truth = std::make_shared<const RegressionData>(domains, x, y);
  if (config.n_star) {
    std::mt19937_64 sampler(derive_seed(seed, kSampleStream));
    const std::uint64_t cv_seed = derive_seed(seed, kReconstructionStream);
    const GridSpec& grid = *space.grid();
    std::vector<HilbertElement> rec;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const Eigen::MatrixXd pts = sample_circle_density(y[i], *config.n_star, sampler);
      const DensityCv cv = cv_bandwidth_sphere(pts, grid, std::nullopt, config.reconstruction_folds,
                                               derive_seed(cv_seed, i));
      out.reconstruction_bandwidths.push_back(cv.bandwidth);
      // identical grid contents, so the result shares the response space
      rec.push_back(HilbertElement(space, reconstruct_sphere(pts, grid, cv.bandwidth).coeffs()));
    }
    out.reconstructed = std::make_shared<const RegressionData>(domains, x, rec);
  }
  return out;
}

std::vector<Sim1Dataset> gen_sim1(const Sim1Config& config)
{
  std::vector<Sim1Dataset> out;
  for (std::size_t m = 0; m < config.replications; ++m) {
    out.push_back(generate_sim1(config, m));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::shared_ptr<const GridSpec> sim2_time_grid(const Sim2Config& config)
{
  if (config.time_nodes < 2) {
    throw std::invalid_argument("the time grid needs at least 2 nodes");
  }
  return std::make_shared<const GridSpec>(GridSpec::trapezoid(Box(0.0, 1.0), { config.time_nodes }));
}

SphereCurve sim2_mean_curve(const GridSpec& time_grid, std::size_t k)
{
  if (k > 1) {
    throw std::out_of_range("the functional study has two curves");
  }
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(time_grid.size()), 3);
  for (std::size_t i = 0; i < time_grid.size(); ++i) {
    const double t = time_grid.point(i)(0);
    const double tk = k == 0 ? t : t * t;
    const double theta = std::numbers::pi / 2.0 * tk;
    const double phi = std::numbers::pi * tk;
    pts.row(static_cast<Eigen::Index>(i)) << std::cos(theta) * std::sin(phi), std::sin(theta) * std::sin(phi),
      std::cos(phi);
  }
  return SphereCurve(pts);
}

TangentField sim2_basis(std::shared_ptr<const GridSpec> time_grid, std::size_t k, std::size_t r)
{
  if (r > 1) {
    throw std::out_of_range("the functional study uses two basis fields");
  }
  const SphereCurve mu = sim2_mean_curve(*time_grid, k);
  Eigen::VectorXd axis = Eigen::VectorXd::Zero(3);
  axis(static_cast<Eigen::Index>(r)) = 1.0;
  // the curve starts at the north pole, where both axes are tangent
  TangentVector e(mu.at(0), axis);
  Eigen::MatrixXd vec(static_cast<Eigen::Index>(mu.size()), 3);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (i > 0) {
      e = parallel_transport(mu.at(i - 1), mu.at(i), e);
    }
    const double t = time_grid->point(i)(0);
    const double a = r == 0 ? std::sin(2.0 * std::numbers::pi * t) : std::cos(2.0 * std::numbers::pi * t);
    vec.row(static_cast<Eigen::Index>(i)) = std::numbers::sqrt2 * a * e.vec().transpose();
  }
  return TangentField(std::move(time_grid), mu, vec);
}

std::vector<Box> sim2_domains(bool multivariate)
{
  if (multivariate) {
    return { Box(-1.0, 1.0), Box(-0.75, 0.75), Box({ { -0.75, 0.75 }, { -0.5, 0.5 } }) };
  }
  return { Box(-1.0, 1.0), Box(-0.75, 0.75), Box(-0.75, 0.75), Box(-0.5, 0.5) };
}

double sim2_component(std::size_t j, const Eigen::Ref<const Eigen::VectorXd>& x)
{
  switch (j) {
    case 0:
      return std::sin(std::numbers::pi * x(0)) / 5.0;
    case 1:
      return -x(0) * x(0) * x(0);
    case 2:
      return x(0) * std::tan(x(1));
    default:
      throw std::out_of_range("the functional study has three components");
  }
}

Sim2Dataset generate_sim2(const Sim2Config& config, std::size_t rep)
{
  if (config.n == 0) {
    throw std::invalid_argument("sample size must be positive");
  }
  Sim2Dataset out;
  out.time_grid = sim2_time_grid(config);
  std::array<SphereCurve, 2> mu{ sim2_mean_curve(*out.time_grid, 0), sim2_mean_curve(*out.time_grid, 1) };
  std::array<std::array<Eigen::MatrixXd, 2>, 2> psi;
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t r = 0; r < 2; ++r) {
      psi[k][r] = sim2_basis(out.time_grid, k, r).vectors();
    }
  }
  std::mt19937_64 rng(derive_seed(derive_seed(config.seed, rep), kDataStream));
  std::normal_distribution<double> noise(0.0, config.noise_sd);
  const auto n = static_cast<Eigen::Index>(config.n);
  out.scores.resize(n, 4);
  out.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < 2; ++k) {
      for (;;) {
        const double a = config.scales[2 * k] * truncated_normal(rng, config.score_sd, config.score_bound);
        const double b = config.scales[2 * k + 1] * truncated_normal(rng, config.score_sd, config.score_bound);
        const Eigen::MatrixXd v = a * psi[k][0] + b * psi[k][1];
        if (v.rowwise().norm().maxCoeff() >= std::numbers::pi) {
          ++out.redrawn;
          continue;
        }
        out.scores(i, static_cast<Eigen::Index>(2 * k)) = a;
        out.scores(i, static_cast<Eigen::Index>(2 * k + 1)) = b;
        out.curves[k].push_back(exp_field(TangentField(out.time_grid, mu[k], v)));
        break;
      }
    }
    const Eigen::RowVectorXd s = out.scores.row(i);
    out.y(i) = std::sin(std::numbers::pi * s(0)) / 5.0 - s(1) * s(1) * s(1) + s(2) * std::tan(s(3)) + noise(rng);
  }
  return out;
}

std::vector<Sim2Dataset> gen_sim2(const Sim2Config& config)
{
  std::vector<Sim2Dataset> out;
  for (std::size_t m = 0; m < config.replications; ++m) {
    out.push_back(generate_sim2(config, m));
  }
  return out;
}

Eigen::MatrixXd estimated_scores(const Sim2Dataset& data, std::vector<ScoreModel>* models)
{
  const auto n = static_cast<Eigen::Index>(data.curves[0].size());
  Eigen::MatrixXd out(n, 4);
  for (std::size_t k = 0; k < 2; ++k) {
    ScoreModel model = irfpc(data.time_grid, data.curves[k], 2);
    for (std::size_t r = 0; r < 2; ++r) {
      const TangentField psi = sim2_basis(data.time_grid, k, r);
      const Eigen::VectorXd target = psi.to_element().coeffs();
      const auto rr = static_cast<Eigen::Index>(r);
      const double agree = model.space.metric().dot(model.basis.row(rr).transpose().cwiseProduct(target));
      if (agree < 0.0) {
        model.basis.row(rr) *= -1.0;
        model.scores.col(rr) *= -1.0;
      }
      out.col(static_cast<Eigen::Index>(2 * k + r)) = model.scores.col(rr);
    }
    model.sign_rule = "agrees-with-true-basis";
    if (models) {
      models->push_back(std::move(model));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

RegressionData perturb_predictors(const RegressionData& data, double sigma, ErrorLaw law, std::uint64_t seed)
{
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("error scale must be nonnegative and finite");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::MatrixXd x = data.predictors();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      x(i, c) += sigma * (law == ErrorLaw::gaussian ? gauss(rng) : unif(rng));
    }
  }
  return RegressionData(data.domains(), x, data.responses());
}

ComponentMetric integrated_metrics(const Eigen::Ref<const Eigen::MatrixXd>& truth,
                                   const std::vector<Eigen::MatrixXd>& estimates,
                                   const Eigen::Ref<const Eigen::VectorXd>& quadrature)
{
  if (estimates.empty()) {
    throw std::invalid_argument("at least one estimate is required");
  }
  if (quadrature.size() != truth.rows()) {
    throw std::invalid_argument("one quadrature weight per node is required");
  }
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(truth.rows(), truth.cols());
  for (const auto& e : estimates) {
    if (e.rows() != truth.rows() || e.cols() != truth.cols()) {
      throw std::invalid_argument("estimate and truth tables differ in shape");
    }
    mean += e;
  }
  const double M = static_cast<double>(estimates.size());
  mean /= M;
  ComponentMetric out;
  out.isb = quadrature.dot((truth - mean).rowwise().squaredNorm());
  for (const auto& e : estimates) {
    out.iv += quadrature.dot((e - mean).rowwise().squaredNorm()) / M;
    out.imse += quadrature.dot((truth - e).rowwise().squaredNorm()) / M;
  }
  return out;
}

MetricReport run_sim1(const Sim1Config& config, const StudyOptions& options)
{
  const auto start = std::chrono::steady_clock::now();
  const std::vector<Box> domains{ Box(0.0, 1.0), Box(0.0, 1.0) };
  const std::vector<GridSpec> grids = default_grids(domains);
  const SpaceDescriptor space = sim1_space(config);
  const Eigen::VectorXd root = space.metric().cwiseSqrt();

  std::vector<Eigen::MatrixXd> truth(2);
  for (std::size_t j = 0; j < 2; ++j) {
    truth[j].resize(static_cast<Eigen::Index>(grids[j].size()), static_cast<Eigen::Index>(space.dimension()));
    for (std::size_t g = 0; g < grids[j].size(); ++g) {
      truth[j].row(static_cast<Eigen::Index>(g)) =
        to_coordinates(sim1_component(config, j, grids[j].point(g)(0))).cwiseProduct(root).transpose();
    }
  }
  MetricReport report;
  report.label = "n=" + std::to_string(config.n) +
                 (config.n_star ? " n*=" + std::to_string(*config.n_star) : std::string(" true"));
  std::vector<std::vector<Eigen::MatrixXd>> est(2);
  for (std::size_t m = 0; m < config.replications; ++m) {
    try {
      const Sim1Dataset ds = generate_sim1(config, m);
      const RegressionData& data = config.n_star ? *ds.reconstructed : *ds.truth;
      const ScaledFit f = fit_scaled(data, grids, options, options.bandwidths,
                                     derive_seed(derive_seed(config.seed, m), kBandwidthStream));
      for (std::size_t j = 0; j < 2; ++j) {
        est[j].push_back(f.surface.components[j]);
      }
      report.bandwidths.push_back(f.bandwidths);
      ++report.replications;
    } catch (const Error& e) {
      report.failures.push_back("replication " + std::to_string(m) + ": " + e.what());
    }
  }
  report.components = collect(truth, est, grids);
  report.runtime_seconds = seconds_since(start);
  return report;
}

std::string to_string(Sim2Variant variant)
{
  switch (variant) {
    case Sim2Variant::estimated_univariate:
      return "estimated-univariate";
    case Sim2Variant::estimated_multivariate:
      return "estimated-multivariate";
    case Sim2Variant::true_multivariate:
      return "true-multivariate";
    case Sim2Variant::true_univariate:
      return "true-univariate";
  }
  return "unknown";
}

std::vector<MetricReport> run_sim2(const Sim2Config& config,
                                   const std::vector<Sim2Variant>& variants,
                                   const StudyOptions& options)
{
  const std::vector<Box> multi = sim2_domains(true);
  const std::vector<Box> uni = sim2_domains(false);
  const std::vector<GridSpec> multi_grids = default_grids(multi);
  const std::vector<GridSpec> uni_grids = default_grids(uni);

  std::vector<Eigen::MatrixXd> truth(3);
  for (std::size_t j = 0; j < 3; ++j) {
    truth[j].resize(static_cast<Eigen::Index>(multi_grids[j].size()), 1);
    for (std::size_t g = 0; g < multi_grids[j].size(); ++g) {
      truth[j](static_cast<Eigen::Index>(g), 0) = sim2_component(j, multi_grids[j].point(g).transpose());
    }
  }
  std::optional<std::vector<double>> uni_fixed;
  if (options.bandwidths) {
    const auto& h = *options.bandwidths;
    if (h.size() != 3) {
      throw std::invalid_argument("the functional study takes three fixed bandwidths");
    }
    uni_fixed = std::vector<double>{ h[0], h[1], h[2], h[2] };
  }

  std::vector<MetricReport> reports(variants.size());
  std::vector<std::vector<std::vector<Eigen::MatrixXd>>> est(variants.size(),
                                                             std::vector<std::vector<Eigen::MatrixXd>>(3));
  std::vector<double> elapsed(variants.size(), 0.0);
  for (std::size_t v = 0; v < variants.size(); ++v) {
    reports[v].label = "n=" + std::to_string(config.n) + " " + to_string(variants[v]);
  }
  const auto space = SpaceDescriptor::euclidean(1);
  for (std::size_t m = 0; m < config.replications; ++m) {
    const std::uint64_t rep_seed = derive_seed(config.seed, m);
    std::optional<Sim2Dataset> ds;
    std::optional<Eigen::MatrixXd> scores_hat;
    std::string setup_error;
    const auto gen_start = std::chrono::steady_clock::now();
    try {
      ds = generate_sim2(config, m);
    } catch (const Error& e) {
      setup_error = e.what();
    }
    const double gen_time = seconds_since(gen_start);
    for (std::size_t v = 0; v < variants.size(); ++v) {
      const auto start = std::chrono::steady_clock::now();
      const bool estimated = variants[v] == Sim2Variant::estimated_univariate ||
                             variants[v] == Sim2Variant::estimated_multivariate;
      const bool multivariate = variants[v] == Sim2Variant::estimated_multivariate ||
                                variants[v] == Sim2Variant::true_multivariate;
      try {
        if (!ds) {
          throw InvariantViolation(setup_error);
        }
        if (estimated && !scores_hat) {
          scores_hat = estimated_scores(*ds);
        }
        std::vector<HilbertElement> y;
        for (Eigen::Index i = 0; i < ds->y.size(); ++i) {
          y.emplace_back(space, Eigen::VectorXd::Constant(1, ds->y(i)));
        }
        const RegressionData data(multivariate ? multi : uni, estimated ? *scores_hat : ds->scores, y);
        const ScaledFit f = fit_scaled(data, multivariate ? multi_grids : uni_grids, options,
                                       multivariate ? options.bandwidths : uni_fixed,
                                       derive_seed(rep_seed, kBandwidthStream + 1 + static_cast<std::uint64_t>(v)));
        est[v][0].push_back(f.surface.components[0]);
        est[v][1].push_back(f.surface.components[1]);
        if (multivariate) {
          est[v][2].push_back(f.surface.components[2]);
        } else {
          // additive approximation of the planar component on its grid
          const GridSpec& g3 = multi_grids[2];
          Eigen::MatrixXd table(static_cast<Eigen::Index>(g3.size()), 1);
          for (std::size_t g = 0; g < g3.size(); ++g) {
            table.row(static_cast<Eigen::Index>(g)) =
              (f.surface.component_at(2, g3.point(g).segment(0, 1).transpose()) +
               f.surface.component_at(3, g3.point(g).segment(1, 1).transpose()))
                .transpose();
          }
          est[v][2].push_back(table);
        }
        reports[v].bandwidths.push_back(f.bandwidths);
        ++reports[v].replications;
      } catch (const Error& e) {
        reports[v].failures.push_back("replication " + std::to_string(m) + ": " + e.what());
      }
      elapsed[v] += seconds_since(start) + gen_time / static_cast<double>(variants.size());
    }
  }
  for (std::size_t v = 0; v < variants.size(); ++v) {
    reports[v].components = collect(truth, est[v], multi_grids);
    reports[v].runtime_seconds = elapsed[v];
  }
  return reports;
}

} // namespace hsbf
