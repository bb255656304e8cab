#include "hsbf/bandwidth.hpp"
#include "hsbf/densrec.hpp"
#include "hsbf/error.hpp"
#include "hsbf/hilbert.hpp"
#include "hsbf/kernelgrid.hpp"
#include "hsbf/manifold.hpp"
#include "hsbf/sbf.hpp"
#include "hsbf/scores.hpp"
#include "hsbf/simharness.hpp"

#include <pybind11/eigen.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>
#include <vector>

namespace py = pybind11;
using namespace hsbf;

namespace {

SbfOptions make_options(double tol, int max_iter, const std::string& init)
{
  SbfOptions o;
  o.tol = tol;
  o.max_iter = max_iter;
  if (init == "zero")
    o.init = SbfInit::zero;
  else if (init != "smoother")
    throw std::invalid_argument("init must be 'smoother' or 'zero'");
  return o;
}

py::dict report_dict(const MetricReport& r)
{
  py::list comps;
  for (const auto& c : r.components) {
    py::dict d;
    d["imse"] = c.imse;
    d["isb"] = c.isb;
    d["iv"] = c.iv;
    comps.append(d);
  }
  py::dict out;
  out["label"] = r.label;
  out["components"] = comps;
  out["replications"] = r.replications;
  out["failures"] = r.failures;
  out["runtime_seconds"] = r.runtime_seconds;
  out["bandwidths"] = r.bandwidths;
  return out;
}

std::vector<SpherePoint> to_points(const Eigen::MatrixXd& rows)
{
  std::vector<SpherePoint> out;
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    out.emplace_back(Eigen::VectorXd(rows.row(i).transpose()));
  return out;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
  m.doc() = "Smooth backfitting additive regression with Hilbert-space responses";

  // Errors: subclasses are registered after the base so they are matched first.
  static py::exception<Error> error(m, "HsbfError", PyExc_RuntimeError);
  py::register_exception<SpaceMismatch>(m, "SpaceMismatch", error.ptr());
  py::register_exception<InvariantViolation>(m, "InvariantViolation", error.ptr());
  py::register_exception<NumericError>(m, "NumericError", error.ptr());
  py::register_exception<OutOfDomain>(m, "OutOfDomain", error.ptr());
  py::register_exception<ConditionAViolation>(m, "ConditionAViolation", error.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", error.ptr());
  py::register_exception<BandwidthTooSmall>(m, "BandwidthTooSmall", error.ptr());
  py::register_exception<BandwidthSelectionError>(m, "BandwidthSelectionError", error.ptr());
  py::register_exception<CutLocusError>(m, "CutLocusError", error.ptr());

  // Grids and kernels --------------------------------------------------------
  py::class_<Box>(m, "Box")
    .def(py::init<double, double>(), py::arg("lower"), py::arg("upper"))
    .def(py::init<std::vector<std::pair<double, double>>>(), py::arg("bounds"))
    .def_property_readonly("dim", &Box::dim)
    .def_property_readonly("bounds", &Box::bounds)
    .def("volume", &Box::volume)
    .def("contains", &Box::contains, py::arg("x"))
    .def("__repr__", [](const Box& b) { return "Box(" + py::repr(py::cast(b.bounds())).cast<std::string>() + ")"; });

  py::class_<GridSpec>(m, "GridSpec")
    .def(py::init<Eigen::MatrixXd, Eigen::VectorXd>(), py::arg("points"), py::arg("weights"))
    .def_static("trapezoid", py::overload_cast<const Box&, const std::vector<int>&>(&GridSpec::trapezoid), py::arg("box"),
                py::arg("counts"))
    .def_static("default", py::overload_cast<const Box&>(&GridSpec::trapezoid), py::arg("box"))
    .def_static("circle", &GridSpec::circle, py::arg("n"))
    .def_static("sphere", &GridSpec::sphere, py::arg("n_lat"), py::arg("n_lon"))
    .def_property_readonly("points", &GridSpec::points)
    .def_property_readonly("weights", &GridSpec::weights)
    .def("__len__", &GridSpec::size);

  m.def("biweight", &biweight, py::arg("t"));
  m.def("normalized_kernel", &normalized_kernel, py::arg("domain"), py::arg("grid"), py::arg("u"), py::arg("h"),
        "Boundary-normalized biweight kernel at every grid node");

  // Hilbert spaces -----------------------------------------------------------
  py::enum_<SpaceKind>(m, "SpaceKind")
    .value("euclidean", SpaceKind::euclidean)
    .value("simplex", SpaceKind::simplex)
    .value("bayes_hilbert", SpaceKind::bayes_hilbert)
    .value("l2_grid", SpaceKind::l2_grid);

  py::class_<SpaceDescriptor>(m, "Space")
    .def_static("euclidean", &SpaceDescriptor::euclidean, py::arg("dim"))
    .def_static("simplex", &SpaceDescriptor::simplex, py::arg("parts"))
    .def_static("bayes_hilbert", &SpaceDescriptor::bayes_hilbert, py::arg("grid"))
    .def_static("l2_grid", &SpaceDescriptor::l2_grid, py::arg("grid"), py::arg("components") = 1)
    .def_property_readonly("kind", &SpaceDescriptor::kind)
    .def_property_readonly("dimension", &SpaceDescriptor::dimension)
    .def_property_readonly("metric", &SpaceDescriptor::metric)
    .def(py::self == py::self);

  py::class_<HilbertElement>(m, "Element")
    .def(py::init<SpaceDescriptor, Eigen::VectorXd>(), py::arg("space"), py::arg("coeffs"))
    .def_property_readonly("space", &HilbertElement::space)
    .def_property_readonly("coeffs", &HilbertElement::coeffs);

  m.def("zero", &zero, py::arg("space"));
  m.def("combine", &combine, py::arg("a"), py::arg("v"), py::arg("b"), py::arg("w"), "a (.) v (+) b (.) w");
  m.def("subtract", &subtract, py::arg("v"), py::arg("w"));
  m.def("inner", &inner, py::arg("v"), py::arg("w"));
  m.def("norm", &norm, py::arg("v"));
  m.def("distance", &distance, py::arg("v"), py::arg("w"));
  m.def("clr", &clr, py::arg("v"));
  m.def("clr_inv", &clr_inv, py::arg("z"), py::arg("space"));
  m.def("to_coordinates", &to_coordinates, py::arg("v"));
  m.def("from_coordinates", &from_coordinates, py::arg("z"), py::arg("space"));
  m.def("mean", [](const std::vector<HilbertElement>& v) { return mean(v); }, py::arg("elements"));

  // Sphere geometry ------------------------------------------------------------
  m.def("sphere_exp", [](const Eigen::VectorXd& p, const Eigen::VectorXd& v) {
    const SpherePoint base(p);
    return sphere_exp(base, TangentVector(base, v)).coords();
  }, py::arg("p"), py::arg("v"));
  m.def("sphere_log", [](const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    return sphere_log(SpherePoint(p), SpherePoint(q)).vec();
  }, py::arg("p"), py::arg("q"));
  m.def("parallel_transport", [](const Eigen::VectorXd& p, const Eigen::VectorXd& q, const Eigen::VectorXd& v) {
    const SpherePoint base(p);
    return parallel_transport(base, SpherePoint(q), TangentVector(base, v)).vec();
  }, py::arg("p"), py::arg("q"), py::arg("v"));
  m.def("geodesic_distance", [](const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    return geodesic_distance(SpherePoint(p), SpherePoint(q));
  }, py::arg("p"), py::arg("q"));
  m.def("frechet_mean", [](const Eigen::MatrixXd& rows) { return frechet_mean(to_points(rows)).coords(); },
        py::arg("points"), "Intrinsic mean of the unit vectors in the rows");
  m.def("sphere_volume_density", &sphere_volume_density, py::arg("q"), py::arg("r"));

  // Regression -----------------------------------------------------------------
  py::class_<RegressionData, std::shared_ptr<RegressionData>>(m, "RegressionData")
    .def(py::init<std::vector<Box>, Eigen::MatrixXd, std::vector<HilbertElement>>(), py::arg("domains"),
         py::arg("predictors"), py::arg("responses"))
    .def_property_readonly("n", &RegressionData::n)
    .def_property_readonly("d", &RegressionData::d)
    .def_property_readonly("domains", &RegressionData::domains)
    .def_property_readonly("predictors", &RegressionData::predictors)
    .def_property_readonly("space", &RegressionData::space)
    .def_property_readonly("response_coordinates", &RegressionData::response_coordinates)
    .def_property_readonly("in_domain", &RegressionData::in_domain);

  m.def("default_grids", &default_grids, py::arg("domains"));

  py::class_<SbfFit>(m, "SbfFit")
    .def_property_readonly("space", &SbfFit::space)
    .def_property_readonly("d", &SbfFit::d)
    .def_property_readonly("bandwidths", &SbfFit::bandwidths)
    .def_property_readonly("iterations", &SbfFit::iterations)
    .def_property_readonly("convergence", &SbfFit::convergence)
    .def_property_readonly("deltas", &SbfFit::deltas)
    .def_property_readonly("f0", &SbfFit::f0)
    .def("grid", &SbfFit::grid, py::arg("j"), py::return_value_policy::copy)
    .def("weights", &SbfFit::weights, py::arg("j"), py::return_value_policy::copy)
    .def("component_coordinates", [](const SbfFit& f, std::size_t j) { return f.surface().components.at(j); },
         py::arg("j"), "Grid nodes x coordinates table of component j")
    .def("component", [](const SbfFit& f, std::size_t j, const Eigen::VectorXd& x) { return evaluate_component(f, j, x); },
         py::arg("j"), py::arg("x"))
    .def("predict", [](const SbfFit& f, const Eigen::VectorXd& x) { return predict(f, x); }, py::arg("x"))
    .def("residual_norm", &residual_norm)
    .def("centering_norm", &centering_norm, py::arg("j"));

  m.def("fit",
        [](const RegressionData& data, std::optional<std::vector<GridSpec>> grids, const std::vector<double>& h, double tol,
           int max_iter, const std::string& init) {
          return fit(data, grids ? *grids : default_grids(data.domains()), h, make_options(tol, max_iter, init));
        },
        py::arg("data"), py::arg("grids") = py::none(), py::arg("bandwidths"), py::arg("tol") = 1e-4,
        py::arg("max_iter") = 50, py::arg("init") = "smoother", "Smooth backfitting fit with fixed bandwidths");

  m.def("cbs_select",
        [](const RegressionData& data, std::optional<std::vector<GridSpec>> grids,
           std::optional<std::vector<std::vector<double>>> candidates, const std::string& rule, std::size_t folds,
           std::size_t max_sweeps, std::uint64_t seed, double tol, int max_iter) {
          CbsConfig cfg = default_cbs_config(data, rule == "simulation" ? GridRule::simulation : GridRule::application,
                                             grids ? *grids : std::vector<GridSpec>{});
          if (rule != "simulation" && rule != "application")
            throw std::invalid_argument("rule must be 'simulation' or 'application'");
          if (candidates)
            cfg.candidates = *candidates;
          cfg.folds = folds;
          cfg.max_sweeps = max_sweeps;
          cfg.seed = seed;
          cfg.sbf = make_options(tol, max_iter, "smoother");
          const CbsResult r = cbs_select(data, cfg);
          py::list trace;
          for (const auto& e : r.trace) {
            py::dict t;
            t["sweep"] = e.sweep;
            t["predictor"] = e.predictor;
            t["bandwidths"] = e.bandwidths;
            t["score"] = e.score;
            t["feasible"] = e.feasible;
            t["reason"] = e.reason;
            trace.append(t);
          }
          py::dict out;
          out["bandwidths"] = r.bandwidths;
          out["score"] = r.score;
          out["sweeps"] = r.sweeps;
          out["hit_max_sweeps"] = r.hit_max_sweeps;
          out["infeasible"] = r.infeasible;
          out["trace"] = trace;
          out["candidates"] = cfg.candidates;
          return out;
        },
        py::arg("data"), py::arg("grids") = py::none(), py::arg("candidates") = py::none(),
        py::arg("rule") = "application", py::arg("folds") = 5, py::arg("max_sweeps") = 20, py::arg("seed") = 0,
        py::arg("tol") = 1e-4, py::arg("max_iter") = 50, "Coordinate-wise cross-validated bandwidth selection");

  // Scores ---------------------------------------------------------------------
  py::class_<ScoreModel>(m, "ScoreModel")
    .def_property_readonly("method", [](const ScoreModel& s) { return to_string(s.method); })
    .def_readonly("values", &ScoreModel::values)
    .def_readonly("basis", &ScoreModel::basis)
    .def_readonly("scores", &ScoreModel::scores)
    .def_readonly("mean", &ScoreModel::mean)
    .def_readonly("divisor", &ScoreModel::divisor)
    .def_readonly("degenerate", &ScoreModel::degenerate)
    .def_property_readonly("base_curve", [](const ScoreModel& s) -> std::optional<Eigen::MatrixXd> {
      if (!s.base_curve)
        return std::nullopt;
      return s.base_curve->points();
    })
    .def("project", &ScoreModel::project, py::arg("x"));

  m.def("hpca", [](const std::vector<HilbertElement>& x, std::size_t r) { return hpca(x, r); }, py::arg("x"),
        py::arg("rank"));
  m.def("hsca", [](const std::vector<HilbertElement>& x, const std::vector<HilbertElement>& y, std::size_t r) {
    return hsca(x, y, r);
  }, py::arg("x"), py::arg("y"), py::arg("rank"));
  auto curves_of = [](const std::vector<Eigen::MatrixXd>& z) {
    std::vector<SphereCurve> out;
    for (const auto& c : z)
      out.emplace_back(c);
    return out;
  };
  auto time_grid_of = [](const std::vector<Eigen::MatrixXd>& z) {
    if (z.empty())
      throw std::invalid_argument("no curves");
    return std::make_shared<const GridSpec>(GridSpec::trapezoid(Box(0.0, 1.0), { static_cast<int>(z.front().rows()) }));
  };
  m.def("irfpc", [=](const std::vector<Eigen::MatrixXd>& z, std::size_t r) { return irfpc(time_grid_of(z), curves_of(z), r); },
        py::arg("curves"), py::arg("rank"), "Curves are (time nodes x 3) arrays on an equispaced grid of [0, 1]");
  m.def("irsc", [=](const std::vector<Eigen::MatrixXd>& z, const std::vector<HilbertElement>& y, std::size_t r) {
    return irsc(time_grid_of(z), curves_of(z), y, r);
  }, py::arg("curves"), py::arg("y"), py::arg("rank"));
  m.def("canonical_correlations", &canonical_correlations, py::arg("a"), py::arg("b"));

  // Density reconstruction ------------------------------------------------------
  m.def("reconstruct_box", py::overload_cast<const Eigen::Ref<const Eigen::MatrixXd>&, const Box&, const GridSpec&, double>(&reconstruct_box),
        py::arg("samples"), py::arg("domain"), py::arg("grid"), py::arg("h"));
  m.def("reconstruct_sphere", py::overload_cast<const Eigen::Ref<const Eigen::MatrixXd>&, const GridSpec&, double>(&reconstruct_sphere),
        py::arg("samples"), py::arg("grid"), py::arg("h"));
  auto cv_dict = [](const DensityCv& cv) {
    py::dict out;
    out["bandwidth"] = cv.bandwidth;
    out["lower"] = cv.lower;
    out["candidates"] = cv.candidates;
    out["scores"] = cv.scores;
    return out;
  };
  m.def("cv_bandwidth_box",
        [=](const Eigen::MatrixXd& s, const Box& domain, const GridSpec& grid, std::optional<std::vector<double>> candidates,
            std::size_t folds, std::uint64_t seed) { return cv_dict(cv_bandwidth_box(s, domain, grid, candidates, folds, seed)); },
        py::arg("samples"), py::arg("domain"), py::arg("grid"), py::arg("candidates") = py::none(), py::arg("folds") = 10,
        py::arg("seed") = 0);
  m.def("cv_bandwidth_sphere",
        [=](const Eigen::MatrixXd& s, const GridSpec& grid, std::optional<std::vector<double>> candidates, std::size_t folds,
            std::uint64_t seed) { return cv_dict(cv_bandwidth_sphere(s, grid, candidates, folds, seed)); },
        py::arg("samples"), py::arg("grid"), py::arg("candidates") = py::none(), py::arg("folds") = 10, py::arg("seed") = 0);

  // Simulation studies -----------------------------------------------------------
  m.def("run_sim1",
        [](std::size_t n, std::optional<std::size_t> n_star, std::size_t replications, std::uint64_t seed,
           std::optional<std::vector<double>> bandwidths, std::size_t folds) {
          Sim1Config cfg;
          cfg.n = n;
          cfg.n_star = n_star;
          cfg.replications = replications;
          cfg.seed = seed;
          StudyOptions opts;
          opts.bandwidths = bandwidths;
          opts.folds = folds;
          std::optional<MetricReport> r;
          {
            py::gil_scoped_release release;
            r = run_sim1(cfg, opts);
          }
          return report_dict(*r);
        },
        py::arg("n") = 400, py::arg("n_star") = py::none(), py::arg("replications") = 100, py::arg("seed") = 0,
        py::arg("bandwidths") = py::none(), py::arg("folds") = 5,
        "Density-on-the-circle study: IMSE, ISB and IV of both components");
  m.def("run_sim2",
        [](std::size_t n, const std::vector<std::string>& variants, std::size_t replications, std::uint64_t seed,
           std::optional<std::vector<double>> bandwidths, std::size_t folds) {
          Sim2Config cfg;
          cfg.n = n;
          cfg.replications = replications;
          cfg.seed = seed;
          std::vector<Sim2Variant> vs;
          for (const auto& s : variants) {
            bool found = false;
            for (auto v : { Sim2Variant::estimated_univariate, Sim2Variant::estimated_multivariate,
                            Sim2Variant::true_multivariate, Sim2Variant::true_univariate }) {
              if (to_string(v) == s) {
                vs.push_back(v);
                found = true;
              }
            }
            if (!found)
              throw std::invalid_argument("unknown variant '" + s + "'");
          }
          StudyOptions opts;
          opts.bandwidths = bandwidths;
          opts.folds = folds;
          std::vector<MetricReport> reports;
          {
            py::gil_scoped_release release;
            reports = run_sim2(cfg, vs, opts);
          }
          py::list out;
          for (const auto& r : reports)
            out.append(report_dict(r));
          return out;
        },
        py::arg("n") = 400,
        py::arg("variants") = std::vector<std::string>{ "estimated-univariate", "estimated-multivariate", "true-multivariate" },
        py::arg("replications") = 100, py::arg("seed") = 0, py::arg("bandwidths") = py::none(), py::arg("folds") = 5,
        "Sphere-curve study: one report per model variant");
}
