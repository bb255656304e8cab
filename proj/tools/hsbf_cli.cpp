//! hsbf: command-line front end of the smooth backfitting library.
//!
//! Exit codes
//!   0  success
//!   1  usage error (unknown flag, malformed flag value, inconsistent flags)
//!   2  input parse error (invalid JSON or a field of the wrong shape; the
//!      diagnostic names the line)
//!   3  invalid data (a value violates the invariants of its space, a space
//!      mismatch, an observation outside its support)
//!   4  estimation failure (condition (A), non-convergence, bandwidth
//!      selection or reconstruction failure, numerical breakdown)
//!   5  file error (unreadable input, unwritable output)
//!
//! Every run writes one JSON object to stderr: {"status": "ok", ...} on
//! success or {"status": "error", "exit_code": ..., "error": ..., "message":
//! ...} on failure. Warnings are separate {"status": "warning"} lines.

#include "io.hpp"

#include "hsbf/bandwidth.hpp"
#include "hsbf/densrec.hpp"
#include "hsbf/error.hpp"
#include "hsbf/random.hpp"
#include "hsbf/sbf.hpp"
#include "hsbf/scores.hpp"
#include "hsbf/simharness.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using hsbf::io::json;
namespace io = hsbf::io;

constexpr int kUsage = 1;
constexpr int kParse = 2;
constexpr int kInvalid = 3;
constexpr int kEstimation = 4;
constexpr int kFile = 5;

//! Flag values that cannot be honoured.
class UsageError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

//! Wraps a failure raised while processing input line `line`.
struct AtLine : std::exception
{
  AtLine(std::size_t l, std::exception_ptr e)
    : line(l)
    , inner(std::move(e))
  {
  }
  std::size_t line;
  std::exception_ptr inner;
  const char* what() const noexcept override { return "error at input line"; }
};

template<class F>
auto at_line(std::size_t line, F&& f) -> decltype(f())
{
  try {
    return f();
  } catch (const io::ParseError&) {
    throw;
  } catch (const std::exception&) {
    throw AtLine(line, std::current_exception());
  }
}

struct Options
{
  std::string input;
  std::string output;
  std::string space;
  std::vector<std::string> domains;
  std::vector<std::string> bandwidth{ "cbs" };
  std::string grid;
  std::uint64_t seed = 0;
  double tol = 1e-4;
  int max_iter = 50;
  std::optional<std::size_t> folds;
  std::size_t max_sweeps = 20;
  // predict
  std::string fit_path;
  // scores
  std::string method = "pca";
  std::size_t rank = 2;
  // simulate
  std::string study = "sim1";
  std::size_t n = 400;
  std::size_t replications = 100;
  std::string n_star = "inf";
  std::string variants = "estimated-univariate,estimated-multivariate,true-multivariate";
};

void emit(const json& diag)
{
  std::cerr << io::dump(diag) << '\n';
}

void warn(const std::string& message)
{
  emit(json{ { "status", "warning" }, { "message", message } });
}

std::vector<std::string> split(const std::string& s, char sep)
{
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep))
    out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& flag)
{
  std::size_t used = 0;
  try {
    const double x = std::stod(s, &used);
    if (used == s.size())
      return x;
  } catch (const std::exception&) {
  }
  throw UsageError(flag + ": '" + s + "' is not a number");
}

std::size_t parse_count(const std::string& s, const std::string& flag)
{
  const double x = parse_double(s, flag);
  if (x < 1 || x != std::floor(x))
    throw UsageError(flag + ": '" + s + "' is not a positive integer");
  return static_cast<std::size_t>(x);
}

hsbf::SbfOptions sbf_options(const Options& o)
{
  if (!(o.tol > 0.0))
    throw UsageError("--tol must be positive");
  if (o.max_iter < 1)
    throw UsageError("--max-iter must be at least 1");
  hsbf::SbfOptions s;
  s.tol = o.tol;
  s.max_iter = o.max_iter;
  return s;
}

std::string space_text(const Options& o, const std::optional<std::string>& header)
{
  std::string text = !o.space.empty() ? o.space : header.value_or("");
  if (text.empty())
    throw UsageError("no response space: pass --space or declare \"space\" in the header");
  return text;
}

hsbf::SpaceDescriptor space_from(const std::string& text)
{
  try {
    return io::parse_space(text);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--space: ") + e.what());
  }
}

std::vector<std::pair<std::size_t, hsbf::Box>> domain_overrides(const Options& o)
{
  std::vector<std::pair<std::size_t, hsbf::Box>> out;
  for (const auto& text : o.domains) {
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw UsageError("--domain expects j=lo:hi[,lo:hi], got '" + text + "'");
    const std::size_t j = parse_count(text.substr(0, eq), "--domain");
    try {
      out.emplace_back(j - 1, io::parse_box(text.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--domain: ") + e.what());
    }
  }
  return out;
}

//! "--grid N" applies N nodes per axis to every predictor; "N1,N2x M2,..."
//! gives one token per predictor with 'x' separating axes.
std::vector<hsbf::GridSpec> grids_for(const Options& o, const std::vector<hsbf::Box>& domains)
{
  if (o.grid.empty())
    return hsbf::default_grids(domains);
  std::vector<std::string> tokens = split(o.grid, ',');
  if (tokens.size() == 1)
    tokens.assign(domains.size(), tokens.front());
  if (tokens.size() != domains.size())
    throw UsageError("--grid lists " + std::to_string(tokens.size()) + " predictors, the data have " +
                     std::to_string(domains.size()));
  std::vector<hsbf::GridSpec> out;
  for (std::size_t j = 0; j < domains.size(); ++j) {
    std::vector<std::string> axes = split(tokens[j], 'x');
    if (axes.size() == 1)
      axes.assign(domains[j].dim(), axes.front());
    if (axes.size() != domains[j].dim())
      throw UsageError("--grid token '" + tokens[j] + "' does not match the dimension of predictor " + std::to_string(j + 1));
    std::vector<int> counts;
    for (const auto& a : axes) {
      const std::size_t c = parse_count(a, "--grid");
      if (c < 2)
        throw UsageError("--grid needs at least 2 nodes per axis");
      counts.push_back(static_cast<int>(c));
    }
    out.push_back(hsbf::GridSpec::trapezoid(domains[j], counts));
  }
  return out;
}

//! Fixed bandwidths, or nullopt for CBS.
std::optional<std::vector<double>> bandwidth_mode(const Options& o, std::size_t d)
{
  std::vector<std::string> t = o.bandwidth;
  if (t.size() == 1 && t.front() == "cbs")
    return std::nullopt;
  if (!t.empty() && t.front() == "fixed")
    t.erase(t.begin());
  else if (!t.empty() && t.front().rfind("fixed:", 0) == 0)
    t.front() = t.front().substr(6);
  if (t.size() != 1)
    throw UsageError("--bandwidth expects 'cbs' or 'fixed h1,...,hd'");
  std::vector<double> h;
  for (const auto& s : split(t.front(), ',')) {
    h.push_back(parse_double(s, "--bandwidth"));
    if (!(h.back() > 0.0))
      throw UsageError("--bandwidth values must be positive");
  }
  if (h.size() != d)
    throw UsageError("--bandwidth lists " + std::to_string(h.size()) + " values for " + std::to_string(d) + " predictors");
  return h;
}

std::filesystem::path output_dir(const Options& o)
{
  if (o.output.empty())
    throw UsageError("--output is required");
  std::error_code ec;
  std::filesystem::create_directories(o.output, ec);
  if (ec || !std::filesystem::is_directory(o.output))
    throw io::FileError("cannot create output directory '" + o.output + "'");
  return o.output;
}

std::string output_file(const Options& o)
{
  return o.output.empty() ? std::string("-") : o.output;
}

//! Dataset turned into regression data, with its grids.
struct Loaded
{
  io::Dataset raw;
  std::string space_text;
  std::vector<hsbf::Box> domains;
  std::shared_ptr<hsbf::RegressionData> data;
  std::vector<hsbf::GridSpec> grids;
};

Loaded load(const Options& o)
{
  Loaded out;
  out.raw = io::read_dataset(o.input);
  if (out.raw.responses.empty())
    throw hsbf::InvariantViolation("the dataset holds no observations");
  out.space_text = space_text(o, out.raw.header.space);
  const hsbf::SpaceDescriptor space = space_from(out.space_text);
  const std::size_t folds = o.folds.value_or(10);
  std::vector<hsbf::HilbertElement> y;
  y.reserve(out.raw.responses.size());
  for (std::size_t i = 0; i < out.raw.responses.size(); ++i) {
    y.push_back(at_line(out.raw.lines[i], [&] {
      return io::make_element(out.raw.responses[i], space, out.space_text, hsbf::derive_seed(o.seed, i), folds);
    }));
  }
  try {
    out.domains = io::resolve_domains(out.raw, domain_overrides(o));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  out.data = std::make_shared<hsbf::RegressionData>(out.domains, out.raw.predictors, std::move(y));
  out.grids = grids_for(o, out.domains);
  return out;
}

std::string csv_field(const std::string& s)
{
  if (s.find_first_of(",\"\n") == std::string::npos)
    return s;
  std::string q = "\"";
  for (char c : s)
    q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

std::string trace_csv(const hsbf::CbsResult& r, std::size_t d)
{
  std::string out = "sweep,predictor";
  for (std::size_t j = 0; j < d; ++j)
    out += ",h" + std::to_string(j + 1);
  out += ",score,feasible,reason\n";
  for (const auto& e : r.trace) {
    out += std::to_string(e.sweep) + "," + std::to_string(e.predictor + 1);
    for (double h : e.bandwidths)
      out += "," + io::format_number(h);
    out += "," + io::format_number(e.score) + "," + (e.feasible ? "1" : "0") + "," + csv_field(e.reason) + "\n";
  }
  return out;
}

json cbs_json(const hsbf::CbsResult& r)
{
  json infeasible = json::array();
  for (const auto& v : r.infeasible)
    infeasible.push_back(v);
  return json{ { "bandwidths", r.bandwidths },
               { "score", r.score },
               { "sweeps", r.sweeps },
               { "hit_max_sweeps", r.hit_max_sweeps },
               { "evaluations", r.trace.size() },
               { "infeasible", infeasible } };
}

hsbf::CbsResult run_cbs(const Options& o, const Loaded& in)
{
  hsbf::CbsConfig cfg = hsbf::default_cbs_config(*in.data, hsbf::GridRule::application, in.grids);
  cfg.folds = o.folds.value_or(5);
  cfg.max_sweeps = o.max_sweeps;
  cfg.seed = o.seed;
  cfg.sbf = sbf_options(o);
  if (cfg.folds < 2)
    throw UsageError("--folds must be at least 2");
  hsbf::CbsResult r = hsbf::cbs_select(*in.data, cfg);
  if (r.hit_max_sweeps)
    warn("bandwidth search stopped at the sweep cap; the best bandwidths found so far are used");
  return r;
}

json box_json(const hsbf::Box& b)
{
  json out = json::array();
  for (const auto& [lo, hi] : b.bounds())
    out.push_back(json::array({ lo, hi }));
  return out;
}

std::vector<std::string> axis_names(std::size_t dim)
{
  if (dim == 1)
    return { "x" };
  std::vector<std::string> out;
  for (std::size_t a = 0; a < dim; ++a)
    out.push_back("x" + std::to_string(a + 1));
  return out;
}

// ---------------------------------------------------------------------------

json cmd_fit(const Options& o)
{
  const Loaded in = load(o);
  const std::filesystem::path dir = output_dir(o);
  const std::size_t d = in.domains.size();
  const hsbf::SbfOptions sbf = sbf_options(o);

  std::vector<double> h;
  std::optional<hsbf::CbsResult> cbs;
  if (const auto fixed = bandwidth_mode(o, d)) {
    h = *fixed;
  } else {
    cbs = run_cbs(o, in);
    h = cbs->bandwidths;
  }
  const hsbf::SbfFit fit = hsbf::fit(*in.data, in.grids, h, sbf);
  const hsbf::AdditiveSurface& s = fit.surface();

  json grid_nodes = json::array();
  json domains = json::array();
  json components = json::array();
  json centering = json::array();
  for (std::size_t j = 0; j < d; ++j) {
    json counts = json::array();
    for (const auto& axis : in.grids[j].axes())
      counts.push_back(axis.size());
    grid_nodes.push_back(counts);
    domains.push_back(box_json(in.domains[j]));
    components.push_back(io::matrix_json(s.components[j]));
    centering.push_back(hsbf::centering_norm(fit, j));

    std::vector<std::string> header = axis_names(in.domains[j].dim());
    for (Eigen::Index c = 0; c < s.components[j].cols(); ++c)
      header.push_back("c" + std::to_string(c + 1));
    Eigen::MatrixXd table(s.components[j].rows(), in.grids[j].points().cols() + s.components[j].cols());
    table << in.grids[j].points(), s.components[j];
    io::write_text((dir / ("component_" + std::to_string(j + 1) + ".csv")).string(), io::csv(header, table));
  }
  json doc{ { "space", in.space_text },
            { "d", d },
            { "domains", domains },
            { "grid_nodes", grid_nodes },
            { "bandwidth_mode", cbs ? "cbs" : "fixed" },
            { "bandwidths", h },
            { "n", in.data->n() },
            { "n_in_domain", fit.densities().n_in_domain() },
            { "p0", fit.densities().p0 },
            { "iterations", fit.iterations() },
            { "convergence", fit.convergence() },
            { "deltas", fit.deltas() },
            { "residual", hsbf::residual_norm(fit) },
            { "centering", centering },
            { "tol", o.tol },
            { "f0", io::vector_json(s.f0) },
            { "f0_element", io::element_json(fit.f0()) },
            { "components", components } };
  if (cbs) {
    doc["cbs"] = cbs_json(*cbs);
    io::write_text((dir / "cv_trace.csv").string(), trace_csv(*cbs, d));
  }
  io::write_text((dir / "fit.json").string(), io::dump(doc) + "\n");
  return json{ { "command", "fit" }, { "bandwidths", h }, { "iterations", fit.iterations() }, { "output", dir.string() } };
}

//! Fitted surface read back from fit.json.
struct StoredFit
{
  std::string space_text;
  hsbf::AdditiveSurface surface;
};

StoredFit read_fit(const std::string& path)
{
  std::ifstream file(path);
  if (!file)
    throw io::FileError("cannot open fit file '" + path + "'");
  json doc;
  try {
    doc = json::parse(file);
  } catch (const json::parse_error& e) {
    throw io::ParseError(0, "fit file '" + path + "' is not valid JSON (byte " + std::to_string(e.byte) + ")");
  }
  StoredFit out;
  try {
    out.space_text = doc.at("space").get<std::string>();
    const std::size_t d = doc.at("d").get<std::size_t>();
    const auto& f0 = doc.at("f0");
    out.surface.f0.resize(static_cast<Eigen::Index>(f0.size()));
    for (std::size_t k = 0; k < f0.size(); ++k)
      out.surface.f0(static_cast<Eigen::Index>(k)) = f0[k].get<double>();
    for (std::size_t j = 0; j < d; ++j) {
      std::vector<std::pair<double, double>> bounds;
      for (const auto& ab : doc.at("domains").at(j))
        bounds.emplace_back(ab.at(0).get<double>(), ab.at(1).get<double>());
      out.surface.domains.emplace_back(bounds);
      out.surface.grids.push_back(
        hsbf::GridSpec::trapezoid(out.surface.domains.back(), doc.at("grid_nodes").at(j).get<std::vector<int>>()));
      const auto& table = doc.at("components").at(j);
      Eigen::MatrixXd c(static_cast<Eigen::Index>(table.size()), out.surface.f0.size());
      for (std::size_t g = 0; g < table.size(); ++g)
        for (Eigen::Index k = 0; k < c.cols(); ++k)
          c(static_cast<Eigen::Index>(g), k) = table.at(g).at(static_cast<std::size_t>(k)).get<double>();
      if (static_cast<std::size_t>(c.rows()) != out.surface.grids.back().size())
        throw io::ParseError(0, "component table " + std::to_string(j + 1) + " does not match its grid");
      out.surface.components.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw io::ParseError(0, "fit file '" + path + "' is missing fields: " + e.what());
  }
  return out;
}

json cmd_predict(const Options& o)
{
  if (o.fit_path.empty())
    throw UsageError("predict needs --fit <fit.json>");
  const StoredFit stored = read_fit(o.fit_path);
  const hsbf::SpaceDescriptor space = space_from(stored.space_text);
  const auto& surface = stored.surface;
  std::size_t width = 0;
  for (const auto& b : surface.domains)
    width += b.dim();

  std::string out;
  std::size_t predicted = 0;
  std::size_t outside = 0;
  for (const auto& rec : io::read_jsonl(o.input)) {
    if (!rec.value.is_object())
      throw io::ParseError(rec.line, "expected an object with \"x\"");
    const auto x = rec.value.find("x");
    if (x == rec.value.end()) {
      if (rec.value.contains("d"))
        continue; // dataset header
      throw io::ParseError(rec.line, "line lacks \"x\"");
    }
    if (!x->is_array() || x->size() != width)
      throw io::ParseError(rec.line, "\"x\" must hold " + std::to_string(width) + " numbers");
    Eigen::VectorXd xv(static_cast<Eigen::Index>(width));
    for (std::size_t k = 0; k < width; ++k) {
      if (!(*x)[k].is_number())
        throw io::ParseError(rec.line, "\"x\"[" + std::to_string(k) + "] is not a number");
      xv(static_cast<Eigen::Index>(k)) = (*x)[k].get<double>();
    }
    bool inside = true;
    Eigen::Index col = 0;
    for (const auto& b : surface.domains) {
      inside = inside && b.contains(xv.segment(col, static_cast<Eigen::Index>(b.dim())));
      col += static_cast<Eigen::Index>(b.dim());
    }
    json line{ { "x", io::vector_json(xv) } };
    if (!inside) {
      line["y"] = nullptr;
      line["error"] = "out_of_domain";
      ++outside;
    } else {
      const Eigen::VectorXd z = surface.evaluate(xv);
      line["y"] = at_line(rec.line, [&] { return io::element_json(hsbf::from_coordinates(z, space)); });
      line["coordinates"] = io::vector_json(z);
      ++predicted;
    }
    out += io::dump(line) + "\n";
  }
  io::write_text(output_file(o), out);
  return json{ { "command", "predict" }, { "predicted", predicted }, { "out_of_domain", outside } };
}

hsbf::ScoreMethod parse_method(const std::string& m)
{
  if (m == "pca")
    return hsbf::ScoreMethod::pca;
  if (m == "sca")
    return hsbf::ScoreMethod::sca;
  if (m == "irfpc")
    return hsbf::ScoreMethod::irfpc;
  if (m == "irsc")
    return hsbf::ScoreMethod::irsc;
  throw UsageError("--method must be pca, sca, irfpc or irsc");
}

json cmd_scores(const Options& o)
{
  const hsbf::ScoreMethod method = parse_method(o.method);
  std::vector<io::Record> records = io::read_jsonl(o.input);
  json header = json::object();
  if (!records.empty() && records.front().value.is_object() && !records.front().value.contains("x") &&
      !records.front().value.contains("curve")) {
    header = records.front().value;
    records.erase(records.begin());
  }
  if (records.empty())
    throw hsbf::InvariantViolation("no observations");
  auto header_string = [&](const char* key) -> std::optional<std::string> {
    const auto it = header.find(key);
    if (it == header.end())
      return std::nullopt;
    if (!it->is_string())
      throw io::ParseError(1, std::string("header field \"") + key + "\" must be a string");
    return it->get<std::string>();
  };
  const bool curves = method == hsbf::ScoreMethod::irfpc || method == hsbf::ScoreMethod::irsc;
  const bool paired = method == hsbf::ScoreMethod::sca || method == hsbf::ScoreMethod::irsc;

  std::optional<hsbf::SpaceDescriptor> y_space;
  std::string y_text;
  if (paired) {
    y_text = header_string("response_space").value_or("euclidean:1");
    y_space = space_from(y_text);
  }
  std::vector<hsbf::HilbertElement> y;
  auto read_y = [&](const io::Record& rec) {
    const auto it = rec.value.find("y");
    if (it == rec.value.end())
      throw io::ParseError(rec.line, "line lacks \"y\"");
    const io::ElementSpec spec = io::parse_element(*it, rec.line);
    y.push_back(at_line(rec.line, [&] { return io::make_element(spec, *y_space, y_text, hsbf::derive_seed(o.seed, rec.line), 10); }));
  };

  hsbf::ScoreModel model;
  if (!curves) {
    const std::string x_text = space_text(o, header_string("space"));
    const hsbf::SpaceDescriptor x_space = space_from(x_text);
    std::vector<hsbf::HilbertElement> x;
    for (const auto& rec : records) {
      if (!rec.value.is_object() || !rec.value.contains("x"))
        throw io::ParseError(rec.line, "line lacks \"x\"");
      const io::ElementSpec spec = io::parse_element(rec.value.at("x"), rec.line);
      x.push_back(at_line(rec.line, [&] { return io::make_element(spec, x_space, x_text, hsbf::derive_seed(o.seed, rec.line), 10); }));
      if (paired)
        read_y(rec);
    }
    model = paired ? hsbf::hsca(x, y, o.rank) : hsbf::hpca(x, o.rank);
  } else {
    std::vector<hsbf::SphereCurve> z;
    for (const auto& rec : records) {
      if (!rec.value.is_object() || !rec.value.contains("curve"))
        throw io::ParseError(rec.line, "line lacks \"curve\"");
      const auto& c = rec.value.at("curve");
      if (!c.is_array() || c.empty())
        throw io::ParseError(rec.line, "\"curve\" must be a non-empty array of points");
      Eigen::MatrixXd pts(static_cast<Eigen::Index>(c.size()), 0);
      for (std::size_t t = 0; t < c.size(); ++t) {
        if (!c[t].is_array() || c[t].empty())
          throw io::ParseError(rec.line, "\"curve\"[" + std::to_string(t) + "] is not a point");
        if (t == 0)
          pts.resize(pts.rows(), static_cast<Eigen::Index>(c[t].size()));
        if (c[t].size() != static_cast<std::size_t>(pts.cols()))
          throw io::ParseError(rec.line, "curve points differ in dimension");
        for (std::size_t k = 0; k < c[t].size(); ++k) {
          if (!c[t][k].is_number())
            throw io::ParseError(rec.line, "curve coordinate is not a number");
          pts(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = c[t][k].get<double>();
        }
      }
      if (!z.empty() && z.front().size() != static_cast<std::size_t>(pts.rows()))
        throw io::ParseError(rec.line, "curves differ in length");
      z.push_back(at_line(rec.line, [&] { return hsbf::SphereCurve(pts); }));
      if (paired)
        read_y(rec);
    }
    const auto tg = std::make_shared<const hsbf::GridSpec>(
      hsbf::GridSpec::trapezoid(hsbf::Box(0.0, 1.0), { static_cast<int>(z.front().size()) }));
    model = paired ? hsbf::irsc(tg, z, y, o.rank) : hsbf::irfpc(tg, z, o.rank);
  }

  json doc{ { "method", hsbf::to_string(model.method) },
            { "rank", model.rank() },
            { "values", io::vector_json(model.values) },
            { "basis", io::matrix_json(model.basis) },
            { "mean", io::vector_json(model.mean) },
            { "scores", io::matrix_json(model.scores) },
            { "divisor", model.divisor },
            { "degenerate", model.degenerate },
            { "sign_rule", model.sign_rule } };
  if (model.base_curve)
    doc["base_curve"] = io::matrix_json(model.base_curve->points());
  io::write_text(output_file(o), io::dump(doc) + "\n");
  if (model.degenerate)
    warn("the operator vanished; eigen-elements are an arbitrary orthonormal set");
  return json{ { "command", "scores" }, { "method", o.method }, { "n", records.size() } };
}

json cmd_reconstruct(const Options& o)
{
  const std::vector<io::Record> records = io::read_jsonl(o.input);
  std::optional<std::string> header_space;
  std::size_t first = 0;
  if (!records.empty() && records.front().value.is_object() && !records.front().value.contains("samples")) {
    if (const auto s = records.front().value.find("space"); s != records.front().value.end() && s->is_string())
      header_space = s->get<std::string>();
    first = 1;
  }
  const std::string text = space_text(o, header_space);
  const hsbf::SpaceDescriptor space = space_from(text);
  if (space.kind() != hsbf::SpaceKind::bayes_hilbert)
    throw UsageError("reconstruct needs a Bayes-Hilbert --space (bayes:, bayes-circle:, bayes-sphere:)");
  const auto box = io::space_box(text);
  const hsbf::GridSpec& grid = *space.grid();
  const std::size_t folds = o.folds.value_or(10);

  std::string out;
  for (std::size_t r = first; r < records.size(); ++r) {
    const io::Record& rec = records[r];
    json v = rec.value;
    if (v.is_object() && !v.contains("kind"))
      v["kind"] = "samples";
    const io::ElementSpec spec = io::parse_element(v, rec.line);
    if (!spec.samples)
      throw io::ParseError(rec.line, "line lacks \"samples\"");
    const hsbf::SampleSet& set = *spec.samples;
    json line = at_line(rec.line, [&] {
      const std::uint64_t seed = hsbf::derive_seed(o.seed, r - first);
      const std::size_t need = box ? box->dim() : grid.dim();
      if (static_cast<std::size_t>(set.points.cols()) != need)
        throw hsbf::InvariantViolation("samples need " + std::to_string(need) + " columns");
      std::optional<hsbf::DensityCv> cv;
      if (!set.bandwidth)
        cv = box ? hsbf::cv_bandwidth_box(set.points, *box, grid, std::nullopt, folds, seed)
                 : hsbf::cv_bandwidth_sphere(set.points, grid, std::nullopt, folds, seed);
      const double h = set.bandwidth ? *set.bandwidth : cv->bandwidth;
      const hsbf::HilbertElement e =
        box ? hsbf::reconstruct_box(set.points, *box, grid, h) : hsbf::reconstruct_sphere(set.points, grid, h);
      json j = io::element_json(e);
      j["bandwidth"] = h;
      j["selected"] = cv.has_value();
      if (cv)
        j["lower"] = cv->lower;
      return j;
    });
    out += io::dump(line) + "\n";
  }
  io::write_text(output_file(o), out);
  return json{ { "command", "reconstruct" }, { "densities", records.size() - first } };
}

json cmd_bandwidth(const Options& o)
{
  const Loaded in = load(o);
  const std::filesystem::path dir = output_dir(o);
  const hsbf::CbsResult r = run_cbs(o, in);
  json doc = cbs_json(r);
  doc["folds"] = o.folds.value_or(5);
  doc["seed"] = o.seed;
  io::write_text((dir / "bandwidth.json").string(), io::dump(doc) + "\n");
  io::write_text((dir / "cv_trace.csv").string(), trace_csv(r, in.domains.size()));
  return json{ { "command", "bandwidth" }, { "bandwidths", r.bandwidths }, { "sweeps", r.sweeps } };
}

json report_json(const hsbf::MetricReport& r)
{
  json comps = json::array();
  for (const auto& c : r.components)
    comps.push_back(json{ { "imse", c.imse }, { "isb", c.isb }, { "iv", c.iv } });
  return json{ { "label", r.label },
               { "replications", r.replications },
               { "failures", r.failures },
               { "components", comps },
               { "bandwidths", r.bandwidths } };
}

//! Rows IMSE, ISB, IV; columns j<k>_<setting> grouped by component.
std::string table_csv(std::size_t n, const std::vector<std::string>& settings, const std::vector<hsbf::MetricReport>& reports, double scale)
{
  const std::size_t d = reports.front().components.size();
  std::string out = "n,criterion";
  for (std::size_t j = 0; j < d; ++j)
    for (const auto& s : settings)
      out += ",j" + std::to_string(j + 1) + "_" + s;
  out += "\n";
  const char* names[] = { "IMSE", "ISB", "IV" };
  for (int c = 0; c < 3; ++c) {
    out += std::to_string(n) + "," + names[c];
    for (std::size_t j = 0; j < d; ++j) {
      for (const auto& r : reports) {
        const auto& m = r.components[j];
        const double v = c == 0 ? m.imse : c == 1 ? m.isb : m.iv;
        out += "," + io::format_number(v * scale);
      }
    }
    out += "\n";
  }
  return out;
}

json cmd_simulate(const Options& o)
{
  if (o.replications < 1 || o.n < 2)
    throw UsageError("--replications must be positive and --n at least 2");
  const std::filesystem::path dir = output_dir(o);
  hsbf::StudyOptions study;
  study.sbf = sbf_options(o);
  study.folds = o.folds.value_or(5);
  study.max_sweeps = o.max_sweeps;

  std::vector<std::string> settings;
  std::vector<hsbf::MetricReport> reports;
  json config{ { "study", o.study },
               { "n", o.n },
               { "replications", o.replications },
               { "seed", o.seed },
               { "folds", study.folds },
               { "max_sweeps", study.max_sweeps },
               { "tol", o.tol },
               { "max_iter", o.max_iter } };
  double scale = 1.0;
  if (o.study == "sim1") {
    hsbf::Sim1Config cfg;
    cfg.n = o.n;
    cfg.replications = o.replications;
    cfg.seed = o.seed;
    study.bandwidths = bandwidth_mode(o, 2);
    json n_star = json::array();
    for (const auto& s : split(o.n_star, ',')) {
      if (s == "inf" || s == "true") {
        cfg.n_star.reset();
        settings.push_back("true");
        n_star.push_back(nullptr);
      } else {
        cfg.n_star = parse_count(s, "--n-star");
        settings.push_back("nstar" + s);
        n_star.push_back(*cfg.n_star);
      }
      reports.push_back(hsbf::run_sim1(cfg, study));
    }
    config["n_star"] = n_star;
    config["circle_nodes"] = cfg.circle_nodes;
    config["concentration"] = cfg.concentration;
    config["reconstruction_folds"] = cfg.reconstruction_folds;
  } else if (o.study == "sim2") {
    hsbf::Sim2Config cfg;
    cfg.n = o.n;
    cfg.replications = o.replications;
    cfg.seed = o.seed;
    std::vector<hsbf::Sim2Variant> variants;
    const hsbf::Sim2Variant all[] = { hsbf::Sim2Variant::estimated_univariate, hsbf::Sim2Variant::estimated_multivariate,
                                      hsbf::Sim2Variant::true_multivariate, hsbf::Sim2Variant::true_univariate };
    for (const auto& s : split(o.variants, ',')) {
      bool found = false;
      for (auto v : all) {
        if (hsbf::to_string(v) == s) {
          variants.push_back(v);
          found = true;
        }
      }
      if (!found)
        throw UsageError("--variants: unknown variant '" + s + "'");
      settings.push_back(s);
    }
    if (variants.empty())
      throw UsageError("--variants is empty");
    study.bandwidths = bandwidth_mode(o, 3);
    reports = hsbf::run_sim2(cfg, variants, study);
    config["variants"] = settings;
    config["time_nodes"] = cfg.time_nodes;
    config["noise_sd"] = cfg.noise_sd;
    scale = 100.0;
  } else {
    throw UsageError("--study must be sim1 or sim2");
  }
  config["bandwidth_mode"] = study.bandwidths ? json(*study.bandwidths) : json("cbs");
  config["scale"] = scale;
  json seeds = json::array();
  for (std::size_t m = 0; m < o.replications; ++m)
    seeds.push_back(hsbf::derive_seed(o.seed, m));
  config["replication_seeds"] = seeds;
  json rep = json::array();
  json runtimes = json::array();
  std::size_t failures = 0;
  for (const auto& r : reports) {
    rep.push_back(report_json(r));
    runtimes.push_back(r.runtime_seconds);
    failures += r.failures.size();
  }
  config["reports"] = rep;
  io::write_text((dir / "table.csv").string(), table_csv(o.n, settings, reports, scale));
  io::write_text((dir / "table.json").string(), io::dump(config) + "\n");
  for (const auto& r : reports)
    if (r.replications == 0)
      throw hsbf::ConvergenceError("no replication of '" + r.label + "' produced a fit", {});
  return json{ { "command", "simulate" }, { "runtime_seconds", runtimes }, { "failed_replications", failures } };
}

// ---------------------------------------------------------------------------

int fail(int code, const std::string& error, const std::string& message, json extra = json::object())
{
  extra["status"] = "error";
  extra["exit_code"] = code;
  extra["error"] = error;
  extra["message"] = message;
  emit(extra);
  return code;
}

int classify(std::exception_ptr ep, json extra)
{
  try {
    std::rethrow_exception(ep);
  } catch (const AtLine& a) {
    extra["line"] = a.line;
    return classify(a.inner, std::move(extra));
  } catch (const UsageError& e) {
    return fail(kUsage, "usage", e.what(), extra);
  } catch (const io::ParseError& e) {
    if (e.line() > 0)
      extra["line"] = e.line();
    return fail(kParse, "parse_error", e.what(), extra);
  } catch (const io::FileError& e) {
    return fail(kFile, "file_error", e.what(), extra);
  } catch (const hsbf::ConditionAViolation& e) {
    extra["predictor"] = e.predictor() + 1;
    extra["node"] = e.node();
    return fail(kEstimation, "condition_a_violation", e.what(), extra);
  } catch (const hsbf::ConvergenceError& e) {
    extra["history"] = e.history();
    return fail(kEstimation, "convergence_error", e.what(), extra);
  } catch (const hsbf::BandwidthTooSmall& e) {
    extra["node"] = e.node();
    return fail(kEstimation, "bandwidth_too_small", e.what(), extra);
  } catch (const hsbf::BandwidthSelectionError& e) {
    extra["predictor"] = e.predictor() + 1;
    return fail(kEstimation, "bandwidth_selection_error", e.what(), extra);
  } catch (const hsbf::NumericError& e) {
    return fail(kEstimation, "numeric_error", e.what(), extra);
  } catch (const hsbf::CutLocusError& e) {
    return fail(kEstimation, "cut_locus", e.what(), extra);
  } catch (const hsbf::InvariantViolation& e) {
    return fail(kInvalid, "invariant_violation", e.what(), extra);
  } catch (const hsbf::SpaceMismatch& e) {
    return fail(kInvalid, "space_mismatch", e.what(), extra);
  } catch (const hsbf::OutOfDomain& e) {
    return fail(kInvalid, "out_of_domain", e.what(), extra);
  } catch (const std::invalid_argument& e) {
    return fail(kInvalid, "invalid_argument", e.what(), extra);
  } catch (const std::exception& e) {
    return fail(kEstimation, "failure", e.what(), extra);
  }
}

void add_common(CLI::App* cmd, Options& o, bool dataset)
{
  cmd->add_option("--input", o.input, "Input JSON Lines file ('-' for stdin)")->required();
  cmd->add_option("--output", o.output, "Output directory or file");
  cmd->add_option("--space", o.space, "Response space, e.g. simplex:3, bayes-circle:100, euclidean:1");
  cmd->add_option("--seed", o.seed, "Seed of every random choice");
  cmd->add_option("--folds", o.folds, "Cross-validation folds");
  if (dataset) {
    cmd->add_option("--domain", o.domains, "Estimation domain j=lo:hi[,lo:hi] (repeatable, j from 1)");
    cmd->add_option("--bandwidth", o.bandwidth, "'cbs' or 'fixed h1,...,hd'")->expected(1, 2);
    cmd->add_option("--grid", o.grid, "Grid nodes per axis: N, or one token per predictor (N or NxM)");
    cmd->add_option("--tol", o.tol, "Backfitting tolerance");
    cmd->add_option("--max-iter", o.max_iter, "Backfitting iteration cap");
    cmd->add_option("--max-sweeps", o.max_sweeps, "Sweep cap of the bandwidth search");
  }
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{ "Smooth backfitting for Hilbert-space responses" };
  app.require_subcommand(1);
  Options o;

  auto* fit = app.add_subcommand("fit", "Fit the additive model; writes fit.json and component CSVs");
  add_common(fit, o, true);
  auto* predict = app.add_subcommand("predict", "Predict responses at new predictor values");
  add_common(predict, o, false);
  predict->add_option("--fit", o.fit_path, "fit.json written by 'fit'")->required();
  auto* scores = app.add_subcommand("scores", "PC, SC, iRFPC or iRSC scores");
  add_common(scores, o, false);
  scores->add_option("--method", o.method, "pca, sca, irfpc or irsc");
  scores->add_option("--rank", o.rank, "Number of components");
  auto* reconstruct = app.add_subcommand("reconstruct", "Kernel density reconstruction from samples");
  add_common(reconstruct, o, false);
  auto* bandwidth = app.add_subcommand("bandwidth", "Coordinate-wise bandwidth selection with its CV trace");
  add_common(bandwidth, o, true);
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo studies with IMSE/ISB/IV tables");
  simulate->add_option("--output", o.output, "Output directory")->required();
  simulate->add_option("--study", o.study, "sim1 (density responses) or sim2 (sphere curves)");
  simulate->add_option("--n", o.n, "Sample size");
  simulate->add_option("--replications", o.replications, "Monte-Carlo replications");
  simulate->add_option("--n-star", o.n_star, "sim1: comma-separated draws per density, 'inf' for the true densities");
  simulate->add_option("--variants", o.variants, "sim2: comma-separated model variants");
  simulate->add_option("--bandwidth", o.bandwidth, "'cbs' or 'fixed h1,...,hd'")->expected(1, 2);
  simulate->add_option("--seed", o.seed, "Base seed");
  simulate->add_option("--folds", o.folds, "Folds of the bandwidth search");
  simulate->add_option("--tol", o.tol, "Backfitting tolerance");
  simulate->add_option("--max-iter", o.max_iter, "Backfitting iteration cap");
  simulate->add_option("--max-sweeps", o.max_sweeps, "Sweep cap of the bandwidth search");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kUsage, "usage", e.what());
  }

  try {
    json summary;
    if (*fit)
      summary = cmd_fit(o);
    else if (*predict)
      summary = cmd_predict(o);
    else if (*scores)
      summary = cmd_scores(o);
    else if (*reconstruct)
      summary = cmd_reconstruct(o);
    else if (*bandwidth)
      summary = cmd_bandwidth(o);
    else
      summary = cmd_simulate(o);
    summary["status"] = "ok";
    emit(summary);
    return 0;
  } catch (...) {
    return classify(std::current_exception(), json::object());
  }
}
