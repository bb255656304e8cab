#include "io.hpp"

#include "hsbf/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

namespace hsbf::io {

std::string format_number(double x)
{
  if (std::isnan(x))
    return "nan";
  if (std::isinf(x))
    return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_json(std::ostream& os, const json& value)
{
  switch (value.type()) {
    case json::value_t::object: {
      os << '{';
      bool first = true;
      for (auto it = value.begin(); it != value.end(); ++it) {
        if (!first)
          os << ',';
        first = false;
        os << json(it.key()).dump() << ':';
        write_json(os, it.value());
      }
      os << '}';
      break;
    }
    case json::value_t::array: {
      os << '[';
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (i > 0)
          os << ',';
        write_json(os, value[i]);
      }
      os << ']';
      break;
    }
    case json::value_t::number_float: {
      const double x = value.get<double>();
      os << (std::isfinite(x) ? format_number(x) : std::string("null"));
      break;
    }
    default:
      os << value.dump();
  }
}

std::string dump(const json& value)
{
  std::ostringstream os;
  write_json(os, value);
  return os.str();
}

json vector_json(const Eigen::Ref<const Eigen::VectorXd>& v)
{
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out.push_back(v(i));
  return out;
}

json matrix_json(const Eigen::Ref<const Eigen::MatrixXd>& m)
{
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    out.push_back(vector_json(m.row(r).transpose()));
  return out;
}

std::vector<Record> read_jsonl(const std::string& path)
{
  std::ifstream file;
  std::istream* in = &std::cin;
  if (path != "-") {
    file.open(path);
    if (!file)
      throw FileError("cannot open input file '" + path + "'");
    in = &file;
  }
  std::vector<Record> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(*in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    try {
      out.push_back({ line, json::parse(text) });
    } catch (const json::parse_error& e) {
      // Drop the library prefix, which reports positions within the line only.
      std::string what = e.what();
      const auto pos = what.find(": ");
      throw ParseError(line, "invalid JSON at byte " + std::to_string(e.byte) +
                               (pos == std::string::npos ? std::string() : " (" + what.substr(pos + 2) + ")"));
    }
  }
  if (in->bad())
    throw FileError("error while reading '" + path + "'");
  return out;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep)
{
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep))
    out.push_back(cur);
  if (!s.empty() && s.back() == sep)
    out.emplace_back();
  return out;
}

double to_double(const std::string& s)
{
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("'" + s + "' is not a number");
  }
  if (used != s.size())
    throw std::invalid_argument("'" + s + "' is not a number");
  return x;
}

int to_count(const std::string& s)
{
  const double x = to_double(s);
  if (x != std::floor(x) || x < 1 || x > 1e7)
    throw std::invalid_argument("'" + s + "' is not a positive count");
  return static_cast<int>(x);
}

//! "LO:HI:N[,LO:HI:N]" as a box with per-axis node counts.
std::pair<Box, std::vector<int>> parse_grid_box(const std::string& text)
{
  std::vector<std::pair<double, double>> bounds;
  std::vector<int> counts;
  for (const auto& axis : split(text, ',')) {
    const auto f = split(axis, ':');
    if (f.size() != 3)
      throw std::invalid_argument("expected LO:HI:N per axis, got '" + axis + "'");
    bounds.emplace_back(to_double(f[0]), to_double(f[1]));
    counts.push_back(to_count(f[2]));
  }
  return { Box(bounds), counts };
}

std::pair<std::string, std::string> split_kind(const std::string& text)
{
  const auto pos = text.find(':');
  if (pos == std::string::npos)
    throw std::invalid_argument("space '" + text + "' lacks parameters");
  return { text.substr(0, pos), text.substr(pos + 1) };
}

} // namespace

Box parse_box(const std::string& text)
{
  std::vector<std::pair<double, double>> bounds;
  for (const auto& axis : split(text, ',')) {
    const auto f = split(axis, ':');
    if (f.size() != 2)
      throw std::invalid_argument("expected LO:HI per axis, got '" + axis + "'");
    bounds.emplace_back(to_double(f[0]), to_double(f[1]));
  }
  return Box(bounds);
}

SpaceDescriptor parse_space(const std::string& text)
{
  const auto [kind, rest] = split_kind(text);
  if (kind == "euclidean")
    return SpaceDescriptor::euclidean(static_cast<std::size_t>(to_count(rest)));
  if (kind == "simplex")
    return SpaceDescriptor::simplex(static_cast<std::size_t>(to_count(rest)));
  if (kind == "bayes") {
    const auto [box, counts] = parse_grid_box(rest);
    return SpaceDescriptor::bayes_hilbert(GridSpec::trapezoid(box, counts));
  }
  if (kind == "bayes-circle")
    return SpaceDescriptor::bayes_hilbert(GridSpec::circle(to_count(rest)));
  if (kind == "bayes-sphere") {
    const auto f = split(rest, ':');
    if (f.size() != 2)
      throw std::invalid_argument("expected bayes-sphere:NLAT:NLON");
    return SpaceDescriptor::bayes_hilbert(GridSpec::sphere(to_count(f[0]), to_count(f[1])));
  }
  if (kind == "l2") {
    std::string grid = rest;
    std::size_t components = 1;
    if (const auto slash = rest.find('/'); slash != std::string::npos) {
      grid = rest.substr(0, slash);
      components = static_cast<std::size_t>(to_count(rest.substr(slash + 1)));
    }
    const auto [box, counts] = parse_grid_box(grid);
    return SpaceDescriptor::l2_grid(GridSpec::trapezoid(box, counts), components);
  }
  throw std::invalid_argument("unknown space kind '" + kind + "'");
}

std::optional<Box> space_box(const std::string& text)
{
  const auto [kind, rest] = split_kind(text);
  if (kind == "bayes" || kind == "l2")
    return parse_grid_box(rest.substr(0, rest.find('/'))).first;
  return std::nullopt;
}

namespace {

Eigen::VectorXd number_array(const json& v, std::size_t line, const std::string& what)
{
  if (!v.is_array())
    throw ParseError(line, what + " must be an array of numbers");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number())
      throw ParseError(line, what + "[" + std::to_string(i) + "] is not a number");
    out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
  }
  return out;
}

Eigen::MatrixXd number_matrix(const json& v, std::size_t line, const std::string& what)
{
  if (!v.is_array() || v.empty())
    throw ParseError(line, what + " must be a non-empty array of arrays");
  Eigen::MatrixXd out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Eigen::VectorXd row = number_array(v[i], line, what + "[" + std::to_string(i) + "]");
    if (i == 0)
      out.resize(static_cast<Eigen::Index>(v.size()), row.size());
    else if (row.size() != out.cols())
      throw ParseError(line, what + " rows differ in length");
    out.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return out;
}

std::string kind_of(SpaceKind kind)
{
  switch (kind) {
    case SpaceKind::euclidean:
      return "euclidean";
    case SpaceKind::simplex:
      return "simplex";
    case SpaceKind::bayes_hilbert:
      return "density";
    case SpaceKind::l2_grid:
      return "function";
  }
  return "";
}

} // namespace

ElementSpec parse_element(const json& value, std::size_t line)
{
  ElementSpec out;
  if (value.is_number()) {
    out.kind = "euclidean";
    out.coeffs = Eigen::VectorXd::Constant(1, value.get<double>());
    return out;
  }
  if (!value.is_object())
    throw ParseError(line, "element must be a number or an object");
  const auto kind = value.find("kind");
  if (kind == value.end() || !kind->is_string())
    throw ParseError(line, "element lacks a string \"kind\"");
  out.kind = kind->get<std::string>();
  if (out.kind == "samples") {
    const auto s = value.find("samples");
    if (s == value.end())
      throw ParseError(line, "sample element lacks \"samples\"");
    SampleSet set;
    set.points = number_matrix(*s, line, "samples");
    if (const auto h = value.find("bandwidth"); h != value.end()) {
      if (!h->is_number())
        throw ParseError(line, "\"bandwidth\" is not a number");
      set.bandwidth = h->get<double>();
    }
    out.samples = std::move(set);
    return out;
  }
  const auto c = value.find("coeffs");
  if (c == value.end())
    throw ParseError(line, "element lacks \"coeffs\"");
  out.coeffs = number_array(*c, line, "coeffs");
  return out;
}

HilbertElement make_element(const ElementSpec& spec,
                            const SpaceDescriptor& space,
                            const std::string& space_text,
                            std::uint64_t seed,
                            std::size_t folds)
{
  if (spec.kind == "samples") {
    if (space.kind() != SpaceKind::bayes_hilbert)
      throw SpaceMismatch("sample responses require a Bayes-Hilbert space, got " + to_string(space.kind()));
    const SampleSet& set = *spec.samples;
    const GridSpec& grid = *space.grid();
    if (const auto box = space_box(space_text)) {
      if (set.points.cols() != static_cast<Eigen::Index>(box->dim()))
        throw InvariantViolation("samples have " + std::to_string(set.points.cols()) + " columns, the support has dimension " +
                                 std::to_string(box->dim()));
      const double h = set.bandwidth ? *set.bandwidth : cv_bandwidth_box(set.points, *box, grid, std::nullopt, folds, seed).bandwidth;
      return reconstruct_box(set.points, *box, grid, h);
    }
    if (set.points.cols() != static_cast<Eigen::Index>(grid.dim()))
      throw InvariantViolation("samples have " + std::to_string(set.points.cols()) + " columns, expected unit vectors in R^" +
                               std::to_string(grid.dim()));
    const double h = set.bandwidth ? *set.bandwidth : cv_bandwidth_sphere(set.points, grid, std::nullopt, folds, seed).bandwidth;
    return reconstruct_sphere(set.points, grid, h);
  }
  const std::string expected = kind_of(space.kind());
  if (spec.kind != expected)
    throw SpaceMismatch("element of kind '" + spec.kind + "' in a space holding '" + expected + "' elements");
  if (static_cast<std::size_t>(spec.coeffs.size()) != space.dimension())
    throw InvariantViolation("element has " + std::to_string(spec.coeffs.size()) + " coefficients, the space has dimension " +
                             std::to_string(space.dimension()));
  return HilbertElement(space, spec.coeffs);
}

json element_json(const HilbertElement& v)
{
  return json{ { "kind", kind_of(v.space().kind()) }, { "coeffs", vector_json(v.coeffs()) } };
}

Dataset read_dataset(const std::string& path, bool require_y)
{
  const std::vector<Record> records = read_jsonl(path);
  if (records.empty())
    throw ParseError(0, "input '" + path + "' holds no header line");
  Dataset out;
  const Record& head = records.front();
  if (!head.value.is_object() || head.value.contains("x"))
    throw ParseError(head.line, "first line must be the header object {\"d\": ...}");
  const auto d = head.value.find("d");
  if (d == head.value.end() || !d->is_number_unsigned() || d->get<std::size_t>() == 0)
    throw ParseError(head.line, "header needs a positive integer \"d\"");
  DatasetHeader& h = out.header;
  h.d = d->get<std::size_t>();
  h.dims.assign(h.d, 1);
  if (const auto l = head.value.find("L"); l != head.value.end()) {
    if (!l->is_array() || l->size() != h.d)
      throw ParseError(head.line, "\"L\" must list d dimensions");
    for (std::size_t j = 0; j < h.d; ++j) {
      if (!(*l)[j].is_number_unsigned() || (*l)[j].get<std::size_t>() == 0)
        throw ParseError(head.line, "\"L\"[" + std::to_string(j) + "] is not a positive integer");
      h.dims[j] = (*l)[j].get<std::size_t>();
    }
  }
  h.domains.assign(h.d, std::nullopt);
  if (const auto dom = head.value.find("domains"); dom != head.value.end()) {
    if (!dom->is_array() || dom->size() != h.d)
      throw ParseError(head.line, "\"domains\" must list d boxes");
    for (std::size_t j = 0; j < h.d; ++j) {
      if ((*dom)[j].is_null())
        continue;
      const Eigen::MatrixXd b = number_matrix((*dom)[j], head.line, "domains[" + std::to_string(j) + "]");
      if (b.cols() != 2 || static_cast<std::size_t>(b.rows()) != h.dims[j])
        throw ParseError(head.line, "domains[" + std::to_string(j) + "] must hold L_j pairs [lo, hi]");
      std::vector<std::pair<double, double>> bounds;
      for (Eigen::Index a = 0; a < b.rows(); ++a)
        bounds.emplace_back(b(a, 0), b(a, 1));
      h.domains[j] = Box(bounds);
    }
  }
  if (const auto s = head.value.find("space"); s != head.value.end()) {
    if (!s->is_string())
      throw ParseError(head.line, "\"space\" must be a string");
    h.space = s->get<std::string>();
  }

  std::size_t width = 0;
  for (std::size_t dim : h.dims)
    width += dim;
  out.predictors.resize(static_cast<Eigen::Index>(records.size() - 1), static_cast<Eigen::Index>(width));
  for (std::size_t r = 1; r < records.size(); ++r) {
    const Record& rec = records[r];
    if (!rec.value.is_object())
      throw ParseError(rec.line, "observation must be an object");
    const auto x = rec.value.find("x");
    if (x == rec.value.end())
      throw ParseError(rec.line, "observation lacks \"x\"");
    const Eigen::VectorXd xv = number_array(*x, rec.line, "x");
    if (static_cast<std::size_t>(xv.size()) != width)
      throw ParseError(rec.line, "\"x\" has " + std::to_string(xv.size()) + " values, the header declares " + std::to_string(width));
    out.predictors.row(static_cast<Eigen::Index>(r - 1)) = xv.transpose();
    out.lines.push_back(rec.line);
    const auto y = rec.value.find("y");
    if (y == rec.value.end()) {
      if (require_y)
        throw ParseError(rec.line, "observation lacks \"y\"");
    } else {
      out.responses.push_back(parse_element(*y, rec.line));
    }
  }
  return out;
}

std::vector<Box> resolve_domains(const Dataset& data, const std::vector<std::pair<std::size_t, Box>>& overrides)
{
  const DatasetHeader& h = data.header;
  std::vector<std::optional<Box>> boxes = h.domains;
  for (const auto& [j, box] : overrides) {
    if (j >= h.d)
      throw std::invalid_argument("--domain names predictor " + std::to_string(j + 1) + " but d = " + std::to_string(h.d));
    if (box.dim() != h.dims[j])
      throw std::invalid_argument("--domain for predictor " + std::to_string(j + 1) + " has " + std::to_string(box.dim()) +
                                  " axes, expected " + std::to_string(h.dims[j]));
    boxes[j] = box;
  }
  std::vector<Box> out;
  std::size_t col = 0;
  for (std::size_t j = 0; j < h.d; ++j) {
    if (boxes[j]) {
      out.push_back(*boxes[j]);
    } else {
      // Range of the observed values.
      std::vector<std::pair<double, double>> bounds;
      for (std::size_t a = 0; a < h.dims[j]; ++a) {
        const auto c = data.predictors.col(static_cast<Eigen::Index>(col + a));
        if (c.size() == 0)
          throw InvariantViolation("no observations to infer the domain of predictor " + std::to_string(j + 1));
        bounds.emplace_back(c.minCoeff(), c.maxCoeff());
      }
      out.emplace_back(bounds);
    }
    for (const auto& [lo, hi] : out.back().bounds())
      if (!(lo < hi))
        throw InvariantViolation("domain of predictor " + std::to_string(j + 1) + " is empty");
    col += h.dims[j];
  }
  return out;
}

void write_text(const std::string& path, const std::string& text)
{
  if (path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file)
    throw FileError("cannot open output file '" + path + "'");
  file << text;
  if (!file)
    throw FileError("error while writing '" + path + "'");
}

std::string csv(const std::vector<std::string>& header, const Eigen::Ref<const Eigen::MatrixXd>& rows)
{
  std::string out;
  for (std::size_t k = 0; k < header.size(); ++k)
    out += (k ? "," : "") + header[k];
  out += '\n';
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < rows.cols(); ++c)
      out += (c ? "," : "") + format_number(rows(r, c));
    out += '\n';
  }
  return out;
}

} // namespace hsbf::io
