#pragma once

#include "hsbf/densrec.hpp"
#include "hsbf/hilbert.hpp"
#include "hsbf/kernelgrid.hpp"
#include "hsbf/sbf.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hsbf::io {

using nlohmann::json;

//! Malformed input: invalid JSON or a value of the wrong shape. `line()` is
//! the 1-based line of a JSON Lines file, 0 when not tied to a line.
class ParseError : public std::runtime_error
{
public:
  ParseError(std::size_t line, const std::string& msg)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg)
    , line_(line)
  {
  }
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

//! A file could not be opened, read or written.
class FileError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

//! Shortest text reproducing `x` exactly ("%.17g"); NaN and infinities map to
//! null in JSON output and to "nan"/"inf"/"-inf" in CSV.
std::string format_number(double x);

//! Serializes `value` without whitespace, printing every floating value with
//! format_number so that equal inputs give byte-identical files.
void write_json(std::ostream& os, const json& value);
std::string dump(const json& value);

json vector_json(const Eigen::Ref<const Eigen::VectorXd>& v);
//! Row-major nested arrays.
json matrix_json(const Eigen::Ref<const Eigen::MatrixXd>& m);

//! One parsed JSON Lines record with its 1-based line number.
struct Record
{
  std::size_t line = 0;
  json value;
};

//! Non-blank lines of `path` ("-" reads stdin), each parsed as one JSON value.
std::vector<Record> read_jsonl(const std::string& path);

//! Text form of a response space:
//!   euclidean:M
//!   simplex:K
//!   bayes:LO:HI:N[,LO:HI:N]   densities on a box (trapezoid grid)
//!   bayes-circle:N            densities on the unit circle
//!   bayes-sphere:NLAT:NLON    densities on the unit sphere S^2
//!   l2:LO:HI:N[,LO:HI:N][/C]  R^C valued functions on a box grid
//! std::invalid_argument on malformed text.
SpaceDescriptor parse_space(const std::string& text);

//! Support of a Bayes-Hilbert space spec: the box for `bayes:`, nullopt for
//! the circle and the sphere.
std::optional<Box> space_box(const std::string& text);

//! "LO:HI[,LO:HI]" as a box.
Box parse_box(const std::string& text);

//! Response or element object: {"kind": ..., "coeffs": [...]} or, for
//! densities observed through draws, {"kind": "samples", "samples": [[...]],
//! "bandwidth": h}. A bare number is a scalar in euclidean:1.
struct ElementSpec
{
  std::string kind;
  Eigen::VectorXd coeffs;
  std::optional<SampleSet> samples;
};

ElementSpec parse_element(const json& value, std::size_t line);

//! Builds the element in `space`; throws SpaceMismatch when `kind` does not
//! name the space family and InvariantViolation on invalid coefficients.
//! Sample responses are reconstructed on the space grid with `seed`.
HilbertElement make_element(const ElementSpec& spec,
                            const SpaceDescriptor& space,
                            const std::string& space_text,
                            std::uint64_t seed,
                            std::size_t folds);

//! JSON object of an element: {"kind": ..., "coeffs": [...]}.
json element_json(const HilbertElement& v);

//! Dataset header: {"d": d, "L": [L_1, ...], "domains": [[[lo, hi], ...], ...],
//! "space": "<space text>"}; every field but "d" is optional.
struct DatasetHeader
{
  std::size_t d = 0;
  std::vector<std::size_t> dims;
  std::vector<std::optional<Box>> domains;
  std::optional<std::string> space;
};

struct Dataset
{
  DatasetHeader header;
  //! Observation lines in file order.
  std::vector<std::size_t> lines;
  Eigen::MatrixXd predictors;
  std::vector<ElementSpec> responses;
};

//! Header line followed by observation lines {"x": [...], "y": <element>}.
//! With `require_y` false the "y" field is optional (prediction inputs).
Dataset read_dataset(const std::string& path, bool require_y = true);

//! Observation counts and domains made consistent: `domains` overrides the
//! header, missing domains default to the range of the predictor values.
std::vector<Box> resolve_domains(const Dataset& data, const std::vector<std::pair<std::size_t, Box>>& overrides);

//! Writes `text` to `path` ("-" for stdout); FileError on failure.
void write_text(const std::string& path, const std::string& text);

//! CSV of a table with a header row; numbers use format_number.
std::string csv(const std::vector<std::string>& header, const Eigen::Ref<const Eigen::MatrixXd>& rows);

} // namespace hsbf::io
