#include "io.hpp"

#include "hsbf/error.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace hsbf;

namespace {

std::string temp_file(const std::string& name, const std::string& text)
{
  const auto path = std::filesystem::temp_directory_path() / ("hsbf_io_" + name);
  std::ofstream(path) << text;
  return path.string();
}

} // namespace

TEST_CASE("numbers print with 17 significant digits and round-trip")
{
  CHECK(io::format_number(0.1) == "0.10000000000000001");
  CHECK(io::format_number(2.0) == "2");
  CHECK(io::format_number(-1e-300) == "-1e-300");
  for (double x : { 1.0 / 3.0, 6.02214076e23, -2.5e-7 })
    CHECK(std::stod(io::format_number(x)) == x);
  CHECK(io::format_number(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("json writer is compact and deterministic")
{
  const io::json v{ { "b", 0.1 }, { "a", io::json::array({ 1, 2.5, nullptr }) }, { "s", "x\"y" } };
  CHECK(io::dump(v) == R"({"a":[1,2.5,null],"b":0.10000000000000001,"s":"x\"y"})");
  CHECK(io::dump(io::json(std::nan(""))) == "null");
}

TEST_CASE("space strings")
{
  CHECK(io::parse_space("euclidean:3").dimension() == 3);
  CHECK(io::parse_space("simplex:4").kind() == SpaceKind::simplex);
  const SpaceDescriptor b = io::parse_space("bayes:0:2:21,0:1:11");
  CHECK(b.kind() == SpaceKind::bayes_hilbert);
  CHECK(b.dimension() == 21 * 11);
  CHECK(b.grid()->total_measure() == doctest::Approx(2.0));
  CHECK(io::parse_space("bayes-circle:50").dimension() == 50);
  CHECK(io::parse_space("l2:0:1:11/3").dimension() == 33);
  CHECK(io::space_box("bayes:0:2:21")->upper(0) == 2.0);
  CHECK_FALSE(io::space_box("bayes-circle:10").has_value());
  CHECK_THROWS_AS(io::parse_space("simplex"), std::invalid_argument);
  CHECK_THROWS_AS(io::parse_space("simplex:x"), std::invalid_argument);
  CHECK_THROWS_AS(io::parse_space("torus:3"), std::invalid_argument);
  CHECK_THROWS_AS(io::parse_space("bayes:0:1"), std::invalid_argument);
}

TEST_CASE("dataset parsing")
{
  const std::string path = temp_file("ok.jsonl",
                                     "{\"d\":2,\"L\":[1,2],\"domains\":[[[0,1]],null],\"space\":\"simplex:3\"}\n"
                                     "\n"
                                     "{\"x\":[0.5,1,2],\"y\":{\"kind\":\"simplex\",\"coeffs\":[0.2,0.3,0.5]}}\n"
                                     "{\"x\":[0.25,3,-1],\"y\":{\"kind\":\"simplex\",\"coeffs\":[0.1,0.1,0.8]}}\n");
  const io::Dataset ds = io::read_dataset(path);
  CHECK(ds.header.d == 2);
  CHECK(ds.header.dims == std::vector<std::size_t>{ 1, 2 });
  CHECK(ds.lines == std::vector<std::size_t>{ 3, 4 });
  CHECK(ds.predictors.rows() == 2);
  CHECK(ds.predictors(1, 2) == -1.0);
  const auto boxes = io::resolve_domains(ds, {});
  CHECK(boxes[0] == Box(0.0, 1.0));
  CHECK(boxes[1] == Box({ { 1.0, 3.0 }, { -1.0, 2.0 } }));
  const auto over = io::resolve_domains(ds, { { 0, Box(0.2, 0.4) } });
  CHECK(over[0] == Box(0.2, 0.4));
  CHECK_THROWS_AS(io::resolve_domains(ds, { { 0, Box({ { 0, 1 }, { 0, 1 } }) } }), std::invalid_argument);
}

TEST_CASE("parse errors carry the line number")
{
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      io::read_dataset(temp_file("bad.jsonl", text));
    } catch (const io::ParseError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("{\"d\":1}\n{\"x\":[1],\"y\":1}\n{\"x\":[2],\"y\":1\n") == 3);
  CHECK(line_of("{\"d\":1}\n\n\n{\"x\":[1,2],\"y\":1}\n") == 4);
  CHECK(line_of("{\"d\":1}\n{\"x\":[\"a\"],\"y\":1}\n") == 2);
  CHECK(line_of("{\"d\":1}\n{\"x\":[1]}\n") == 2);
  CHECK(line_of("{\"x\":[1],\"y\":1}\n") == 1);
  CHECK(line_of("{\"d\":0}\n") == 1);
  CHECK(line_of("{\"d\":1}\n{\"x\":[1],\"y\":{\"coeffs\":[1]}}\n") == 2);
  CHECK_THROWS_AS(io::read_dataset("/nonexistent/file.jsonl"), io::FileError);
}

TEST_CASE("elements are validated against the space")
{
  const SpaceDescriptor s = io::parse_space("simplex:3");
  io::ElementSpec ok = io::parse_element(io::json::parse(R"({"kind":"simplex","coeffs":[0.2,0.3,0.5]})"), 1);
  CHECK(io::make_element(ok, s, "simplex:3", 0, 10).coeffs().sum() == doctest::Approx(1.0));
  io::ElementSpec neg = io::parse_element(io::json::parse(R"({"kind":"simplex","coeffs":[0.5,0.6,-0.1]})"), 1);
  CHECK_THROWS_AS(io::make_element(neg, s, "simplex:3", 0, 10), InvariantViolation);
  io::ElementSpec wrong = io::parse_element(io::json::parse(R"({"kind":"density","coeffs":[1,1,1]})"), 1);
  CHECK_THROWS_AS(io::make_element(wrong, s, "simplex:3", 0, 10), SpaceMismatch);
  io::ElementSpec shortv = io::parse_element(io::json::parse(R"({"kind":"simplex","coeffs":[0.5,0.5]})"), 1);
  CHECK_THROWS_AS(io::make_element(shortv, s, "simplex:3", 0, 10), InvariantViolation);
  const io::ElementSpec scalar = io::parse_element(io::json(2.5), 1);
  CHECK(io::make_element(scalar, SpaceDescriptor::euclidean(1), "euclidean:1", 0, 10).coeffs()(0) == 2.5);

  // Samples with a fixed bandwidth are reconstructed on the space grid.
  const io::ElementSpec draws =
    io::parse_element(io::json::parse(R"({"kind":"samples","samples":[[0.2],[0.4],[0.5],[0.7]],"bandwidth":0.5})"), 1);
  const SpaceDescriptor b = io::parse_space("bayes:0:1:21");
  const HilbertElement e = io::make_element(draws, b, "bayes:0:1:21", 0, 10);
  CHECK(b.grid()->weights().dot(e.coeffs()) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(io::make_element(draws, s, "simplex:3", 0, 10), SpaceMismatch);
  const io::json round = io::element_json(e);
  CHECK(round["kind"] == "density");
  CHECK(round["coeffs"].size() == 21);
}

TEST_CASE("csv")
{
  Eigen::MatrixXd m(2, 2);
  m << 0.5, 1.0 / 3.0, -2.0, 1e-20;
  CHECK(io::csv({ "a", "b" }, m) == "a,b\n0.5,0.33333333333333331\n-2,9.9999999999999995e-21\n");
}
