#include <doctest.h>

#include <fstream>
#include <sstream>
#include <variant>

#include "kinstab/config.hpp"
#include "kinstab/report.hpp"

using namespace kinstab;

namespace {

std::string read_default() {
  std::ifstream f(KINSTAB_SOURCE_DIR "/configs/default.cfg");
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

const char* kModel =
    "[model]\nomega = abs_sin\nR1 = sin_power\nR2 = sin_power\np_zero = log_decay\n"
    "gamma = 1\nT_o = 0\nkappa = 2\np_c = 2.5\ntransmit_share = 0.7\n"
    "beta1 = 2\nbeta2 = 2\nbeta3 = 2\n";

ConfigError parse_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e;
  }
  return ConfigError("none", 0, "parsed");
}

}  // namespace

TEST_CASE("shipped config parses and validates") {
  const auto c = parse_config(read_default());
  CHECK(c.run.samples == 2000);
  CHECK(c.run.lambda_grid.size() == 3);
  CHECK(c.run.x_grid.count == 161);
  CHECK(c.run.x_grid.step() == doctest::Approx(1.0 / 16.0));
  CHECK(std::holds_alternative<ValidatedModel>(validate_params(make_params(c.model))));
}

TEST_CASE("serialization round trips exactly") {
  auto c = parse_config(kModel);
  c.run.lambda = 1234.5678901234567;
  c.run.k = -0.1;
  c.output.format = "jsonl";
  const std::string text = serialize_config(c);
  const auto back = parse_config(text);
  CHECK(serialize_config(back) == text);
  CHECK(back.run.lambda == c.run.lambda);
  CHECK(config_hash(text) == config_hash(serialize_config(back)));
  CHECK(config_hash(text).size() == 16);
  CHECK(config_hash("a") != config_hash("b"));
}

TEST_CASE("config error kinds and lines") {
  const std::string m = kModel;
  auto e = parse_error(m + "gamma = 2\n");
  CHECK(e.kind() == "SyntaxError");
  CHECK(e.line() == 14);

  e = parse_error("[model]\nomega = abs_sin\n");
  CHECK(e.kind() == "UnknownKey");

  e = parse_error(m + "[run]\nsamples = 10\nspeed = 3\n");
  CHECK(e.kind() == "UnknownKey");
  CHECK(e.line() == 16);

  e = parse_error(m + "[run]\nk = 0.9\n");
  CHECK(e.kind() == "RangeError");
  CHECK(e.line() == 15);

  e = parse_error(m + "[run]\nsamples = many\n");
  CHECK(e.kind() == "RangeError");

  e = parse_error("x = 1\n");
  CHECK(e.kind() == "SyntaxError");
  CHECK(e.line() == 1);

  e = parse_error(m + "[nonsense]\n");
  CHECK(e.kind() == "UnknownKey");
}

TEST_CASE("grid specs") {
  const auto g = GridSpec::parse("0:1:11");
  CHECK(g.points().back() == 1.0);
  CHECK(g.step() == doctest::Approx(0.1));
  CHECK_THROWS_AS(GridSpec::parse("1:0:3"), std::invalid_argument);
  CHECK_THROWS_AS(GridSpec::parse("0:1"), std::invalid_argument);
}

TEST_CASE("report headers carry provenance") {
  ExperimentReport r;
  r.subcommand = "compare";
  r.config_hash = "0123456789abcdef";
  r.seed = 9;
  r.params = {{"t", "1"}};
  r.columns = {"lambda", "ks"};
  r.add_row({100.0, 0.25});
  const auto csv = r.to_csv();
  CHECK(csv.rfind("# config_hash=0123456789abcdef\n", 0) == 0);
  CHECK(csv.find("lambda,ks\n100,0.25\n") != std::string::npos);
  CHECK_THROWS(r.add_row({1.0}));
  const auto js = r.to_jsonl();
  CHECK(js.find("\"config_hash\":\"0123456789abcdef\"") != std::string::npos);
  CHECK(js.find("{\"lambda\":100.0,\"ks\":0.25}") != std::string::npos);
}
