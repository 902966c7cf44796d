#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "kinstab/model.hpp"

namespace kinstab {

/// Config errors carry a kind (SyntaxError, UnknownKey, RangeError) and the
/// 1-based line they refer to (0 when the problem is a missing key).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string kind, int line, const std::string& what)
      : std::runtime_error(kind + (line > 0 ? " (line " + std::to_string(line) + ")" : "") +
                           ": " + what),
        kind_(std::move(kind)),
        line_(line) {}
  const std::string& kind() const noexcept { return kind_; }
  int line() const noexcept { return line_; }

 private:
  std::string kind_;
  int line_;
};

/// Uniform grid written as start:stop:count.
struct GridSpec {
  double start = 0.0;
  double stop = 1.0;
  std::size_t count = 2;
  std::vector<double> points() const;
  double step() const { return count > 1 ? (stop - start) / static_cast<double>(count - 1) : 0.0; }
  std::string str() const;
  static GridSpec parse(const std::string& s);  // throws std::invalid_argument
};

struct RunConfig {
  std::uint64_t seed = 20261018;
  std::size_t samples = 10000;
  std::vector<double> lambda_grid = {1e2, 1e3, 1e4};
  double lambda = 1e4;
  double t = 1.0;
  double y = 1.0;
  double k = 0.25;
  GridSpec t_grid{0.0, 1.0, 21};
  GridSpec x_grid{-5.0, 5.0, 161};
  std::size_t blocks = 20;
};

struct OutputConfig {
  std::string dir = "out";
  std::string format = "csv";  // csv | jsonl
};

struct ExperimentConfig {
  FamilySpec model;
  RunConfig run;
  OutputConfig output;
};

/// Parses the [model] / [run] / [output] key = value document. Every model
/// key is required; run and output keys fall back to defaults.
ExperimentConfig parse_config(const std::string& text);

/// Canonical text; parse_config(serialize_config(c)) reproduces c exactly.
std::string serialize_config(const ExperimentConfig& c);

/// 64-bit FNV-1a of the bytes, as 16 hex digits.
std::string config_hash(const std::string& text);

/// Shortest round-trip decimal form of a double.
std::string format_double(double x);

}  // namespace kinstab
