#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace kinstab {

/// Table of named numeric metrics plus provenance. Wall time is kept in
/// memory only so that emitted files stay byte-identical across reruns.
struct ExperimentReport {
  std::string subcommand;
  std::string config_hash;
  std::uint64_t seed = 0;
  double wall_time = 0.0;
  std::vector<std::pair<std::string, std::string>> params;  // echoed in headers
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add_row(std::vector<double> r);
  std::string to_csv() const;
  std::string to_jsonl() const;
};

/// Writes through a temporary file and renames it into place.
void write_atomic(const std::string& path, const std::string& content);

/// CSV or JSONL by format name; parent directories are created.
void write_report(const ExperimentReport& r, const std::string& path, const std::string& format);

}  // namespace kinstab
