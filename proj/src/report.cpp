#include "kinstab/report.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "kinstab/config.hpp"

namespace kinstab {

void ExperimentReport::add_row(std::vector<double> r) {
  if (r.size() != columns.size()) throw std::invalid_argument("row width does not match columns");
  rows.push_back(std::move(r));
}

std::string ExperimentReport::to_csv() const {
  std::ostringstream o;
  o << "# config_hash=" << config_hash << "\n";
  o << "# subcommand=" << subcommand << "\n";
  o << "# seed=" << seed << "\n";
  for (const auto& [k, v] : params) o << "# " << k << "=" << v << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) o << (i ? "," : "") << columns[i];
  o << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) o << (i ? "," : "") << format_double(r[i]);
    o << "\n";
  }
  return o.str();
}

std::string ExperimentReport::to_jsonl() const {
  std::ostringstream o;
  nlohmann::ordered_json head;
  head["config_hash"] = config_hash;
  head["subcommand"] = subcommand;
  head["seed"] = seed;
  for (const auto& [k, v] : params) head["params"][k] = v;
  o << head.dump() << "\n";
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    for (std::size_t i = 0; i < r.size(); ++i) j[columns[i]] = r[i];
    o << j.dump() << "\n";
  }
  return o.str();
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string());
    f << content;
    if (!f) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, p);
}

void write_report(const ExperimentReport& r, const std::string& path, const std::string& format) {
  if (format == "jsonl")
    write_atomic(path, r.to_jsonl());
  else
    write_atomic(path, r.to_csv());
}

}  // namespace kinstab
