#include "kinstab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace kinstab {

std::string format_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::vector<double> GridSpec::points() const {
  std::vector<double> p(count);
  for (std::size_t i = 0; i < count; ++i)
    p[i] = count == 1 ? start : start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1);
  return p;
}

std::string GridSpec::str() const {
  return format_double(start) + ":" + format_double(stop) + ":" + std::to_string(count);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

std::uint64_t to_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw std::invalid_argument("not a nonnegative integer: '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

struct Entry {
  std::string value;
  int line;
};

}  // namespace

GridSpec GridSpec::parse(const std::string& s) {
  const auto parts = split(s, ':');
  if (parts.size() != 3) throw std::invalid_argument("grid must be start:stop:count");
  GridSpec g;
  g.start = to_double(parts[0]);
  g.stop = to_double(parts[1]);
  g.count = static_cast<std::size_t>(to_u64(parts[2]));
  if (g.count < 1 || !(g.stop >= g.start)) throw std::invalid_argument("empty or reversed grid");
  return g;
}

ExperimentConfig parse_config(const std::string& text) {
  std::map<std::string, std::map<std::string, Entry>> doc;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("SyntaxError", line, "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (section != "model" && section != "run" && section != "output")
        throw ConfigError("UnknownKey", line, "unknown section [" + section + "]");
      if (doc.count(section)) throw ConfigError("SyntaxError", line, "duplicate section [" + section + "]");
      doc[section];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("SyntaxError", line, "expected key = value");
    if (section.empty()) throw ConfigError("SyntaxError", line, "key outside a section");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError("SyntaxError", line, "empty key");
    auto& sec = doc[section];
    if (sec.count(key)) throw ConfigError("SyntaxError", line, "duplicate key '" + key + "'");
    sec[key] = {value, line};
  }

  ExperimentConfig c;
  std::set<std::string> used;
  auto get = [&](const std::string& sec, const std::string& key, bool required,
                 const std::function<void(const std::string&, int)>& apply) {
    const auto s = doc.find(sec);
    const Entry* e = nullptr;
    if (s != doc.end()) {
      const auto k = s->second.find(key);
      if (k != s->second.end()) e = &k->second;
    }
    if (!e) {
      if (required) throw ConfigError("UnknownKey", 0, "missing required key " + sec + "." + key);
      return;
    }
    used.insert(sec + "." + key);
    try {
      apply(e->value, e->line);
    } catch (const std::invalid_argument& ex) {
      throw ConfigError("RangeError", e->line, sec + "." + key + ": " + ex.what());
    }
  };
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be positive");
    return v;
  };
  auto family = [](const std::string& v, std::initializer_list<const char*> allowed) {
    for (const char* a : allowed)
      if (v == a) return v;
    throw std::invalid_argument("unknown family '" + v + "'");
  };

  auto& M = c.model;
  get("model", "omega", true, [&](const std::string& v, int) { M.omega = family(v, {"abs_sin"}); });
  get("model", "R1", true, [&](const std::string& v, int) { M.R1 = family(v, {"sin_power", "uniform"}); });
  get("model", "R2", true, [&](const std::string& v, int) { M.R2 = family(v, {"sin_power", "uniform"}); });
  get("model", "p_zero", true,
      [&](const std::string& v, int) { M.p_zero = family(v, {"log_decay", "constant"}); });
  get("model", "gamma", true, [&](const std::string& v, int) { M.gamma = positive(to_double(v), "gamma"); });
  get("model", "T_o", true, [&](const std::string& v, int) {
    M.T_o = to_double(v);
    if (!(M.T_o >= 0.0) || !std::isfinite(M.T_o)) throw std::invalid_argument("T_o must be >= 0");
  });
  get("model", "kappa", true, [&](const std::string& v, int) { M.kappa = positive(to_double(v), "kappa"); });
  get("model", "p_c", true, [&](const std::string& v, int) {
    M.p_c = to_double(v);
    if (!(M.p_c >= 0.0) || !std::isfinite(M.p_c)) throw std::invalid_argument("p_c must be >= 0");
  });
  get("model", "transmit_share", true, [&](const std::string& v, int) {
    M.transmit_share = to_double(v);
    if (!(M.transmit_share > 0.0 && M.transmit_share <= 1.0))
      throw std::invalid_argument("transmit_share must lie in (0, 1]");
  });
  get("model", "beta1", true, [&](const std::string& v, int) { M.beta1 = positive(to_double(v), "beta1"); });
  get("model", "beta2", true, [&](const std::string& v, int) { M.beta2 = positive(to_double(v), "beta2"); });
  get("model", "beta3", true, [&](const std::string& v, int) { M.beta3 = positive(to_double(v), "beta3"); });

  auto& R = c.run;
  get("run", "seed", false, [&](const std::string& v, int) { R.seed = to_u64(v); });
  get("run", "samples", false, [&](const std::string& v, int) {
    R.samples = static_cast<std::size_t>(to_u64(v));
    if (R.samples == 0) throw std::invalid_argument("samples must be positive");
  });
  get("run", "lambda_grid", false, [&](const std::string& v, int) {
    R.lambda_grid.clear();
    for (const auto& p : split(v, ',')) R.lambda_grid.push_back(positive(to_double(p), "lambda"));
    if (R.lambda_grid.empty()) throw std::invalid_argument("empty lambda grid");
  });
  get("run", "lambda", false, [&](const std::string& v, int) { R.lambda = positive(to_double(v), "lambda"); });
  get("run", "t", false, [&](const std::string& v, int) {
    R.t = to_double(v);
    if (!(R.t >= 0.0)) throw std::invalid_argument("t must be >= 0");
  });
  get("run", "y", false, [&](const std::string& v, int) { R.y = to_double(v); });
  get("run", "k", false, [&](const std::string& v, int) {
    R.k = to_double(v);
    if (!(std::abs(R.k) <= 0.5)) throw std::invalid_argument("k must lie in [-1/2, 1/2]");
  });
  get("run", "t_grid", false, [&](const std::string& v, int) { R.t_grid = GridSpec::parse(v); });
  get("run", "x_grid", false, [&](const std::string& v, int) { R.x_grid = GridSpec::parse(v); });
  get("run", "blocks", false, [&](const std::string& v, int) {
    R.blocks = static_cast<std::size_t>(to_u64(v));
    if (R.blocks == 0) throw std::invalid_argument("blocks must be positive");
  });

  get("output", "dir", false, [&](const std::string& v, int) { c.output.dir = v; });
  get("output", "format", false, [&](const std::string& v, int) {
    if (v != "csv" && v != "jsonl") throw std::invalid_argument("format must be csv or jsonl");
    c.output.format = v;
  });

  for (const auto& [sec, keys] : doc)
    for (const auto& [key, e] : keys)
      if (!used.count(sec + "." + key))
        throw ConfigError("UnknownKey", e.line, "unknown key " + sec + "." + key);
  return c;
}

std::string serialize_config(const ExperimentConfig& c) {
  const auto& M = c.model;
  const auto& R = c.run;
  std::ostringstream o;
  o << "[model]\n"
    << "omega = " << M.omega << "\n"
    << "R1 = " << M.R1 << "\n"
    << "R2 = " << M.R2 << "\n"
    << "p_zero = " << M.p_zero << "\n"
    << "gamma = " << format_double(M.gamma) << "\n"
    << "T_o = " << format_double(M.T_o) << "\n"
    << "kappa = " << format_double(M.kappa) << "\n"
    << "p_c = " << format_double(M.p_c) << "\n"
    << "transmit_share = " << format_double(M.transmit_share) << "\n"
    << "beta1 = " << format_double(M.beta1) << "\n"
    << "beta2 = " << format_double(M.beta2) << "\n"
    << "beta3 = " << format_double(M.beta3) << "\n"
    << "\n[run]\n"
    << "seed = " << R.seed << "\n"
    << "samples = " << R.samples << "\n"
    << "lambda_grid = ";
  for (std::size_t i = 0; i < R.lambda_grid.size(); ++i)
    o << (i ? ", " : "") << format_double(R.lambda_grid[i]);
  o << "\n"
    << "lambda = " << format_double(R.lambda) << "\n"
    << "t = " << format_double(R.t) << "\n"
    << "y = " << format_double(R.y) << "\n"
    << "k = " << format_double(R.k) << "\n"
    << "t_grid = " << R.t_grid.str() << "\n"
    << "x_grid = " << R.x_grid.str() << "\n"
    << "blocks = " << R.blocks << "\n"
    << "\n[output]\n"
    << "dir = " << c.output.dir << "\n"
    << "format = " << c.output.format << "\n";
  return o.str();
}

std::string config_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace kinstab
