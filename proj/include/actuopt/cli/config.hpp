#pragma once

// Experiment configuration: a sectioned key = value text format.
//
//   # comment            ; comment
//   [section]
//   key = value
//
// Lists are comma separated. Profile and signal values are small call
// expressions such as mode(1, 1) or sine(1, 1.5). Every key is optional and
// unknown sections or keys are rejected with the offending line.

#include "actuopt/beam_model.hpp"
#include "actuopt/errors.hpp"
#include "actuopt/optimizer.hpp"
#include "actuopt/wave_model.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace actuopt::cli {

class ConfigError : public UsageError {
 public:
  using UsageError::UsageError;
};

enum class ModelKind { beam, wave };

struct ExperimentConfig {
  ModelKind model = ModelKind::beam;

  BeamParams beam{};
  double beam_width = 0.05;

  WaveParams wave{};
  double wave_width = 0.2;

  // [initial]
  std::string w0 = "mode(1, 1)";
  std::string v0 = "zero";

  // [control]
  std::string u = "zero";
  std::vector<double> r;  // empty: centre of the design box

  // [cost]
  std::string q1 = "uniform(1)";
  std::string q2 = "uniform(1)";
  double r_weight = 1.0;

  // [time]
  double tau = 2.0;
  int n_steps = 400;

  // [admissible]
  double r_ad = 100.0;
  std::vector<double> r_lower;  // empty: model default box
  std::vector<double> r_upper;

  // [optimizer]
  OptimizerConfig optimizer{};
  int n_grid = 64;

  // [gradcheck]
  std::string check_u = "sine(1, 1.5)";
  std::vector<double> check_r;  // empty: quarter point of the design box
  int directions = 3;

  // [run]
  int seed = 1;
  std::vector<double> probe;  // empty: domain centre
  std::string out = "out";

  bool operator==(const ExperimentConfig&) const = default;
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace config_detail {

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

struct Location {
  std::string source;
  int line = 0;
  std::string section;
  std::string key;

  [[noreturn]] void fail(const std::string& what) const {
    std::ostringstream os;
    os << source << ":" << line << ": [" << section << "] " << key << ": " << what;
    throw ConfigError(os.str());
  }
};

inline double to_double(const std::string& s, const Location& at) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (s.empty() || ec != std::errc() || ptr != last) at.fail("expected a number, got '" + s + "'");
  if (!std::isfinite(v)) at.fail("value must be finite");
  return v;
}

inline int to_int(const std::string& s, const Location& at) {
  int v = 0;
  const char* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), last, v);
  if (s.empty() || ec != std::errc() || ptr != last) at.fail("expected an integer, got '" + s + "'");
  return v;
}

inline std::vector<double> to_list(const std::string& s, const Location& at) {
  std::vector<double> out;
  if (s.empty()) return out;
  for (const auto& item : split(s, ',')) out.push_back(to_double(item, at));
  return out;
}

inline std::string list_text(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v[i]);
  }
  return out;
}

}  // namespace config_detail

/// A parsed call expression: name(arg, arg, ...), or a bare name.
struct Expression {
  std::string name;
  std::vector<double> args;
};

inline Expression parse_expression(const std::string& text, const std::string& what = "expression") {
  const std::string s = config_detail::trim(text);
  Expression e;
  const auto open = s.find('(');
  if (open == std::string::npos) {
    e.name = s;
  } else {
    if (s.back() != ')') throw ConfigError(what + ": missing ')' in '" + s + "'");
    e.name = config_detail::trim(std::string_view(s).substr(0, open));
    const std::string inner = s.substr(open + 1, s.size() - open - 2);
    config_detail::Location at{what, 0, "", ""};
    try {
      e.args = config_detail::to_list(config_detail::trim(inner), at);
    } catch (const ConfigError&) {
      throw ConfigError(what + ": bad argument list in '" + s + "'");
    }
  }
  if (e.name.empty()) throw ConfigError(what + ": empty expression");
  return e;
}

/// Check an initial profile expression without evaluating it.
inline void check_profile(const std::string& text, bool two_d, const std::string& what) {
  const Expression e = parse_expression(text, what);
  const std::size_t n = e.args.size();
  if (e.name == "zero" && n == 0) return;
  if (e.name == "uniform" && n == 1) return;
  if (e.name == "mode" && (two_d ? (n == 2 || n == 3) : n == 2)) return;
  if (e.name == "gaussian" && (two_d ? n == 4 : n == 3)) return;
  throw ConfigError(what + ": unsupported profile '" + text +
                    "' (zero | uniform(v) | mode(amp, m[, m2]) | gaussian(amp, width, c1[, c2]))");
}

inline void check_weight(const std::string& text, bool two_d, const std::string& what) {
  const Expression e = parse_expression(text, what);
  const std::size_t n = e.args.size();
  if (e.name == "uniform" && n == 1 && e.args[0] >= 0.0) return;
  if (e.name == "gaussian" && n == (two_d ? 3u : 2u) && e.args.back() > 0.0) return;
  throw ConfigError(what + ": unsupported weight '" + text + "' (uniform(v >= 0) | gaussian(center..., width))");
}

inline void check_signal(const std::string& text, const std::string& what) {
  const Expression e = parse_expression(text, what);
  const std::size_t n = e.args.size();
  if (e.name == "zero" && n == 0) return;
  if (e.name == "constant" && n == 1) return;
  if (e.name == "sine" && (n == 2 || n == 3)) return;
  throw ConfigError(what + ": unsupported signal '" + text + "' (zero | constant(c) | sine(amp, freq[, phase]))");
}

inline void validate_config(const ExperimentConfig& c) {
  const bool two_d = c.model == ModelKind::wave;
  if (c.model == ModelKind::beam) {
    c.beam.validate();
    if (!(c.beam_width > 0.0)) throw ConfigError("[beam] width must be positive");
  } else {
    c.wave.validate();
    if (!(c.wave_width > 0.0)) throw ConfigError("[wave] width must be positive");
  }
  check_profile(c.w0, two_d, "[initial] w0");
  check_profile(c.v0, two_d, "[initial] v0");
  check_signal(c.u, "[control] u");
  check_signal(c.check_u, "[gradcheck] u");
  check_weight(c.q1, two_d, "[cost] q1");
  check_weight(c.q2, two_d, "[cost] q2");
  if (!(c.r_weight > 0.0)) throw ConfigError("[cost] r_weight must be positive");
  TimeGrid{c.tau, c.n_steps}.validate();
  if (!(c.r_ad > 0.0)) throw ConfigError("[admissible] r_ad must be positive");
  const std::size_t d = two_d ? 2 : 1;
  auto dim = [&](const std::vector<double>& v, const char* name) {
    if (!v.empty() && v.size() != d)
      throw ConfigError(std::string(name) + ": expected " + std::to_string(d) + " components");
  };
  dim(c.r, "[control] r");
  dim(c.r_lower, "[admissible] r_lower");
  dim(c.r_upper, "[admissible] r_upper");
  dim(c.check_r, "[gradcheck] r");
  dim(c.probe, "[run] probe");
  if (c.r_lower.empty() != c.r_upper.empty()) throw ConfigError("[admissible] give both r_lower and r_upper or neither");
  c.optimizer.validate();
  if (c.n_grid < 8) throw ConfigError("[optimizer] n_grid must be at least 8");
  if (c.directions < 1) throw ConfigError("[gradcheck] directions must be at least 1");
}

inline const char* kind_name(NonlinearityKind k) {
  switch (k) {
    case NonlinearityKind::none: return "none";
    case NonlinearityKind::sine_gordon: return "sine_gordon";
    case NonlinearityKind::klein_gordon: return "klein_gordon";
  }
  return "?";
}

/// Parse configuration text; `source` names the input in diagnostics.
inline ExperimentConfig parse_config(std::string_view text, const std::string& source = "<config>") {
  using namespace config_detail;
  ExperimentConfig c;
  std::string section;
  std::map<std::string, int> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;

  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    Location at{source, line_no, section, ""};
    if (line.front() == '[') {
      if (line.back() != ']') at.fail("malformed section header '" + line + "'");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      static const char* known[] = {"model", "beam", "wave", "initial", "control", "cost",
                                    "time", "admissible", "optimizer", "gradcheck", "run"};
      bool ok = false;
      for (const char* k : known) ok = ok || section == k;
      at.section = section;
      if (!ok) at.fail("unknown section");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) at.fail("expected 'key = value', got '" + line + "'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    at.key = key;
    if (section.empty()) at.fail("key outside of any section");
    const std::string full = section + "." + key;
    if (seen.count(full)) at.fail("duplicate key (first set on line " + std::to_string(seen[full]) + ")");
    seen[full] = line_no;

    auto D = [&]() { return to_double(value, at); };
    auto I = [&]() { return to_int(value, at); };

    if (section == "model") {
      if (key == "type") {
        if (value == "beam") c.model = ModelKind::beam;
        else if (value == "wave") c.model = ModelKind::wave;
        else at.fail("expected beam or wave, got '" + value + "'");
      } else at.fail("unknown key");
    } else if (section == "beam") {
      if (key == "ei") c.beam.ei = D();
      else if (key == "rho_a") c.beam.rho_a = D();
      else if (key == "length") c.beam.length = D();
      else if (key == "k") c.beam.k = D();
      else if (key == "alpha") c.beam.alpha = D();
      else if (key == "mu") c.beam.mu = D();
      else if (key == "cd") c.beam.cd = D();
      else if (key == "n_cells") c.beam.n_cells = I();
      else if (key == "width") c.beam_width = D();
      else at.fail("unknown key");
    } else if (section == "wave") {
      if (key == "lx") c.wave.lx = D();
      else if (key == "ly") c.wave.ly = D();
      else if (key == "nx") c.wave.nx = I();
      else if (key == "ny") c.wave.ny = I();
      else if (key == "width") c.wave_width = D();
      else if (key == "k_exp") c.wave.nonlinearity.k_exp = I();
      else if (key == "nonlinearity") {
        if (value == "none") c.wave.nonlinearity.kind = NonlinearityKind::none;
        else if (value == "sine_gordon") c.wave.nonlinearity.kind = NonlinearityKind::sine_gordon;
        else if (value == "klein_gordon") c.wave.nonlinearity.kind = NonlinearityKind::klein_gordon;
        else at.fail("expected none, sine_gordon or klein_gordon, got '" + value + "'");
      } else if (key == "neumann") {
        c.wave.neumann = {false, false, false, false};
        if (!value.empty() && value != "none") {
          for (const auto& edge : split(value, ',')) {
            if (edge == "left") c.wave.neumann[0] = true;
            else if (edge == "right") c.wave.neumann[1] = true;
            else if (edge == "bottom") c.wave.neumann[2] = true;
            else if (edge == "top") c.wave.neumann[3] = true;
            else at.fail("unknown edge '" + edge + "'");
          }
        }
      } else at.fail("unknown key");
    } else if (section == "initial") {
      if (key == "w0") c.w0 = value;
      else if (key == "v0") c.v0 = value;
      else at.fail("unknown key");
    } else if (section == "control") {
      if (key == "u") c.u = value;
      else if (key == "r") c.r = to_list(value, at);
      else at.fail("unknown key");
    } else if (section == "cost") {
      if (key == "q1") c.q1 = value;
      else if (key == "q2") c.q2 = value;
      else if (key == "r_weight") c.r_weight = D();
      else at.fail("unknown key");
    } else if (section == "time") {
      if (key == "tau") c.tau = D();
      else if (key == "n_steps") c.n_steps = I();
      else at.fail("unknown key");
    } else if (section == "admissible") {
      if (key == "r_ad") c.r_ad = D();
      else if (key == "r_lower") c.r_lower = to_list(value, at);
      else if (key == "r_upper") c.r_upper = to_list(value, at);
      else at.fail("unknown key");
    } else if (section == "optimizer") {
      if (key == "max_iters") c.optimizer.max_iters = I();
      else if (key == "tol_grad") c.optimizer.tol_grad = D();
      else if (key == "armijo_c") c.optimizer.armijo_c = D();
      else if (key == "backtrack") c.optimizer.backtrack = D();
      else if (key == "max_backtracks") c.optimizer.max_backtracks = I();
      else if (key == "max_design_step") c.optimizer.max_design_step = D();
      else if (key == "n_grid") c.n_grid = I();
      else at.fail("unknown key");
    } else if (section == "gradcheck") {
      if (key == "u") c.check_u = value;
      else if (key == "r") c.check_r = to_list(value, at);
      else if (key == "directions") c.directions = I();
      else at.fail("unknown key");
    } else if (section == "run") {
      if (key == "seed") c.seed = I();
      else if (key == "probe") c.probe = to_list(value, at);
      else if (key == "out") c.out = value;
      else at.fail("unknown key");
    }
  }

  try {
    validate_config(c);
  } catch (const UsageError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open configuration file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

/// Canonical text form; parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const ExperimentConfig& c) {
  using config_detail::list_text;
  std::ostringstream os;
  auto kv = [&](const char* k, const std::string& v) { os << k << " = " << v << "\n"; };
  auto kd = [&](const char* k, double v) { kv(k, format_double(v)); };
  auto ki = [&](const char* k, int v) { kv(k, std::to_string(v)); };

  os << "[model]\n";
  kv("type", c.model == ModelKind::beam ? "beam" : "wave");
  os << "\n[beam]\n";
  kd("ei", c.beam.ei);
  kd("rho_a", c.beam.rho_a);
  kd("length", c.beam.length);
  kd("k", c.beam.k);
  kd("alpha", c.beam.alpha);
  kd("mu", c.beam.mu);
  kd("cd", c.beam.cd);
  ki("n_cells", c.beam.n_cells);
  kd("width", c.beam_width);
  os << "\n[wave]\n";
  kd("lx", c.wave.lx);
  kd("ly", c.wave.ly);
  ki("nx", c.wave.nx);
  ki("ny", c.wave.ny);
  kd("width", c.wave_width);
  kv("nonlinearity", kind_name(c.wave.nonlinearity.kind));
  ki("k_exp", c.wave.nonlinearity.k_exp);
  std::string edges;
  for (int e = 0; e < 4; ++e) {
    if (!c.wave.neumann[e]) continue;
    if (!edges.empty()) edges += ", ";
    edges += edge_name(static_cast<Edge>(e));
  }
  kv("neumann", edges.empty() ? "none" : edges);
  os << "\n[initial]\n";
  kv("w0", c.w0);
  kv("v0", c.v0);
  os << "\n[control]\n";
  kv("u", c.u);
  kv("r", list_text(c.r));
  os << "\n[cost]\n";
  kv("q1", c.q1);
  kv("q2", c.q2);
  kd("r_weight", c.r_weight);
  os << "\n[time]\n";
  kd("tau", c.tau);
  ki("n_steps", c.n_steps);
  os << "\n[admissible]\n";
  kd("r_ad", c.r_ad);
  kv("r_lower", list_text(c.r_lower));
  kv("r_upper", list_text(c.r_upper));
  os << "\n[optimizer]\n";
  ki("max_iters", c.optimizer.max_iters);
  kd("tol_grad", c.optimizer.tol_grad);
  kd("armijo_c", c.optimizer.armijo_c);
  kd("backtrack", c.optimizer.backtrack);
  ki("max_backtracks", c.optimizer.max_backtracks);
  kd("max_design_step", c.optimizer.max_design_step);
  ki("n_grid", c.n_grid);
  os << "\n[gradcheck]\n";
  kv("u", c.check_u);
  kv("r", list_text(c.check_r));
  ki("directions", c.directions);
  os << "\n[run]\n";
  ki("seed", c.seed);
  kv("probe", list_text(c.probe));
  kv("out", c.out);
  return os.str();
}

}  // namespace actuopt::cli
