#pragma once

// Run configuration: a small TOML subset with the sections
//   [ensemble] [testfunction] [experiment] [quadrature] [output]
// Values are numbers, booleans, "strings" or flat [arrays] of numbers.
// '#' starts a comment. Unknown sections and keys are hard errors.

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "fiilab/ensemble.hpp"
#include "fiilab/error.hpp"
#include "fiilab/mcstats.hpp"
#include "fiilab/quadrature.hpp"
#include "fiilab/semicircle.hpp"
#include "fiilab/testfunc.hpp"

namespace fiilab {

// Shortest decimal text that parses back to the same double.
inline std::string repr(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, r.ptr);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

struct RunConfig {
  // [ensemble]
  std::size_t n = 1000;
  double p = 0.05;
  double tau = 0.1;  // regime parameter
  bool include_diagonal = true;

  // [testfunction]
  std::string kind = "bump";  // bump | zero_c4
  std::string profile = "mollifier";  // mollifier | plateau
  double flat = 0.5;       // plateau half-width (plateau profile only)
  double center = 0.0;
  double eta = 1.0;        // eta_star
  double amplitude = 1.0;
  double offset = 0.0;     // constant added to f
  double side_center = 1.5;  // zero_c4: side bumps at +-side_center
  double side_eta = 0.3;

  // [experiment]
  int replicas = 2000;
  std::string index_policy = "fixed";  // fixed | random
  std::size_t index = 0;
  u64 master_seed = 0;
  std::string standardization = "empirical_mean";  // theory | empirical_mean | empirical
  int workers = 1;
  int bootstrap = 1000;
  int hist_bins = 40;
  std::vector<double> eta_grid;  // sweep; empty = 12 log-spaced points
  int law_replicas = 20;
  std::vector<double> law_energies{0.0};
  std::vector<double> law_etas{1.0};

  // [quadrature]
  double alpha = 0.001;  // tau/100 when omitted
  double tol = 1e-9;
  int max_refinement = 3;
  double kernel_tol = 1e-4;

  // [output]
  std::string dir;  // empty: --out, then $FIILAB_OUT, then ./out
  std::string format = "both";  // json | csv | both

  EnsembleParams ensemble() const { return EnsembleParams(n, p, tau, include_diagonal); }

  Profile base_profile() const {
    if (profile == "mollifier") return Profile::mollifier();
    if (profile == "plateau") return Profile::plateau(flat);
    throw DomainError("unknown profile '" + profile + "'");
  }

  TestFunction test_function() const {
    TestFunction tf;
    if (kind == "bump")
      tf = TestFunction::bump(center, eta, base_profile(), amplitude);
    else if (kind == "zero_c4")
      tf = zero_c4_weight_function(eta, side_center, side_eta, base_profile()).scaled(amplitude);
    else if (kind == "zero")
      tf = TestFunction::constant(0.0);
    else
      throw DomainError("unknown testfunction kind '" + kind + "'");
    return tf + TestFunction::constant(offset);
  }

  QuadParams quad() const {
    QuadParams q;
    q.alpha = alpha;
    q.tol = tol;
    q.max_refinement = max_refinement;
    q.kernel_tol = kernel_tol;
    q.validate();
    return q;
  }

  ExperimentConfig experiment() const {
    ExperimentConfig e;
    e.params = ensemble();
    e.tf = test_function();
    e.replicas = replicas;
    if (index_policy == "fixed")
      e.index_policy = IndexPolicy::fixed;
    else if (index_policy == "random")
      e.index_policy = IndexPolicy::random;
    else
      throw DomainError("unknown index_policy '" + index_policy + "'");
    e.index = index;
    e.master_seed = master_seed;
    if (standardization == "theory")
      e.standardization = Standardization::theory;
    else if (standardization == "empirical_mean")
      e.standardization = Standardization::empirical_mean;
    else if (standardization == "empirical")
      e.standardization = Standardization::empirical;
    else
      throw DomainError("unknown standardization '" + standardization + "'");
    e.workers = workers;
    e.bootstrap = bootstrap;
    return e;
  }

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

struct RawValue {
  enum Kind { number, boolean, string, array } kind = number;
  std::string text;                // number / boolean / unquoted string
  std::vector<std::string> items;  // array elements
  int line = 0;
};

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Drops a '#' comment that is not inside a string.
inline std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s[k] == '"' && (k == 0 || s[k - 1] != '\\')) quoted = !quoted;
    if (s[k] == '#' && !quoted) return s.substr(0, k);
  }
  return s;
}

inline std::string unescape(const std::string& body, int line, const std::string& key) {
  std::string out;
  for (std::size_t k = 0; k < body.size(); ++k) {
    if (body[k] != '\\') {
      out += body[k];
      continue;
    }
    if (++k == body.size()) throw ConfigError("dangling escape", line, key);
    switch (body[k]) {
      case '\\': out += '\\'; break;
      case '"': out += '"'; break;
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      default: throw ConfigError("unsupported escape", line, key);
    }
  }
  return out;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '\\' || c == '"') out += '\\';
    if (c == '\n') { out += "\\n"; continue; }
    if (c == '\t') { out += "\\t"; continue; }
    out += c;
  }
  return out;
}

inline RawValue parse_value(const std::string& v, int line, const std::string& key) {
  RawValue out;
  out.line = line;
  if (v.empty()) throw ConfigError("missing value", line, key);
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') throw ConfigError("unterminated string", line, key);
    out.kind = RawValue::string;
    out.text = unescape(v.substr(1, v.size() - 2), line, key);
  } else if (v.front() == '[') {
    if (v.back() != ']') throw ConfigError("unterminated array", line, key);
    out.kind = RawValue::array;
    std::stringstream ss(v.substr(1, v.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.items.push_back(item);
    }
  } else if (v == "true" || v == "false") {
    out.kind = RawValue::boolean;
    out.text = v;
  } else {
    out.kind = RawValue::number;
    out.text = v;
  }
  return out;
}

inline double to_double(const std::string& s, int line, const std::string& key) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end)
    throw ConfigError("expected a number, got '" + s + "'", line, key);
  return v;
}

inline u64 to_u64(const std::string& s, int line, const std::string& key) {
  u64 v = 0;
  const char* end = s.data() + s.size();
  auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end)
    throw ConfigError("expected a non-negative integer, got '" + s + "'", line, key);
  return v;
}

}  // namespace detail

// Binds every documented key to a RunConfig field.
class ConfigSchema {
 public:
  using Setter = std::function<void(RunConfig&, const detail::RawValue&, const std::string&)>;
  using Getter = std::function<std::string(const RunConfig&)>;
  struct Field {
    std::string key;
    Setter set;
    Getter get;
  };

  static const ConfigSchema& instance() {
    static const ConfigSchema s;
    return s;
  }

  const std::vector<std::pair<std::string, std::vector<Field>>>& sections() const {
    return sections_;
  }

  const Field* find(const std::string& section, const std::string& key) const {
    for (const auto& [name, fields] : sections_)
      if (name == section)
        for (const auto& f : fields)
          if (f.key == key) return &f;
    return nullptr;
  }
  bool has_section(const std::string& section) const {
    for (const auto& s : sections_)
      if (s.first == section) return true;
    return false;
  }

 private:
  template <class T>
  static Field real(const std::string& key, T RunConfig::*m) {
    return {key,
            [m](RunConfig& c, const detail::RawValue& v, const std::string& k) {
              if (v.kind != detail::RawValue::number) throw ConfigError("expected a number", v.line, k);
              c.*m = detail::to_double(v.text, v.line, k);
            },
            [m](const RunConfig& c) { return repr(c.*m); }};
  }
  template <class T>
  static Field integer(const std::string& key, T RunConfig::*m) {
    return {key,
            [m](RunConfig& c, const detail::RawValue& v, const std::string& k) {
              if (v.kind != detail::RawValue::number) throw ConfigError("expected an integer", v.line, k);
              const u64 x = detail::to_u64(v.text, v.line, k);
              if (x > static_cast<u64>(std::numeric_limits<T>::max()))
                throw ConfigError("integer out of range", v.line, k);
              c.*m = static_cast<T>(x);
            },
            [m](const RunConfig& c) { return std::to_string(c.*m); }};
  }
  static Field boolean(const std::string& key, bool RunConfig::*m) {
    return {key,
            [m](RunConfig& c, const detail::RawValue& v, const std::string& k) {
              if (v.kind != detail::RawValue::boolean) throw ConfigError("expected true or false", v.line, k);
              c.*m = v.text == "true";
            },
            [m](const RunConfig& c) { return std::string(c.*m ? "true" : "false"); }};
  }
  static Field text(const std::string& key, std::string RunConfig::*m,
                    std::set<std::string> allowed = {}) {
    return {key,
            [m, allowed](RunConfig& c, const detail::RawValue& v, const std::string& k) {
              if (v.kind != detail::RawValue::string) throw ConfigError("expected a quoted string", v.line, k);
              if (!allowed.empty() && !allowed.count(v.text))
                throw ConfigError("invalid value '" + v.text + "'", v.line, k);
              c.*m = v.text;
            },
            [m](const RunConfig& c) { return "\"" + detail::escape(c.*m) + "\""; }};
  }
  static Field list(const std::string& key, std::vector<double> RunConfig::*m) {
    return {key,
            [m](RunConfig& c, const detail::RawValue& v, const std::string& k) {
              if (v.kind != detail::RawValue::array) throw ConfigError("expected an array", v.line, k);
              std::vector<double> out;
              for (const auto& it : v.items) out.push_back(detail::to_double(it, v.line, k));
              c.*m = std::move(out);
            },
            [m](const RunConfig& c) {
              std::string s = "[";
              for (std::size_t k = 0; k < (c.*m).size(); ++k)
                s += (k ? ", " : "") + repr((c.*m)[k]);
              return s + "]";
            }};
  }

  ConfigSchema() {
    using C = RunConfig;
    sections_ = {
        {"ensemble",
         {integer("n", &C::n), real("p", &C::p), real("tau", &C::tau),
          boolean("include_diagonal", &C::include_diagonal)}},
        {"testfunction",
         {text("kind", &C::kind, {"bump", "zero_c4", "zero"}),
          text("profile", &C::profile, {"mollifier", "plateau"}), real("flat", &C::flat),
          real("center", &C::center), real("eta", &C::eta), real("amplitude", &C::amplitude),
          real("offset", &C::offset), real("side_center", &C::side_center),
          real("side_eta", &C::side_eta)}},
        {"experiment",
         {integer("replicas", &C::replicas),
          text("index_policy", &C::index_policy, {"fixed", "random"}),
          integer("index", &C::index), integer("master_seed", &C::master_seed),
          text("standardization", &C::standardization, {"theory", "empirical_mean", "empirical"}),
          integer("workers", &C::workers), integer("bootstrap", &C::bootstrap),
          integer("hist_bins", &C::hist_bins), list("eta_grid", &C::eta_grid),
          integer("law_replicas", &C::law_replicas), list("law_energies", &C::law_energies),
          list("law_etas", &C::law_etas)}},
        {"quadrature",
         {real("alpha", &C::alpha), real("tol", &C::tol),
          integer("max_refinement", &C::max_refinement), real("kernel_tol", &C::kernel_tol)}},
        {"output", {text("dir", &C::dir), text("format", &C::format, {"json", "csv", "both"})}},
    };
  }

  std::vector<std::pair<std::string, std::vector<Field>>> sections_;
};

inline RunConfig parse_config(const std::string& text) {
  const auto& schema = ConfigSchema::instance();
  RunConfig cfg;
  std::string section;
  std::set<std::string> seen;
  bool alpha_given = false;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = detail::trim(detail::strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("malformed section header", line);
      section = detail::trim(s.substr(1, s.size() - 2));
      if (!schema.has_section(section)) throw ConfigError("unknown section [" + section + "]", line, section);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value", line);
    const std::string key = detail::trim(s.substr(0, eq));
    if (section.empty()) throw ConfigError("key outside any section", line, key);
    const std::string full = section + "." + key;
    const auto* field = schema.find(section, key);
    if (!field) throw ConfigError("unknown key '" + full + "'", line, full);
    if (!seen.insert(full).second) throw ConfigError("duplicate key '" + full + "'", line, full);
    field->set(cfg, detail::parse_value(detail::trim(s.substr(eq + 1)), line, full), full);
    if (full == "quadrature.alpha") alpha_given = true;
  }
  if (!alpha_given) cfg.alpha = cfg.tau / 100.0;
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

// Canonical text; parse_config(to_toml(c)) == c.
inline std::string to_toml(const RunConfig& cfg) {
  std::string out;
  for (const auto& [name, fields] : ConfigSchema::instance().sections()) {
    if (!out.empty()) out += "\n";
    out += "[" + name + "]\n";
    for (const auto& f : fields) out += f.key + " = " + f.get(cfg) + "\n";
  }
  return out;
}

}  // namespace fiilab
