#pragma once

/// JSON scenario configuration and CSV trace output.
///
/// A scenario file fully describes one run of the tool chain: which kind of
/// system to build, the mode data for linear cascades, dwell-time settings,
/// simulation horizons, and output destinations.  Parsing is strict: unknown
/// keys anywhere in the document are rejected so that typos fail loudly
/// instead of silently falling back to defaults.

#include <json.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "swc/errors.hpp"
#include "swc/kfun.hpp"
#include "swc/linear.hpp"

namespace swc {

using nlohmann::json;

enum class ScenarioKind { linear_cascade, observer_loop, scalar_cascade };

inline const char* scenario_kind_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::linear_cascade: return "linear_cascade";
    case ScenarioKind::observer_loop: return "observer_loop";
    case ScenarioKind::scalar_cascade: return "scalar_cascade";
  }
  return "?";
}

inline ScenarioKind parse_scenario_kind(const std::string& s) {
  if (s == "linear_cascade") return ScenarioKind::linear_cascade;
  if (s == "observer_loop") return ScenarioKind::observer_loop;
  if (s == "scalar_cascade") return ScenarioKind::scalar_cascade;
  throw ConfigError("unknown scenario kind \"" + s +
                    "\" (expected linear_cascade, observer_loop or scalar_cascade)");
}

struct CertificateSettings {
  std::string type;  // "auto_linear" or "builtin"
};

struct AdtSettings {
  double tau_a = 0.0;  // 0 = derive from the certificate
  double N0 = 2.0;
};

struct SimSettings {
  double dt_base = 1e-3;
  double event_tol = 1e-9;
  double horizon_T = 0.0;  // 0 = scenario-dependent default
  long long horizon_J = 6000000;
  std::uint64_t seed = 12345;
};

struct ObserverSettings {
  double epsilon = 0.2;
  double eta0 = 1.0;
  std::vector<double> x0;  // empty = default initial plant state
};

struct OutputSettings {
  std::string dir = "out";
  std::vector<std::string> formats = {"csv"};
};

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::scalar_cascade;
  std::vector<LinearCascadeMode> modes;  // linear_cascade only
  std::vector<Eigen::MatrixXd> Q_c;      // aligned with modes; identity if absent
  std::vector<Eigen::MatrixXd> Q_o;
  CertificateSettings certificate;
  AdtSettings adt;
  SimSettings sim;
  ObserverSettings observer;
  OutputSettings output;
};

namespace detail {

/// Reject any key of `j` that is not in `allowed`; `where` names the object
/// in the error message.
inline void require_keys(const json& j, const std::string& where,
                         std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
  }
}

inline double get_num(const json& j, const char* key, const std::string& where,
                      double fallback, bool required = false) {
  if (!j.contains(key)) {
    if (required) throw ConfigError(where + " is missing required key \"" + key + "\"");
    return fallback;
  }
  if (!j[key].is_number())
    throw ConfigError(where + "." + key + " must be a number");
  return j[key].get<double>();
}

inline std::string get_str(const json& j, const char* key, const std::string& where,
                           const std::string& fallback, bool required = false) {
  if (!j.contains(key)) {
    if (required) throw ConfigError(where + " is missing required key \"" + key + "\"");
    return fallback;
  }
  if (!j[key].is_string())
    throw ConfigError(where + "." + key + " must be a string");
  return j[key].get<std::string>();
}

}  // namespace detail

/// Parse a rectangular JSON array-of-arrays into a matrix.
inline Eigen::MatrixXd parse_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty())
    throw ConfigError(where + " must be a non-empty array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  Eigen::MatrixXd m;
  for (std::size_t r = 0; r < rows; ++r) {
    const json& row = j[r];
    if (!row.is_array() || row.empty())
      throw ConfigError(where + " row " + std::to_string(r) + " must be a non-empty array");
    if (r == 0) {
      cols = row.size();
      m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    } else if (row.size() != cols) {
      throw ConfigError(where + " rows have inconsistent lengths");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number())
        throw ConfigError(where + "[" + std::to_string(r) + "][" + std::to_string(c) +
                          "] must be a number");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c].get<double>();
    }
  }
  return m;
}

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

/// Serialize the closed-form comparison-function shapes.  Structured trees
/// (minima, compositions, tabulations) intentionally do not round-trip
/// through configuration files; they are always rebuilt from mode data.
inline json kfun_to_json(const ComparisonFunction& f) {
  json j;
  switch (f.kind()) {
    case FnKind::power_law:
      j["kind"] = "power_law";
      j["a"] = f.param_a();
      j["k"] = f.param_k();
      break;
    case FnKind::linear:
      j["kind"] = "linear";
      j["a"] = f.param_a();
      break;
    case FnKind::constant:
      j["kind"] = "constant";
      j["c"] = f.param_c();
      break;
    default:
      throw ConfigError(std::string("kfun_to_json: shape \"") + fn_kind_name(f.kind()) +
                        "\" has no JSON form");
  }
  return j;
}

inline ComparisonFunction kfun_from_json(const json& j, const std::string& where) {
  const std::string kind = detail::get_str(j, "kind", where, "", true);
  if (kind == "power_law") {
    detail::require_keys(j, where, {"kind", "a", "k"});
    return ComparisonFunction::power_law(detail::get_num(j, "a", where, 0.0, true),
                                         detail::get_num(j, "k", where, 0.0, true));
  }
  if (kind == "linear") {
    detail::require_keys(j, where, {"kind", "a"});
    return ComparisonFunction::linear(detail::get_num(j, "a", where, 0.0, true));
  }
  if (kind == "constant") {
    detail::require_keys(j, where, {"kind", "c"});
    return ComparisonFunction::constant(detail::get_num(j, "c", where, 0.0, true));
  }
  throw ConfigError(where + ".kind \"" + kind +
                    "\" is not serializable (expected power_law, linear or constant)");
}

/// Parse a scenario document.  Every object is checked against a whitelist
/// of keys and every kind-specific constraint is enforced here, so a config
/// that parses is structurally ready to run.
inline ScenarioConfig parse_scenario(const json& j) {
  detail::require_keys(j, "config",
                       {"kind", "modes", "certificate", "adt", "sim", "observer", "output"});
  ScenarioConfig cfg;
  cfg.kind = parse_scenario_kind(detail::get_str(j, "kind", "config", "", true));

  const bool linear = cfg.kind == ScenarioKind::linear_cascade;
  if (j.contains("modes")) {
    if (!linear)
      throw ConfigError(std::string("\"modes\" is only valid for linear_cascade, not ") +
                        scenario_kind_name(cfg.kind));
    const json& modes = j["modes"];
    if (!modes.is_array() || modes.empty())
      throw ConfigError("config.modes must be a non-empty array");
    for (std::size_t p = 0; p < modes.size(); ++p) {
      const std::string where = "config.modes[" + std::to_string(p) + "]";
      detail::require_keys(modes[p], where, {"A", "B", "F", "G", "Q_c", "Q_o"});
      LinearCascadeMode m;
      for (const char* key : {"A", "B", "F", "G"})
        if (!modes[p].contains(key))
          throw ConfigError(where + " is missing required matrix \"" + key + "\"");
      m.A = parse_matrix(modes[p]["A"], where + ".A");
      m.B = parse_matrix(modes[p]["B"], where + ".B");
      m.F = parse_matrix(modes[p]["F"], where + ".F");
      m.G = parse_matrix(modes[p]["G"], where + ".G");
      if (m.A.rows() != m.A.cols()) throw ConfigError(where + ".A must be square");
      if (m.F.rows() != m.F.cols()) throw ConfigError(where + ".F must be square");
      if (m.B.rows() != m.A.rows() || m.B.cols() != m.F.rows())
        throw ConfigError(where + ".B must map the observer error into the controlled state");
      if (m.G.rows() != m.F.rows())
        throw ConfigError(where + ".G must have as many rows as F");
      Eigen::MatrixXd Qc = Eigen::MatrixXd::Identity(m.A.rows(), m.A.rows());
      Eigen::MatrixXd Qo = Eigen::MatrixXd::Identity(m.F.rows(), m.F.rows());
      if (modes[p].contains("Q_c")) Qc = parse_matrix(modes[p]["Q_c"], where + ".Q_c");
      if (modes[p].contains("Q_o")) Qo = parse_matrix(modes[p]["Q_o"], where + ".Q_o");
      if (Qc.rows() != m.A.rows() || Qc.cols() != m.A.rows())
        throw ConfigError(where + ".Q_c has the wrong shape");
      if (Qo.rows() != m.F.rows() || Qo.cols() != m.F.rows())
        throw ConfigError(where + ".Q_o has the wrong shape");
      cfg.modes.push_back(std::move(m));
      cfg.Q_c.push_back(std::move(Qc));
      cfg.Q_o.push_back(std::move(Qo));
    }
    const Eigen::Index nx = cfg.modes.front().A.rows();
    const Eigen::Index ne = cfg.modes.front().F.rows();
    const Eigen::Index nd = cfg.modes.front().G.cols();
    for (std::size_t p = 1; p < cfg.modes.size(); ++p)
      if (cfg.modes[p].A.rows() != nx || cfg.modes[p].F.rows() != ne ||
          cfg.modes[p].G.cols() != nd)
        throw ConfigError("config.modes must share state/error/disturbance dimensions");
  } else if (linear) {
    throw ConfigError("linear_cascade config requires a \"modes\" array");
  }

  if (j.contains("certificate")) {
    detail::require_keys(j["certificate"], "config.certificate", {"type"});
    cfg.certificate.type =
        detail::get_str(j["certificate"], "type", "config.certificate", "", true);
  } else {
    cfg.certificate.type = linear ? "auto_linear" : "builtin";
  }
  if (cfg.certificate.type != "auto_linear" && cfg.certificate.type != "builtin")
    throw ConfigError("config.certificate.type must be \"auto_linear\" or \"builtin\"; "
                      "hand-written certificate functions are not accepted from JSON");
  if (linear && cfg.certificate.type != "auto_linear")
    throw ConfigError("linear_cascade has no builtin certificate; use \"auto_linear\"");
  if (!linear && cfg.certificate.type != "builtin")
    throw ConfigError(std::string(scenario_kind_name(cfg.kind)) +
                      " uses its builtin certificate; \"auto_linear\" only applies to "
                      "linear_cascade");

  if (j.contains("adt")) {
    detail::require_keys(j["adt"], "config.adt", {"tau_a", "N0"});
    cfg.adt.tau_a = detail::get_num(j["adt"], "tau_a", "config.adt", cfg.adt.tau_a);
    cfg.adt.N0 = detail::get_num(j["adt"], "N0", "config.adt", cfg.adt.N0);
    if (cfg.adt.tau_a < 0) throw ConfigError("config.adt.tau_a must be >= 0 (0 = derive)");
    if (cfg.adt.N0 < 1) throw ConfigError("config.adt.N0 must be >= 1");
  }

  if (j.contains("sim")) {
    const json& s = j["sim"];
    detail::require_keys(s, "config.sim",
                         {"dt_base", "event_tol", "horizon_T", "horizon_J", "seed"});
    cfg.sim.dt_base = detail::get_num(s, "dt_base", "config.sim", cfg.sim.dt_base);
    cfg.sim.event_tol = detail::get_num(s, "event_tol", "config.sim", cfg.sim.event_tol);
    cfg.sim.horizon_T = detail::get_num(s, "horizon_T", "config.sim", cfg.sim.horizon_T);
    cfg.sim.horizon_J = static_cast<long long>(
        detail::get_num(s, "horizon_J", "config.sim", double(cfg.sim.horizon_J)));
    cfg.sim.seed = static_cast<std::uint64_t>(
        detail::get_num(s, "seed", "config.sim", double(cfg.sim.seed)));
    if (cfg.sim.dt_base <= 0) throw ConfigError("config.sim.dt_base must be positive");
    if (cfg.sim.event_tol <= 0) throw ConfigError("config.sim.event_tol must be positive");
    if (cfg.sim.horizon_T < 0) throw ConfigError("config.sim.horizon_T must be >= 0");
    if (cfg.sim.horizon_J <= 0) throw ConfigError("config.sim.horizon_J must be positive");
  }

  if (j.contains("observer")) {
    if (cfg.kind != ScenarioKind::observer_loop)
      throw ConfigError("\"observer\" settings are only valid for observer_loop");
    const json& o = j["observer"];
    detail::require_keys(o, "config.observer", {"epsilon", "eta0", "x0"});
    cfg.observer.epsilon = detail::get_num(o, "epsilon", "config.observer", cfg.observer.epsilon);
    cfg.observer.eta0 = detail::get_num(o, "eta0", "config.observer", cfg.observer.eta0);
    if (o.contains("x0")) {
      if (!o["x0"].is_array()) throw ConfigError("config.observer.x0 must be an array");
      for (const auto& v : o["x0"]) {
        if (!v.is_number()) throw ConfigError("config.observer.x0 entries must be numbers");
        cfg.observer.x0.push_back(v.get<double>());
      }
    }
    if (!(cfg.observer.epsilon > 0 && cfg.observer.epsilon <= 1.0 / 3.0))
      throw ConfigError("config.observer.epsilon must lie in (0, 1/3]");
    if (cfg.observer.eta0 <= 0) throw ConfigError("config.observer.eta0 must be positive");
  }

  if (j.contains("output")) {
    const json& o = j["output"];
    detail::require_keys(o, "config.output", {"dir", "formats"});
    cfg.output.dir = detail::get_str(o, "dir", "config.output", cfg.output.dir);
    if (o.contains("formats")) {
      if (!o["formats"].is_array()) throw ConfigError("config.output.formats must be an array");
      cfg.output.formats.clear();
      for (const auto& f : o["formats"]) {
        if (!f.is_string()) throw ConfigError("config.output.formats entries must be strings");
        const std::string name = f.get<std::string>();
        if (name != "csv" && name != "json")
          throw ConfigError("config.output.formats supports \"csv\" and \"json\", got \"" +
                            name + "\"");
        cfg.output.formats.push_back(name);
      }
    }
  }
  return cfg;
}

inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  return parse_scenario(j);
}

/// Streaming CSV writer emitting 17 significant digits, enough to
/// reconstruct every double exactly.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns)
      : out_(path), ncols_(columns.size()) {
    if (!out_) throw ConfigError("cannot open output file " + path);
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) out_ << ',';
      out_ << columns[i];
    }
    out_ << '\n';
  }

  void row(const std::vector<double>& values) {
    if (values.size() != ncols_)
      throw ConfigError("CSV row has " + std::to_string(values.size()) + " fields, expected " +
                        std::to_string(ncols_));
    char buf[40];
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out_ << ',';
      std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
      out_ << buf;
    }
    out_ << '\n';
  }

  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
  std::size_t ncols_;
};

}  // namespace swc
