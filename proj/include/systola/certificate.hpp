#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "body.hpp"
#include "error.hpp"

namespace systola {

using json = nlohmann::ordered_json;

// JSON text with every float written as %.17g, which round-trips doubles exactly.
inline void dump_json(const json& j, std::string& out, int indent, int depth = 0) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string pad0(static_cast<std::size_t>(indent * depth), ' ');
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) { out += "{}"; return; }
      out += "{";
      out += nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) { out += ","; out += nl; }
        first = false;
        out += pad + json(it.key()).dump() + (indent > 0 ? ": " : ":");
        dump_json(it.value(), out, indent, depth + 1);
      }
      out += nl + pad0 + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) { out += "[]"; return; }
      out += "[";
      out += nl;
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) { out += ","; out += nl; }
        out += pad;
        dump_json(j[i], out, indent, depth + 1);
      }
      out += nl + pad0 + "]";
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) { out += "null"; return; }
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      std::string s(buf);
      if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
      out += s;
      return;
    }
    default:
      out += j.dump();
  }
}

inline std::string dump_json(const json& j, int indent = 2) {
  std::string s;
  dump_json(j, s, indent);
  return s;
}

inline json body_spec_to_json(const BodySpec& s) {
  json j;
  j["type"] = s.type;
  if (s.type == "ball" || s.type == "smoothed_polydisk") j["a"] = s.a.empty() ? 0.0 : s.a[0];
  else j["a"] = s.a;
  if (s.type == "smoothed_polydisk") {
    j["b"] = s.b;
    j["epsilon"] = s.epsilon;
  }
  if (s.type == "perturbed_ellipsoid") {
    j["delta"] = s.delta;
    j["bump_center"] = s.bump_center;
    j["bump_width"] = s.bump_width;
  }
  if (s.convexify > 0) j["convexify"] = s.convexify;
  return j;
}

namespace detail {

inline double number_field(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorKind::Usage, std::string("body spec lacks field '") + key + "'");
  if (!j[key].is_number()) throw Error(ErrorKind::Usage, std::string("body spec field '") + key + "' must be a number");
  return j[key].get<double>();
}

inline std::vector<double> vector_field(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorKind::Usage, std::string("body spec lacks field '") + key + "'");
  const json& v = j[key];
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array() || v.empty()) throw Error(ErrorKind::Usage, std::string("field '") + key + "' must be a number list");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw Error(ErrorKind::Usage, std::string("field '") + key + "' must be a number list");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace detail

inline BodySpec body_spec_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Usage, "body spec must be a JSON object");
  if (!j.contains("type") || !j["type"].is_string()) throw Error(ErrorKind::Usage, "body spec needs a string 'type'");
  BodySpec s;
  s.type = j["type"].get<std::string>();
  if (s.type == "ellipsoid") {
    s.a = detail::vector_field(j, "a");
  } else if (s.type == "ball") {
    s.a = {detail::number_field(j, "a")};
  } else if (s.type == "smoothed_polydisk") {
    s.a = {detail::number_field(j, "a")};
    s.b = detail::number_field(j, "b");
    s.epsilon = detail::number_field(j, "epsilon");
  } else if (s.type == "perturbed_ellipsoid") {
    s.a = detail::vector_field(j, "a");
    s.delta = detail::number_field(j, "delta");
    s.bump_center = detail::vector_field(j, "bump_center");
    s.bump_width = detail::number_field(j, "bump_width");
  } else {
    throw Error(ErrorKind::Usage, "unknown body type '" + s.type + "'");
  }
  if (j.contains("convexify")) s.convexify = detail::number_field(j, "convexify");
  return s;
}

inline BodySpec load_body_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Usage, "cannot open body file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Usage, "malformed JSON in '" + path + "': " + e.what());
  }
  return body_spec_from_json(j);
}

struct OrbitEntry {
  double action = 0.0;
  double level = 1.0;
  std::optional<int> cz;
  bool nondegenerate = false;
  bool degenerate_family = false;
  int covering = 1;
  std::optional<int> self_linking;
  std::optional<int> morse_index;
  std::optional<int> nullity;
  std::string source;  // dual | shooting
};

struct SuiteEntry {
  int id = 0;
  std::string name;
  bool pass = false;
  bool quick = true;
  std::string detail;
};

struct SolverParameters {
  double eta = 0.0;
  int order = 0;
  int tail = 0;
  int k_gal = 64;
  std::uint64_t seed = 1;
  double criticality_tol = 1e-9;
  double nullity_tol = 1e-6;
  double oracle_tol = 1e-5;
  double tol_action = 1e-6;
  double convexify = 0.0;
};

struct RunCertificate {
  int schema_version = 1;
  std::string command;
  std::optional<BodySpec> body;
  SolverParameters parameters;
  std::vector<OrbitEntry> orbits;
  std::optional<double> systole;
  std::optional<OrbitEntry> systole_orbit;
  std::optional<double> oracle_systole;
  double oracle_delta = 0.0;
  double spectrum_delta = 0.0;
  std::vector<SuiteEntry> suite;
  json payload = json::object();  // command-specific results
  std::vector<std::string> diagnostics;
  std::vector<std::pair<std::string, double>> timings;  // only when requested
  std::string status = "ok";
  std::string error;
};

inline json orbit_to_json(const OrbitEntry& o) {
  json j;
  j["action"] = o.action;
  j["level"] = o.level;
  j["cz"] = o.cz ? json(*o.cz) : json(nullptr);
  j["nondegenerate"] = o.nondegenerate;
  j["degenerate_family"] = o.degenerate_family;
  j["covering"] = o.covering;
  j["self_linking"] = o.self_linking ? json(*o.self_linking) : json(nullptr);
  j["morse_index"] = o.morse_index ? json(*o.morse_index) : json(nullptr);
  j["nullity"] = o.nullity ? json(*o.nullity) : json(nullptr);
  j["source"] = o.source;
  return j;
}

inline std::optional<int> opt_int(const json& j, const char* k) {
  if (!j.contains(k) || j[k].is_null()) return std::nullopt;
  return j[k].get<int>();
}

inline OrbitEntry orbit_from_json(const json& j) {
  OrbitEntry o;
  o.action = j.at("action").get<double>();
  o.level = j.at("level").get<double>();
  o.cz = opt_int(j, "cz");
  o.nondegenerate = j.at("nondegenerate").get<bool>();
  o.degenerate_family = j.at("degenerate_family").get<bool>();
  o.covering = j.at("covering").get<int>();
  o.self_linking = opt_int(j, "self_linking");
  o.morse_index = opt_int(j, "morse_index");
  o.nullity = opt_int(j, "nullity");
  o.source = j.at("source").get<std::string>();
  return o;
}

inline json to_json(const RunCertificate& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["command"] = c.command;
  j["status"] = c.status;
  if (!c.error.empty()) j["error"] = c.error;
  j["body"] = c.body ? body_spec_to_json(*c.body) : json(nullptr);
  const auto& p = c.parameters;
  j["parameters"] = {{"eta", p.eta},
                     {"order", p.order},
                     {"tail", p.tail},
                     {"k_gal", p.k_gal},
                     {"seed", p.seed},
                     {"criticality_tol", p.criticality_tol},
                     {"nullity_tol", p.nullity_tol},
                     {"oracle_tol", p.oracle_tol},
                     {"tol_action", p.tol_action},
                     {"convexify", p.convexify}};
  j["systole"] = c.systole ? json(*c.systole) : json(nullptr);
  j["systole_orbit"] = c.systole_orbit ? orbit_to_json(*c.systole_orbit) : json(nullptr);
  j["oracle"] = {{"systole", c.oracle_systole ? json(*c.oracle_systole) : json(nullptr)},
                 {"delta", c.oracle_delta},
                 {"spectrum_delta", c.spectrum_delta}};
  json orbs = json::array();
  for (const auto& o : c.orbits) orbs.push_back(orbit_to_json(o));
  j["orbits"] = orbs;
  json suite = json::array();
  for (const auto& s : c.suite)
    suite.push_back({{"id", s.id}, {"name", s.name}, {"pass", s.pass}, {"quick", s.quick}, {"detail", s.detail}});
  j["suite"] = suite;
  j["payload"] = c.payload;
  j["diagnostics"] = c.diagnostics;
  if (!c.timings.empty()) {
    json t = json::object();
    for (const auto& [k, v] : c.timings) t[k] = v;
    j["timings"] = t;
  }
  return j;
}

inline RunCertificate certificate_from_json(const json& j) {
  RunCertificate c;
  c.schema_version = j.at("schema_version").get<int>();
  if (c.schema_version != 1) throw Error(ErrorKind::Usage, "unsupported certificate schema version");
  c.command = j.at("command").get<std::string>();
  c.status = j.at("status").get<std::string>();
  if (j.contains("error")) c.error = j["error"].get<std::string>();
  if (!j.at("body").is_null()) c.body = body_spec_from_json(j["body"]);
  const json& p = j.at("parameters");
  c.parameters.eta = p.at("eta").get<double>();
  c.parameters.order = p.at("order").get<int>();
  c.parameters.tail = p.at("tail").get<int>();
  c.parameters.k_gal = p.at("k_gal").get<int>();
  c.parameters.seed = p.at("seed").get<std::uint64_t>();
  c.parameters.criticality_tol = p.at("criticality_tol").get<double>();
  c.parameters.nullity_tol = p.at("nullity_tol").get<double>();
  c.parameters.oracle_tol = p.at("oracle_tol").get<double>();
  c.parameters.tol_action = p.at("tol_action").get<double>();
  c.parameters.convexify = p.at("convexify").get<double>();
  if (!j.at("systole").is_null()) c.systole = j["systole"].get<double>();
  if (!j.at("systole_orbit").is_null()) c.systole_orbit = orbit_from_json(j["systole_orbit"]);
  const json& o = j.at("oracle");
  if (!o.at("systole").is_null()) c.oracle_systole = o["systole"].get<double>();
  c.oracle_delta = o.at("delta").get<double>();
  c.spectrum_delta = o.at("spectrum_delta").get<double>();
  for (const auto& x : j.at("orbits")) c.orbits.push_back(orbit_from_json(x));
  for (const auto& s : j.at("suite"))
    c.suite.push_back({s.at("id").get<int>(), s.at("name").get<std::string>(), s.at("pass").get<bool>(),
                       s.at("quick").get<bool>(), s.at("detail").get<std::string>()});
  c.payload = j.at("payload");
  c.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
  if (j.contains("timings"))
    for (auto it = j["timings"].begin(); it != j["timings"].end(); ++it)
      c.timings.emplace_back(it.key(), it.value().get<double>());
  return c;
}

inline std::string serialize(const RunCertificate& c) { return dump_json(to_json(c)) + "\n"; }

inline RunCertificate parse_certificate(const std::string& text) {
  try {
    return certificate_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Usage, std::string("malformed certificate: ") + e.what());
  }
}

}  // namespace systola
