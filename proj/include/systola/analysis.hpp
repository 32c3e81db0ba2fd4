#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "capacity.hpp"
#include "certificate.hpp"
#include "cz.hpp"
#include "knots.hpp"
#include "reeb.hpp"

namespace systola {

// CZ (transverse, n = 2) and self-linking of a closed Reeb orbit. Degenerate
// orbits get no CZ; their bracket is reported through the diagnostics.
inline OrbitEntry analyze_orbit(const ConvexBody& body, const ClosedOrbit& orbit, bool with_self_linking,
                                std::vector<std::string>* diag = nullptr) {
  OrbitEntry e;
  e.action = orbit.action;
  e.level = orbit.level;
  e.nondegenerate = orbit.nondegenerate;
  e.degenerate_family = orbit.degenerate_family;
  e.covering = orbit.covering_multiplicity;
  e.source = "shooting";
  if (body.dim_n == 2) {
    try {
      const AsymptoticOperator A = transverse_linearization(body, orbit);
      if (orbit.nondegenerate) {
        e.cz = conley_zehnder(A).cz;
      } else if (diag) {
        const auto br = conley_zehnder_bracket(A);
        diag->push_back("orbit of action " + std::to_string(orbit.action) + ": degenerate, CZ bracket (" +
                        std::to_string(br.first) + ", " + std::to_string(br.second) + ")");
      }
    } catch (const Error& err) {
      if (diag) diag->push_back(std::string("CZ unavailable: ") + err.what());
    }
    if (with_self_linking && orbit.covering_multiplicity == 1) {
      try {
        e.self_linking = self_linking(body, orbit).value;
      } catch (const Error& err) {
        if (diag) diag->push_back(std::string("self-linking unavailable: ") + err.what());
      }
    }
  }
  return e;
}

inline OrbitEntry entry_from_dual(const DualCriticalPoint& p) {
  OrbitEntry e;
  e.action = p.orbit ? p.orbit->action : p.reeb_action;
  e.level = p.level;
  e.cz = p.cz;
  e.nondegenerate = p.orbit && p.orbit->nondegenerate;
  e.degenerate_family = p.orbit && p.orbit->degenerate_family;
  e.covering = p.orbit ? p.orbit->covering_multiplicity : 1;
  e.morse_index = p.morse_index;
  e.nullity = p.nullity;
  e.source = "dual";
  return e;
}

// Certificate for a systole run; self-linking is added for the systole orbit.
inline RunCertificate systole_certificate(const BodySpec& spec, const SystoleResult& r, const SystoleOptions& opt,
                                          bool timings) {
  RunCertificate c;
  c.command = "systole";
  c.body = spec;
  c.parameters.eta = r.eta;
  c.parameters.order = r.order;
  c.parameters.tail = r.tail;
  c.parameters.seed = opt.dual.seed;
  c.parameters.criticality_tol = opt.dual.criticality_tol;
  c.parameters.nullity_tol = opt.dual.nullity_tol;
  c.parameters.oracle_tol = opt.oracle_tol;
  c.parameters.tol_action = opt.tol_action;
  c.parameters.convexify = r.convexified ? r.convexify_delta : 0.0;
  for (const auto& p : r.points) {
    if (p.constant || p.spurious || !p.orbit || !(p.orbit->action < r.eta)) continue;
    bool dup = false;
    for (const auto& o : c.orbits)
      if (std::abs(o.action - p.orbit->action) < 10 * opt.tol_action * std::max(1.0, o.action)) dup = true;
    if (!dup) c.orbits.push_back(entry_from_dual(p));
  }
  std::sort(c.orbits.begin(), c.orbits.end(), [](const OrbitEntry& a, const OrbitEntry& b) { return a.action < b.action; });
  c.systole = r.action;
  OrbitEntry so;
  for (const auto& o : c.orbits)
    if (std::abs(o.action - r.action) < 10 * opt.tol_action) {
      so = o;
      break;
    }
  if (r.body.dim_n == 2 && r.orbit.covering_multiplicity == 1) {
    try {
      so.self_linking = self_linking(r.body, r.orbit).value;
    } catch (const Error& e) {
      c.diagnostics.push_back(std::string("self-linking unavailable: ") + e.what());
    }
  }
  for (auto& o : c.orbits)
    if (std::abs(o.action - r.action) < 10 * opt.tol_action) o.self_linking = so.self_linking;
  c.systole_orbit = so;
  c.oracle_systole = r.oracle_action;
  c.oracle_delta = r.oracle_delta;
  c.spectrum_delta = r.spectrum_delta;
  json spec_list = json::array();
  for (double a : r.oracle_spectrum) spec_list.push_back(a);
  c.payload["oracle_spectrum"] = spec_list;
  c.payload["convexified"] = r.convexified;
  int seeded = 0;
  for (const auto& e : r.spectrum) seeded += e.seeded_confirmation ? 1 : 0;
  c.payload["seeded_confirmations"] = seeded;
  c.diagnostics.insert(c.diagnostics.end(), r.diagnostics.begin(), r.diagnostics.end());
  if (timings) {
    c.timings.emplace_back("dual_seconds", r.seconds_dual);
    c.timings.emplace_back("oracle_seconds", r.seconds_oracle);
  }
  return c;
}

}  // namespace systola
