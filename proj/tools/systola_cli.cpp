#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <systola/systola.hpp>

namespace {

using namespace systola;

constexpr int kExitOk = 0;
constexpr int kExitNumerical = 1;
constexpr int kExitUsage = 2;

struct Config {
  std::string body_path;
  double eta = 0.0;
  int order = 8;
  int tail = 0;
  std::uint64_t seed = 1;
  std::string out;
  double tol_action = 1e-6;
  bool timings = false;
  // subcommand specific
  std::string csv;
  int k_gal = 64;
  double lo = -20.0, hi = 20.0;
  int orbit = 0;
  int directions = 24;
  double split_epsilon = 1e-3;
  std::string suite = "quick";
};

struct Loaded {
  BodySpec spec;
  ConvexBody body;
};

Loaded load_body(const Config& cfg) {
  if (cfg.body_path.empty()) throw Error(ErrorKind::Usage, "--body is required for this command");
  Loaded l;
  l.spec = load_body_spec(cfg.body_path);
  try {
    l.body = make_body(l.spec);
  } catch (const Error& e) {
    // Invalid parameters in the file are a configuration problem.
    throw Error(ErrorKind::Usage, std::string("invalid body: ") + e.what());
  }
  return l;
}

void fill_parameters(RunCertificate& c, const Config& cfg) {
  c.parameters.eta = cfg.eta;
  c.parameters.order = cfg.order;
  c.parameters.tail = cfg.tail;
  c.parameters.k_gal = cfg.k_gal;
  c.parameters.seed = cfg.seed;
  c.parameters.tol_action = cfg.tol_action;
}

SystoleOptions systole_options(const Config& cfg) {
  SystoleOptions o;
  o.eta = cfg.eta;
  o.dual.order = cfg.order;
  o.dual.tail = cfg.tail;
  o.dual.seed = cfg.seed;
  o.tol_action = cfg.tol_action;
  o.shooting.seed = cfg.seed;
  o.shooting.action_tol = cfg.tol_action;
  return o;
}

double orbit_cutoff(const Config& cfg, const ConvexBody& body) { return cfg.eta > 0 ? cfg.eta : default_eta(body); }

OrbitSearchResult shooting_orbits(const Config& cfg, const ConvexBody& body) {
  OrbitSearchOptions o;
  o.seed = cfg.seed;
  o.action_tol = cfg.tol_action;
  OrbitSearchResult r = find_closed_orbits(body, orbit_cutoff(cfg, body), o);
  if (r.orbits.empty()) throw Error(ErrorKind::Convergence, "no closed orbit found below the cutoff");
  return r;
}

void emit(const RunCertificate& c, const Config& cfg) {
  const std::string text = serialize(c);
  if (cfg.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(cfg.out, std::ios::binary);
  if (!f) throw Error(ErrorKind::Usage, "cannot write '" + cfg.out + "'");
  f << text;
}

int run_systole(const Config& cfg, RunCertificate& c) {
  const Loaded l = load_body(cfg);
  const SystoleOptions opt = systole_options(cfg);
  const SystoleResult r = systole(l.body, opt);
  c = systole_certificate(l.spec, r, opt, cfg.timings);
  c.parameters.k_gal = cfg.k_gal;
  const auto& so = *c.systole_orbit;
  std::fprintf(stderr, "systole %.9f  CZ %s  sl %s  (N %d, K_tail %d, eta %.6g)\n", r.action,
               so.cz ? std::to_string(*so.cz).c_str() : "n/a",
               so.self_linking ? std::to_string(*so.self_linking).c_str() : "n/a", r.order, r.tail, r.eta);
  return kExitOk;
}

int run_orbits(const Config& cfg, RunCertificate& c) {
  const Loaded l = load_body(cfg);
  c.body = l.spec;
  fill_parameters(c, cfg);
  c.parameters.eta = orbit_cutoff(cfg, l.body);
  const OrbitSearchResult r = shooting_orbits(cfg, l.body);
  for (const auto& o : r.orbits) c.orbits.push_back(analyze_orbit(l.body, o, true, &c.diagnostics));
  c.diagnostics.insert(c.diagnostics.end(), r.warnings.begin(), r.warnings.end());
  c.systole = c.orbits.front().action;
  c.systole_orbit = c.orbits.front();
  for (const auto& o : c.orbits) std::fprintf(stderr, "orbit action %.9f%s\n", o.action, o.degenerate_family ? " (family)" : "");
  return kExitOk;
}

int run_cz(const Config& cfg, RunCertificate& c) {
  const Loaded l = load_body(cfg);
  c.body = l.spec;
  fill_parameters(c, cfg);
  c.parameters.eta = orbit_cutoff(cfg, l.body);
  const OrbitSearchResult r = shooting_orbits(cfg, l.body);
  json routes = json::array();
  bool agree = true;
  SpectrumOptions so;
  so.K_gal = cfg.k_gal;
  for (const auto& o : r.orbits) {
    OrbitEntry e = analyze_orbit(l.body, o, false, &c.diagnostics);
    const AsymptoticOperator A = transverse_linearization(l.body, o);
    json row;
    row["action"] = o.action;
    if (o.nondegenerate) {
      const int w = conley_zehnder(A, 0.0, so).cz;
      const int rot = conley_zehnder_rotation(A);
      const int cnt = conley_zehnder_count(A, cfg.k_gal);
      row["winding"] = w;
      row["rotation"] = rot;
      row["count"] = cnt;
      agree = agree && w == rot && w == cnt;
      e.cz = w;
    } else {
      const auto br = conley_zehnder_bracket(A, 1e-4, so);
      row["bracket"] = json::array({br.first, br.second});
    }
    routes.push_back(row);
    c.orbits.push_back(e);
    std::fprintf(stderr, "orbit %.9f  CZ %s\n", o.action, e.cz ? std::to_string(*e.cz).c_str() : "degenerate");
  }
  c.payload["routes"] = routes;
  c.payload["routes_agree"] = agree;
  if (!agree) {
    c.status = "failed";
    c.error = "CZ routes disagree";
    return kExitNumerical;
  }
  return kExitOk;
}

int run_spectrum(const Config& cfg, RunCertificate& c) {
  const Loaded l = load_body(cfg);
  c.body = l.spec;
  fill_parameters(c, cfg);
  const OrbitSearchResult r = shooting_orbits(cfg, l.body);
  if (cfg.orbit < 0 || cfg.orbit >= static_cast<int>(r.orbits.size()))
    throw Error(ErrorKind::Usage, "--orbit index out of range (" + std::to_string(r.orbits.size()) + " orbits found)");
  const ClosedOrbit& o = r.orbits[cfg.orbit];
  SpectrumOptions so;
  so.K_gal = cfg.k_gal;
  const SpectralData sd = operator_spectrum(transverse_linearization(l.body, o), cfg.lo, cfg.hi, so);
  c.orbits.push_back(analyze_orbit(l.body, o, false, &c.diagnostics));
  json ev = json::array(), mult = json::array(), wind = json::array();
  for (std::size_t i = 0; i < sd.eigenvalues.size(); ++i) {
    ev.push_back(sd.eigenvalues[i]);
    mult.push_back(sd.multiplicity[i]);
    if (i < sd.winding.size()) wind.push_back(sd.winding[i]);
  }
  c.payload["window"] = json::array({cfg.lo, cfg.hi});
  c.payload["eigenvalues"] = ev;
  c.payload["multiplicity"] = mult;
  c.payload["winding"] = wind;
  if (!cfg.csv.empty()) {
    std::ofstream f(cfg.csv);
    if (!f) throw Error(ErrorKind::Usage, "cannot write '" + cfg.csv + "'");
    f << spectrum_csv(sd);
  } else if (!cfg.out.empty()) {
    std::cout << spectrum_csv(sd);
  }
  return kExitOk;
}

int run_morse(const Config& cfg, RunCertificate& c) {
  const Loaded l = load_body(cfg);
  c.body = l.spec;
  fill_parameters(c, cfg);
  double eta = cfg.eta;
  if (!(eta > 0)) {
    // Between the two lowest actions, so only the systole circle lies below.
    const OrbitSearchResult r = shooting_orbits(cfg, l.body);
    double a1 = r.orbits.front().action, a2 = 2.0 * a1;
    for (const auto& o : r.orbits)
      if (o.action > a1 + 1e-4) {
        a2 = std::min(a2, o.action);
        break;
      }
    eta = 0.5 * (a1 + a2);
  }
  c.parameters.eta = eta;
  const SplitSetup s = split_systole_hamiltonian(l.body, eta, cfg.split_epsilon, cfg.order, cfg.seed);
  const int tail = cfg.tail > cfg.order ? cfg.tail : 4 * cfg.order;
  c.parameters.tail = tail;
  const DualProblem P(s.split, cfg.order, tail);
  DualOptions dopt;
  dopt.order = cfg.order;
  dopt.seed = cfg.seed;
  const CriticalSearchResult found = find_critical_points(P, dopt);
  MorseOptions mo;
  mo.seed = cfg.seed;
  mo.index2_directions = cfg.directions;
  const MorseComplexData data = build_complex(P, found.points, mo);
  const ComplexReport rep = verify_complex(data);

  json pts = json::array();
  for (const auto& p : found.points) {
    json j;
    j["value"] = p.dual_value;
    j["morse_index"] = p.morse_index;
    j["nullity"] = p.nullity;
    j["cz"] = p.cz ? json(*p.cz) : json(nullptr);
    j["constant"] = p.constant;
    pts.push_back(j);
    OrbitEntry e;
    e.action = p.hamiltonian_action;
    e.level = p.level;
    e.cz = p.cz;
    e.nondegenerate = p.nullity == 0;
    e.morse_index = p.morse_index;
    e.nullity = p.nullity;
    e.source = "dual-split";
    c.orbits.push_back(e);
  }
  json bd = json::object();
  for (const auto& [k, B] : data.boundary) bd[std::to_string(k)] = B;
  json hom = json::object();
  for (const auto& [k, h] : rep.homology) hom[std::to_string(k)] = {{"rank", h.rank}, {"torsion", h.torsion}};
  json fates = json::array();
  for (const auto& [p, f] : data.index1_fates)
    fates.push_back({{"point", p}, {"plus", to_string(f.first)}, {"minus", to_string(f.second)}});
  c.payload["critical_points"] = pts;
  c.payload["boundary"] = bd;
  c.payload["d_squared_zero"] = rep.d_squared_zero;
  c.payload["homology"] = hom;
  c.payload["index1_fates"] = fates;
  c.payload["metric_jitter"] = data.metric_jitter;
  for (const auto& f : data.failures) c.diagnostics.push_back(f);
  for (const auto& w : rep.witnesses) c.diagnostics.push_back(w);
  std::fprintf(stderr, "%zu critical points, d^2 = 0: %s\n", found.points.size(), rep.d_squared_zero ? "yes" : "no");
  if (!rep.ok() || !data.failures.empty()) {
    c.status = "failed";
    c.error = "Morse complex checks failed";
    return kExitNumerical;
  }
  return kExitOk;
}

int run_link(const Config& cfg, RunCertificate& c) {
  const Loaded l = load_body(cfg);
  c.body = l.spec;
  fill_parameters(c, cfg);
  c.parameters.eta = orbit_cutoff(cfg, l.body);
  const OrbitSearchResult r = shooting_orbits(cfg, l.body);
  std::vector<const ClosedOrbit*> simple;
  for (const auto& o : r.orbits) {
    c.orbits.push_back(analyze_orbit(l.body, o, true, &c.diagnostics));
    if (o.covering_multiplicity == 1) simple.push_back(&o);
  }
  json matrix = json::array();
  for (std::size_t i = 0; i < simple.size(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < simple.size(); ++j) row.push_back(i == j ? json(nullptr) : json(linking_number(*simple[i], *simple[j])));
    matrix.push_back(row);
  }
  json actions = json::array();
  for (const auto* o : simple) actions.push_back(o->action);
  c.payload["simple_orbit_actions"] = actions;
  c.payload["linking_matrix"] = matrix;
  return kExitOk;
}

int run_validate(const Config& cfg, RunCertificate& c) {
  ValidationOptions vo;
  vo.level = parse_suite_level(cfg.suite);
  vo.seed = cfg.seed;
  vo.on_result = [](const SuiteEntry& e, double) {
    std::fprintf(stderr, "[%s] %2d %s: %s\n", e.pass ? "pass" : "FAIL", e.id, e.name.c_str(), e.detail.c_str());
  };
  const ValidationReport rep = validate_suite(vo);
  c.parameters.seed = cfg.seed;
  c.suite = rep.entries;
  c.payload["suite"] = cfg.suite;
  if (cfg.timings)
    for (std::size_t i = 0; i < rep.entries.size(); ++i)
      c.timings.emplace_back("criterion_" + std::to_string(rep.entries[i].id), rep.seconds[i]);
  if (!rep.all_pass()) {
    c.status = "failed";
    c.error = "validation criteria failed";
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  Config cfg;
  CLI::App app{"Minimal-action closed characteristics of convex bodies in R^4"};
  app.require_subcommand(1);
  auto common = [&](CLI::App* s) {
    s->add_option("--body", cfg.body_path, "Body spec (JSON)");
    s->add_option("--eta", cfg.eta, "Action cutoff / Hamiltonian slope (0: automatic)");
    s->add_option("--order", cfg.order, "Low-mode order N")->check(CLI::PositiveNumber);
    s->add_option("--tail", cfg.tail, "Tail order K_tail (0: 4N)")->check(CLI::NonNegativeNumber);
    s->add_option("--seed", cfg.seed, "Random seed");
    s->add_option("--out", cfg.out, "Certificate path (default: stdout)");
    s->add_option("--tol-action", cfg.tol_action, "Action tolerance")->check(CLI::PositiveNumber);
    s->add_flag("--timings", cfg.timings, "Record wall-clock timings in the certificate");
  };
  auto* sys = app.add_subcommand("systole", "Minimal action via the dual functional, cross-checked by shooting");
  auto* orb = app.add_subcommand("orbits", "Closed orbits below the cutoff with CZ and self-linking");
  auto* cz = app.add_subcommand("cz", "Conley-Zehnder indices by three routes");
  auto* spec = app.add_subcommand("spectrum", "Spectrum of the asymptotic operator of an orbit");
  auto* mor = app.add_subcommand("morse", "Morse complex of the split systole Hamiltonian");
  auto* lnk = app.add_subcommand("link", "Linking numbers between simple orbits");
  auto* val = app.add_subcommand("validate", "Run the validation suite");
  for (auto* s : {sys, orb, cz, spec, mor, lnk, val}) common(s);
  for (auto* s : {cz, spec}) s->add_option("--k-gal", cfg.k_gal, "Galerkin modes")->check(CLI::PositiveNumber);
  spec->add_option("--csv", cfg.csv, "Write the spectrum as CSV");
  spec->add_option("--lo", cfg.lo, "Window lower end");
  spec->add_option("--hi", cfg.hi, "Window upper end");
  spec->add_option("--orbit", cfg.orbit, "Orbit position in action order");
  mor->add_option("--directions", cfg.directions, "Initial shooting directions per index-2 point")->check(CLI::PositiveNumber);
  mor->add_option("--epsilon", cfg.split_epsilon, "Splitting strength")->check(CLI::PositiveNumber);
  val->add_option("--suite", cfg.suite, "quick | full")->check(CLI::IsMember({"quick", "full"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  RunCertificate cert;
  const std::string command = app.get_subcommands().front()->get_name();
  cert.command = command;
  fill_parameters(cert, cfg);
  int code = kExitOk;
  try {
    if (command == "systole") code = run_systole(cfg, cert);
    else if (command == "orbits") code = run_orbits(cfg, cert);
    else if (command == "cz") code = run_cz(cfg, cert);
    else if (command == "spectrum") code = run_spectrum(cfg, cert);
    else if (command == "morse") code = run_morse(cfg, cert);
    else if (command == "link") code = run_link(cfg, cert);
    else code = run_validate(cfg, cert);
    cert.command = command;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    if (e.kind() == ErrorKind::Usage) return kExitUsage;
    cert.command = command;
    cert.status = "error";
    cert.error = e.what();
    code = kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    cert.status = "error";
    cert.error = e.what();
    code = kExitNumerical;
  }
  try {
    emit(cert, cfg);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return code;
}
