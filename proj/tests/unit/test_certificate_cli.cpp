#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <systola/systola.hpp>

using namespace systola;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch_dir() {
  const fs::path d = fs::temp_directory_path() / "systola_unit";
  fs::create_directories(d);
  return d;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SYSTOLA_CLI) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string sample(const char* name) { return std::string(SYSTOLA_SAMPLES) + "/" + name; }

RunCertificate awkward_certificate() {
  RunCertificate c;
  c.command = "systole";
  BodySpec b;
  b.type = "perturbed_ellipsoid";
  b.a = {1.0, std::sqrt(2.0)};
  b.delta = 0.05;
  b.bump_center = {0.3, 0.2, 0.3, 0.1};
  b.bump_width = 0.3;
  c.body = b;
  c.parameters.eta = 2.1213203435596424;
  c.parameters.seed = 18446744073709551615ull;
  c.systole = 1.0 / 3.0;
  OrbitEntry o;
  o.action = 0.1 + 0.2;
  o.level = 1e-300;
  o.cz = 3;
  o.self_linking = -1;
  o.nondegenerate = true;
  o.source = "dual";
  c.orbits = {o};
  c.systole_orbit = o;
  c.oracle_systole = 1.0 - 1e-16;
  c.oracle_delta = 5e-324;
  c.suite = {{1, "x", true, true, "detail with \"quotes\""}};
  c.payload["values"] = json::array({1.0, 2.5e-17, -0.0, 123456789.125});
  c.diagnostics = {"line\nbreak"};
  return c;
}

}  // namespace

TEST(Certificate, RoundTripIsBitExact) {
  const RunCertificate c = awkward_certificate();
  const std::string text = serialize(c);
  const RunCertificate d = parse_certificate(text);
  EXPECT_EQ(serialize(d), text);
  EXPECT_EQ(*d.systole, *c.systole);
  EXPECT_EQ(d.orbits[0].action, c.orbits[0].action);
  EXPECT_EQ(d.orbits[0].level, c.orbits[0].level);
  EXPECT_EQ(d.oracle_delta, c.oracle_delta);
  EXPECT_EQ(d.parameters.seed, c.parameters.seed);
  EXPECT_EQ(d.body->bump_center, c.body->bump_center);
  EXPECT_NE(text.find("\"schema_version\": 1"), std::string::npos);
  EXPECT_EQ(text.find("timings"), std::string::npos);
}

TEST(Certificate, FloatsCarrySeventeenDigits) {
  json j;
  j["x"] = 0.1;
  j["y"] = 2.0;
  EXPECT_EQ(dump_json(j, 0), "{\"x\":0.10000000000000001,\"y\":2.0}");
}

TEST(Certificate, BodySpecSchema) {
  const BodySpec s = body_spec_from_json(json::parse(R"({"type": "ball", "a": 1.5})"));
  EXPECT_EQ(s.type, "ball");
  EXPECT_EQ(s.a, std::vector<double>{1.5});
  EXPECT_NEAR(make_body(s).inradius_bound, std::sqrt(1.5 / kPi), 1e-12);
  const BodySpec p = body_spec_from_json(json::parse(R"({"type": "smoothed_polydisk", "a": 1, "b": 1.5, "epsilon": 0.02})"));
  EXPECT_EQ(p.b, 1.5);
  for (const char* bad : {R"([1,2])", R"({"a": [1]})", R"({"type": "ellipsoid"})", R"({"type": "ellipsoid", "a": "x"})",
                          R"({"type": "smoothed_polydisk", "a": 1, "b": 2})"}) {
    try {
      body_spec_from_json(json::parse(bad));
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Usage) << bad;
    }
  }
  for (const char* f : {"ellipsoid.json", "ball.json", "polydisk.json", "perturbed.json"})
    EXPECT_NO_THROW(make_body(load_body_spec(sample(f)))) << f;
}

TEST(Cli, SystoleCertificateForEllipsoid) {
  const fs::path out = scratch_dir() / "systole.json";
  ASSERT_EQ(run_cli("systole --body " + sample("ellipsoid.json") + " --out " + out.string()), 0);
  const RunCertificate c = parse_certificate(read_file(out));
  ASSERT_TRUE(c.systole.has_value());
  EXPECT_NEAR(*c.systole, 1.0, 1e-6);
  ASSERT_TRUE(c.systole_orbit.has_value());
  EXPECT_EQ(c.systole_orbit->cz, 3);
  EXPECT_EQ(c.systole_orbit->self_linking, -1);
  EXPECT_EQ(c.status, "ok");
  // Same inputs, same bytes.
  const fs::path again = scratch_dir() / "systole2.json";
  ASSERT_EQ(run_cli("systole --body " + sample("ellipsoid.json") + " --out " + again.string()), 0);
  EXPECT_EQ(read_file(out), read_file(again));
}

TEST(Cli, ExitCodes) {
  const fs::path out = scratch_dir() / "resonance.json";
  EXPECT_EQ(run_cli("systole --body " + sample("ellipsoid.json") + " --eta 1.0 --out " + out.string()), 1);
  const RunCertificate c = parse_certificate(read_file(out));
  EXPECT_EQ(c.status, "error");
  EXPECT_NE(c.error.find("resonance"), std::string::npos);

  const fs::path bad = scratch_dir() / "bad.json";
  std::ofstream(bad) << R"({"type": "ellipsoid", "a": "wide"})";
  EXPECT_EQ(run_cli("systole --body " + bad.string()), 2);
  std::ofstream(bad) << R"({"type": "cube", "a": [1]})";
  EXPECT_EQ(run_cli("systole --body " + bad.string()), 2);
  EXPECT_EQ(run_cli("systole --body /nonexistent/body.json"), 2);
  EXPECT_EQ(run_cli("systole --order -3"), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("validate --suite medium"), 2);
}

TEST(Cli, SpectrumCsvAndLinking) {
  const fs::path csv = scratch_dir() / "spec.csv";
  const fs::path out = scratch_dir() / "spec.json";
  ASSERT_EQ(run_cli("spectrum --body " + sample("ellipsoid.json") + " --lo -10 --hi 10 --csv " + csv.string() +
                    " --out " + out.string()),
            0);
  const std::string text = read_file(csv);
  EXPECT_EQ(text.substr(0, text.find('\n')), "eigenvalue,multiplicity,winding");
  const fs::path lk = scratch_dir() / "link.json";
  ASSERT_EQ(run_cli("link --body " + sample("ellipsoid.json") + " --eta 1.5 --out " + lk.string()), 0);
  const RunCertificate c = parse_certificate(read_file(lk));
  EXPECT_EQ(c.payload.at("linking_matrix")[0][1].get<int>(), 1);
}
