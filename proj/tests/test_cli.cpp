#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "funcdet/cli.hpp"

using funcdet::cli::run;
using Json = nlohmann::json;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string cfg(const std::string& name) { return std::string(FUNCDET_CONFIG_DIR) + "/" + name; }

std::string scratch(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / ("funcdet_cli_" + name);
  std::ofstream(path) << body;
  return path.string();
}

const char* kDirichletPair = R"([problem.1]
r = 1
interval = 0, 1
P = "1"
R = ["%R%"]

[problem.2]
r = 1
interval = 0, 1
P = "1"
R = ["0"]

[boundary]
M = [1, 0, 0, 0]
N = [0, 0, 1, 0]
)";

std::string dirichlet_with(const std::string& r) {
  std::string s = kDirichletPair;
  s.replace(s.find("%R%"), 3, r);
  return s;
}

}  // namespace

TEST_CASE("fnv1a reference values") {
  CHECK(funcdet::cli::fnv1a("") == 0xcbf29ce484222325ull);
  CHECK(funcdet::cli::fnv1a("a") == 0xaf63dc4c8601ec8cull);
  CHECK(funcdet::cli::fnv1a("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("ratio json for the m = 1 dirichlet pair") {
  const Outcome o = call({"ratio", cfg("dirichlet_m1.cfg"), "--json"});
  REQUIRE(o.code == 0);
  const Json j = Json::parse(o.out);
  CHECK(j["command"] == "ratio");
  CHECK(j["exit_code"] == 0);
  CHECK(j["result"]["ratio"]["re"].get<double>() == doctest::Approx(std::sinh(1.0)).epsilon(1e-10));
  CHECK(j["result"]["ratio"]["im"].get<double>() == 0.0);
  CHECK(j["result"]["zero_mode"].is_null());
  CHECK(j["config_hash"].get<std::string>().rfind("fnv1a64:", 0) == 0);
  CHECK_FALSE(j.contains("error"));
}

TEST_CASE("config hash is the hash of the file bytes") {
  std::ifstream in(cfg("dirichlet_m1.cfg"), std::ios::binary);
  std::ostringstream body;
  body << in.rdbuf();
  char want[40];
  std::snprintf(want, sizeof want, "fnv1a64:%016llx",
                static_cast<unsigned long long>(funcdet::cli::fnv1a(body.str())));
  const Json j = Json::parse(call({"--json", "check", cfg("dirichlet_m1.cfg")}).out);
  CHECK(j["config_hash"] == want);
}

TEST_CASE("periodic pair text output") {
  const Outcome o = call({"ratio", cfg("periodic_pair.cfg")});
  CHECK(o.code == 0);
  CHECK(o.out.find("zero mode detected (multiplicity 1); det' L1/det L2 = 0.920673") != std::string::npos);
  CHECK(o.err.find("elapsed:") != std::string::npos);
}

TEST_CASE("quiet suppresses warnings and timing") {
  const Outcome o = call({"ratio", cfg("metric_mismatch.cfg"), "--quiet"});
  CHECK(o.code == 0);
  CHECK(o.err.empty());
  const Outcome loud = call({"ratio", cfg("metric_mismatch.cfg")});
  CHECK(loud.err.find("warning:") != std::string::npos);
}

TEST_CASE("unsupported boundary class") {
  const Outcome o = call({"check", cfg("bad_bc.cfg")});
  CHECK(o.code == 1);
  CHECK(o.err.find("Unsupported boundary class") != std::string::npos);
  const Outcome j = call({"check", cfg("bad_bc.cfg"), "--json"});
  CHECK(j.code == 1);
  const Json doc = Json::parse(j.out);
  CHECK(doc["error"]["code"] == "unsupported_boundary");
  CHECK(doc["error"]["kind"] == "validation");
  CHECK(doc["exit_code"] == 1);
  CHECK_FALSE(doc.contains("result"));
}

TEST_CASE("check reports classification") {
  const Json j = Json::parse(call({"check", cfg("periodic_pair.cfg"), "--json"}).out);
  CHECK(j["result"]["self_adjoint"] == true);
  CHECK(j["result"]["problems"].size() == 2);
  const Outcome t = call({"check", cfg("dirichlet_m1.cfg")});
  CHECK(t.out.find("self-adjoint: yes") != std::string::npos);
}

TEST_CASE("every error path has a nonzero exit code and an error object") {
  struct Case {
    std::vector<std::string> args;
    int code;
    std::string error;
  };
  const std::string unknown_key = scratch("unknown.cfg", dirichlet_with("1") + "\n[solver]\nrel_tl = 1e-9\n");
  const std::string bad_expr = scratch("bad_expr.cfg", dirichlet_with("1+*x"));
  const std::vector<Case> cases = {
      {{"ratio", cfg("degenerate.cfg")}, 2, "degenerate_zero_mode"},
      {{"ratio", cfg("bad_bc.cfg")}, 1, "unsupported_boundary"},
      {{"ratio", "/nonexistent/funcdet.cfg"}, 1, ""},
      {{"ratio", unknown_key}, 1, ""},
      {{"ratio", bad_expr}, 1, ""},
      {{"eigenvalues", cfg("dirichlet_m1.cfg"), "--count", "0"}, 1, ""},
      {{"frobnicate", cfg("dirichlet_m1.cfg")}, 1, "usage_error"},
      {{"ratio"}, 1, "usage_error"},
  };
  for (const auto& c : cases) {
    std::vector<std::string> args = c.args;
    args.push_back("--json");
    const Outcome o = call(args);
    CAPTURE(args[0]);
    CAPTURE(o.out);
    CHECK(o.code == c.code);
    const Json j = Json::parse(o.out);
    REQUIRE(j.contains("error"));
    CHECK(j["exit_code"] == c.code);
    CHECK(j["error"]["message"].get<std::string>().size() > 0);
    if (!c.error.empty()) CHECK(j["error"]["code"] == c.error);
  }
}

TEST_CASE("repeated runs give byte-identical json") {
  for (const std::string name : {"dirichlet_m1.cfg", "periodic_pair.cfg", "twisted_system.cfg", "bad_bc.cfg"}) {
    const Outcome a = call({"--json", "ratio", cfg(name)});
    const Outcome b = call({"--json", "ratio", cfg(name)});
    CHECK(a.out == b.out);
  }
  const Outcome a = call({"--json", "eigenvalues", cfg("robin_pair.cfg"), "--count", "5"});
  const Outcome b = call({"--json", "eigenvalues", cfg("robin_pair.cfg"), "--count", "5"});
  CHECK(a.out == b.out);
}

TEST_CASE("json numbers round-trip") {
  const Json j = Json::parse(call({"--json", "ratio", cfg("dirichlet_m5.cfg")}).out);
  const double v = j["result"]["ratio"]["re"].get<double>();
  CHECK(v == doctest::Approx(std::sinh(5.0) / 5.0).epsilon(1e-10));
  CHECK(Json(v).dump() == j["result"]["ratio"]["re"].dump());
}

TEST_CASE("eigenvalues command") {
  const Json j = Json::parse(call({"--json", "eigenvalues", cfg("negative_mode.cfg"), "--count", "3"}).out);
  const auto& ev = j["result"]["spectra"][0]["eigenvalues"];
  REQUIRE(ev.size() >= 1);
  CHECK(ev[0]["value"].get<double>() == doctest::Approx(std::numbers::pi * std::numbers::pi - 16).epsilon(1e-10));
  CHECK(ev[1]["value"].get<double>() > 0);
}

TEST_CASE("zero-mode command") {
  const Outcome t = call({"zero-mode", cfg("dirichlet_zero_mode.cfg")});
  CHECK(t.code == 0);
  CHECK(t.out.find("zero mode multiplicity: 1") != std::string::npos);
  const Json j = Json::parse(call({"--json", "zero-mode", cfg("dirichlet_zero_mode.cfg")}).out);
  CHECK(j["result"]["zero_mode"]["multiplicity"] == 1);
  CHECK(j["result"]["zero_mode"]["B"]["re"].get<double>() == doctest::Approx(-1.0).epsilon(1e-10));
  const Json none = Json::parse(call({"--json", "zero-mode", cfg("dirichlet_m1.cfg")}).out);
  CHECK(none["result"]["zero_mode"]["multiplicity"] == 0);
}

TEST_CASE("verify command") {
  const Outcome ok = call({"verify", cfg("dirichlet_m1.cfg"), "--terms", "500"});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("PASS") != std::string::npos);
  const Json j = Json::parse(call({"--json", "verify", cfg("periodic_pair.cfg")}).out);
  CHECK(j["result"]["verdict"] == "PASS");
  CHECK(j["result"]["zero_mode_skipped"] == true);
  CHECK(j["result"]["tail_bound"].get<double>() <= 1e-3);
}
