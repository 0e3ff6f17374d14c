#include "doctest.h"

#include <sstream>

#include "circstab/cli_runner.hpp"
#include "circstab/dispersion.hpp"

using namespace circstab;
using nlohmann::json;

namespace {

json constant_vortex_config() {
  return json{{"command", "find-modes"}, {"setup", {{"oracle", "ConstantVortex"}}}, {"k", 2}};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string f; std::getline(in, f, ',');) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

TEST_CASE("command names round-trip") {
  for (auto c : {Command::SolveMode, Command::FindModes, Command::Semicircle, Command::VerifyOracles,
                 Command::CriticalLayer, Command::EpsilonScaling, Command::Sweep})
    CHECK(command_from(to_string(c)) == c);
  CHECK_FALSE(command_from("nonsense").has_value());
}

TEST_CASE("validation errors exit with 2") {
  CHECK(run(json::array()).exit_code == 2);
  CHECK(run(json{{"setup", {{"oracle", "ConstantVortex"}}}, {"k", 2}}).exit_code == 2);
  auto bad_k = constant_vortex_config();
  bad_k["k"] = 0;
  CHECK(run(bad_k).exit_code == 2);
  auto bad_oracle = constant_vortex_config();
  bad_oracle["setup"]["oracle"] = "Nope";
  CHECK(run(bad_oracle).exit_code == 2);
  auto bad_setup = constant_vortex_config();
  bad_setup["setup"] = {{"rho_plus", -1},
                        {"profile_plus", {{"kind", "constant"}, {"B", 1}}},
                        {"profile_minus", {{"kind", "constant"}}}};
  CHECK(run(bad_setup).exit_code == 2);
  RunOverrides ov;
  ov.command = "nonsense";
  const auto r = run(constant_vortex_config(), ov);
  CHECK(r.exit_code == 2);
  const json diag = json::parse(r.output);
  CHECK(diag.at("error") == "ConfigInvalid");
}

TEST_CASE("strict mode rejects unknown keys") {
  auto cfg = constant_vortex_config();
  cfg["typo"] = 1;
  RunOverrides strict;
  strict.strict = true;
  CHECK(run(cfg, strict).exit_code == 2);
  CHECK(run(cfg).exit_code == 0);
  CHECK_THROWS_AS(parse_config(cfg, true), Error);
}

TEST_CASE("find-modes row and header") {
  const auto r = run(constant_vortex_config());
  REQUIRE(r.exit_code == 0);
  const auto ls = lines(r.output);
  REQUIRE(ls.size() == 3);
  CHECK(ls[0].rfind("# config_hash=", 0) == 0);
  CHECK(ls[0].find("tolerances=rtol:") != std::string::npos);
  CHECK(ls[1] == "schema_version,command,k,re_c,im_c,residual,count,m,M,condition,notes");
  const auto f = fields(ls[2]);
  REQUIRE(f.size() == 11);
  CHECK(f[0] == "1");
  CHECK(f[1] == "find-modes");
  CHECK(f[2] == "2");
  CHECK(std::stod(f[3]) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(std::stod(f[4]) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(std::stod(f[5]) <= 1e-9);
}

TEST_CASE("config hash ignores the output path and thread count") {
  auto a = constant_vortex_config();
  auto b = a;
  b["output"] = {{"path", "elsewhere.csv"}};
  b["threads"] = 4;
  const auto ra = run(a), rb = run(b);
  CHECK(lines(ra.output)[0] == lines(rb.output)[0]);
  auto c = a;
  c["k"] = 3;
  CHECK(lines(run(c).output)[0] != lines(ra.output)[0]);
  CHECK(config_hash(a).size() == 16);
}

TEST_CASE("json output mirrors the rows") {
  auto cfg = constant_vortex_config();
  cfg["output"] = {{"format", "json"}};
  const auto r = run(cfg);
  REQUIRE(r.exit_code == 0);
  const json j = json::parse(r.output);
  CHECK(j.at("schema_version") == kSchemaVersion);
  CHECK(j.at("rows").size() == 1);
  CHECK(j.at("rows")[0].at("re_c").get<double>() == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(j.at("tolerances").contains("identity_tol"));
}

TEST_CASE("empty sweep") {
  json cfg{{"command", "sweep"},
           {"setup", {{"oracle", "CapillaryConstant"}, {"B", 1.0}}},
           {"k", 2},
           {"sweep", {{"axes", {{"alpha", json::array()}}}}}};
  const auto r = run(cfg);
  CHECK(r.exit_code == 0);
  CHECK(lines(r.output).size() == 2);
}

TEST_CASE("surface tension sweep across the threshold") {
  json cfg{{"command", "sweep"},
           {"setup", {{"oracle", "CapillaryConstant"}, {"B", 1.0}}},
           {"sweep", {{"axes", {{"alpha", {0.05, 0.1, 1.0 / 6.0, 0.2, 0.5}}, {"k", {2, 3, 5}}}}}},
           {"threads", 3}};
  const auto r = run(cfg);
  REQUIRE(r.exit_code == 0);
  const auto ls = lines(r.output);
  REQUIRE(ls.size() == 2 + 15);
  CHECK(ls[1].find(",error,axis:alpha,axis:k") != std::string::npos);
  for (size_t i = 2; i < ls.size(); ++i) {
    const auto f = fields(ls[i]);
    REQUIRE(f.size() == 14);
    CHECK(f[11].empty());
    const double alpha = std::stod(f[12]);
    const int k = std::stoi(f[13]);
    const int count = std::stoi(f[6]);
    // unstable iff alpha k (k + 1) < B^2
    CHECK(count == (alpha * k * (k + 1) < 1.0 ? 1 : 0));
    if (6 * alpha >= 1.0) CHECK(count == 0);
  }
  // first axis varies slowest
  CHECK(std::stod(fields(ls[2])[12]) == 0.05);
  CHECK(std::stoi(fields(ls[3])[13]) == 3);
}

TEST_CASE("two-phase wave number sweep against the closed form") {
  // inner vortex B = 3 over still outer fluid; surface tension closes the band at large k
  json cfg{{"command", "sweep"},
           {"setup", {{"oracle", "TwoPhaseTC"}, {"B", 3.0}, {"b", 0.0}, {"epsilon", 0.5}, {"alpha", 0.2},
                      {"r_out", "inf"}}},
           {"sweep", {{"axes", {{"k", {2, 3, 4, 6, 10, 20}}}}}}};
  const auto r = run(cfg);
  REQUIRE(r.exit_code == 0);
  const auto ls = lines(r.output);
  REQUIRE(ls.size() == 8);
  int unstable = 0, stable = 0;
  for (size_t i = 2; i < ls.size(); ++i) {
    const auto f = fields(ls[i]);
    REQUIRE(f.size() == 13);
    CHECK(f[11].empty());
    OracleParams p;
    p.k = std::stoi(f[12]);
    p.B = 3.0;
    p.epsilon = 0.5;
    p.alpha = 0.2;
    // K (c - N/K)^2 = rhs with K > 0, so there is an unstable root iff rhs < 0
    const double rhs = two_phase_tc_rhs(p);
    const int count = std::stoi(f[6]);
    CHECK(count == (rhs < 0.0 ? 1 : 0));
    if (count == 1) {
      ++unstable;
      const cplx c(std::stod(f[3]), std::stod(f[4]));
      CHECK(std::abs(oracle_dispersion(OracleCase::TwoPhaseTC, p, c)) <= 1e-8);
    } else {
      ++stable;
    }
  }
  CHECK(unstable > 0);
  CHECK(stable > 0);
}

TEST_CASE("per-point failures land in the error column") {
  json cfg{{"command", "sweep"},
           {"setup", {{"oracle", "ConstantVortex"}, {"rho_plus", 1.0}}},
           {"k", 2},
           {"sweep", {{"axes", {{"rho_plus", {-1.0, 1.0}}}}}}};
  const auto r = run(cfg);
  REQUIRE(r.exit_code == 0);
  const auto ls = lines(r.output);
  REQUIRE(ls.size() == 4);
  CHECK(fields(ls[2])[11] == "BadSetup");
  CHECK(fields(ls[3])[11].empty());
}

TEST_CASE("repeated runs are byte-identical") {
  json cfg{{"command", "sweep"},
           {"setup", {{"oracle", "CapillaryConstant"}, {"B", 1.0}}},
           {"sweep", {{"axes", {{"alpha", {0.05, 0.2}}, {"k", {2, 3}}}}}},
           {"threads", 4}};
  const auto a = run(cfg), b = run(cfg);
  CHECK(a.output == b.output);
  RunOverrides one;
  one.threads = 1;
  CHECK(run(cfg, one).output == a.output);
}

TEST_CASE("self-check of the closed forms") {
  json cfg{{"command", "verify-oracles"}, {"output", {{"format", "json"}}}};
  const auto r = run(cfg);
  CHECK(r.exit_code == 0);
  const json j = json::parse(r.output);
  CHECK(j.at("summary").at("passed") == true);
  CHECK(j.at("rows").size() == 5);
}
