#include "circstab/cli_runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace circstab {

using nlohmann::json;

std::string_view to_string(Command c) {
  switch (c) {
    case Command::SolveMode: return "solve-mode";
    case Command::FindModes: return "find-modes";
    case Command::Semicircle: return "semicircle";
    case Command::VerifyOracles: return "verify-oracles";
    case Command::CriticalLayer: return "critical-layer";
    case Command::EpsilonScaling: return "epsilon-scaling";
    case Command::Sweep: return "sweep";
  }
  return "unknown";
}

std::optional<Command> command_from(std::string_view name) {
  for (auto c : {Command::SolveMode, Command::FindModes, Command::Semicircle, Command::VerifyOracles,
                 Command::CriticalLayer, Command::EpsilonScaling, Command::Sweep})
    if (to_string(c) == name) return c;
  return std::nullopt;
}

LogLevel log_level() {
  const char* v = std::getenv("CIRCSTAB_LOG");
  if (!v) return LogLevel::Warn;
  const std::string s(v);
  if (s == "error") return LogLevel::Error;
  if (s == "info") return LogLevel::Info;
  if (s == "debug") return LogLevel::Debug;
  return LogLevel::Warn;
}

void log(LogLevel level, const std::string& message) {
  static std::mutex mu;
  if (level > log_level()) return;
  static constexpr const char* names[] = {"error", "warn", "info", "debug"};
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[circstab " << names[static_cast<int>(level)] << "] " << message << '\n';
}

std::string config_hash(const json& config) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::ConfigInvalid, msg); }

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed,
                bool strict) {
  if (!obj.is_object()) invalid(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (ok.count(key)) continue;
    if (strict) invalid("unknown key '" + key + "' in " + where);
    log(LogLevel::Warn, "ignoring unknown key '" + key + "' in " + where);
  }
}

double number(const json& obj, const char* key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (v.is_number()) return v.get<double>();
  if (v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "infinity"))
    return kInf;
  invalid(where + "." + key + " must be a number");
}

std::vector<double> numbers(const json& v, const std::string& where) {
  if (!v.is_array()) invalid(where + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) invalid(where + " must be an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

AngularProfile parse_profile(const json& p, const std::string& where, bool strict) {
  if (!p.is_object() || !p.contains("kind") || !p.at("kind").is_string())
    invalid(where + " needs a string 'kind'");
  const std::string kind = p.at("kind").get<std::string>();
  if (kind == "constant") {
    check_keys(p, where, {"kind", "B"}, strict);
    return AngularProfile::constant(number(p, "B", 0.0, where));
  }
  if (kind == "taylor_couette") {
    check_keys(p, where, {"kind", "A", "B"}, strict);
    return AngularProfile::taylor_couette(number(p, "A", 0.0, where), number(p, "B", 0.0, where));
  }
  if (kind == "piecewise_outer") {
    check_keys(p, where, {"kind", "omega_star", "b", "s_star"}, strict);
    return AngularProfile::piecewise_outer(number(p, "omega_star", 0.0, where),
                                           number(p, "b", 0.0, where), number(p, "s_star", 1.0, where));
  }
  if (kind == "tabulated") {
    check_keys(p, where, {"kind", "nodes", "flat_left", "flat_right"}, strict);
    if (!p.contains("nodes") || !p.at("nodes").is_array()) invalid(where + ".nodes must be an array");
    std::vector<std::pair<double, double>> nodes;
    for (const auto& n : p.at("nodes")) {
      if (!n.is_array() || n.size() != 2 || !n[0].is_number() || !n[1].is_number())
        invalid(where + ".nodes entries must be [s, w] pairs");
      nodes.emplace_back(n[0].get<double>(), n[1].get<double>());
    }
    return AngularProfile::tabulated(std::move(nodes), p.value("flat_left", false),
                                     p.value("flat_right", false));
  }
  if (kind == "polynomial") {
    // sum_i coefficients[i] s^i sampled on a uniform grid and interpolated
    check_keys(p, where, {"kind", "coefficients", "s_lo", "s_hi", "nodes", "flat_left", "flat_right"},
               strict);
    if (!p.contains("coefficients")) invalid(where + ".coefficients is required");
    const std::vector<double> coef = numbers(p.at("coefficients"), where + ".coefficients");
    const double lo = number(p, "s_lo", 0.0, where), hi = number(p, "s_hi", 1.0, where);
    const int n = p.value("nodes", 64);
    if (!(hi > lo) || n < 4 || !std::isfinite(lo) || !std::isfinite(hi))
      invalid(where + " needs finite s_lo < s_hi and at least 4 nodes");
    std::vector<std::pair<double, double>> nodes;
    for (int i = 0; i <= n; ++i) {
      const double s = lo + (hi - lo) * i / n;
      double w = 0.0;
      for (auto it = coef.rbegin(); it != coef.rend(); ++it) w = w * s + *it;
      nodes.emplace_back(s, w);
    }
    return AngularProfile::tabulated(std::move(nodes), p.value("flat_left", false),
                                     p.value("flat_right", false));
  }
  invalid(where + ".kind '" + kind + "' is not one of constant, taylor_couette, piecewise_outer, "
                                     "tabulated, polynomial");
}

OracleParams parse_oracle_params(const json& s, const std::string& where) {
  OracleParams p;
  p.alpha = number(s, "alpha", p.alpha, where);
  p.rho_plus = number(s, "rho_plus", p.rho_plus, where);
  p.epsilon = number(s, "epsilon", p.epsilon, where);
  p.r_in = number(s, "r_in", p.r_in, where);
  p.r_out = number(s, "r_out", p.r_out, where);
  p.A = number(s, "A", p.A, where);
  p.B = number(s, "B", p.B, where);
  p.a = number(s, "a", p.a, where);
  p.b = number(s, "b", p.b, where);
  p.omega_star = number(s, "omega_star", p.omega_star, where);
  p.s_star = number(s, "s_star", p.s_star, where);
  return p;
}

std::vector<int> parse_ks(const json& cfg) {
  std::vector<int> ks;
  if (cfg.contains("k")) {
    const json& k = cfg.at("k");
    if (k.is_number_integer()) {
      ks.push_back(k.get<int>());
    } else if (k.is_array()) {
      for (const auto& v : k) {
        if (!v.is_number_integer()) invalid("k entries must be integers");
        ks.push_back(v.get<int>());
      }
    } else {
      invalid("k must be an integer or an array of integers");
    }
  }
  if (cfg.contains("k_range")) {
    const json& r = cfg.at("k_range");
    if (!r.is_array() || r.size() != 2 || !r[0].is_number_integer() || !r[1].is_number_integer())
      invalid("k_range must be [k_lo, k_hi]");
    for (int k = r[0].get<int>(); k <= r[1].get<int>(); ++k)
      if (k != 0) ks.push_back(k);
  }
  for (int k : ks)
    if (k == 0) invalid("wave number 0 is not allowed");
  return ks;
}

}  // namespace

ProblemSetup parse_setup(const json& s, bool strict) {
  if (!s.is_object()) invalid("setup must be an object");
  if (s.contains("oracle")) {
    check_keys(s, "setup", {"oracle", "alpha", "rho_plus", "epsilon", "r_in", "r_out", "A", "B", "a",
                            "b", "omega_star", "s_star"},
               strict);
    const auto which = oracle_case_from(s.at("oracle").get<std::string>());
    if (!which) invalid("unknown oracle case '" + s.at("oracle").get<std::string>() + "'");
    return oracle_setup(*which, parse_oracle_params(s, "setup"));
  }
  check_keys(s, "setup", {"rho_plus", "rho_minus", "epsilon", "alpha", "r_in", "r_out",
                          "profile_plus", "profile_minus"},
             strict);
  if (s.contains("rho_minus") && s.contains("epsilon"))
    invalid("setup takes rho_minus or epsilon, not both");
  if (!s.contains("profile_plus") || !s.contains("profile_minus"))
    invalid("setup needs profile_plus and profile_minus");
  const double rp = number(s, "rho_plus", 1.0, "setup");
  const double rm = s.contains("epsilon") ? number(s, "epsilon", 0.0, "setup") * rp
                                          : number(s, "rho_minus", 0.0, "setup");
  return make_setup(rp, rm, number(s, "alpha", 0.0, "setup"), number(s, "r_in", 0.0, "setup"),
                    number(s, "r_out", kInf, "setup"),
                    parse_profile(s.at("profile_plus"), "setup.profile_plus", strict),
                    parse_profile(s.at("profile_minus"), "setup.profile_minus", strict));
}

RunConfig parse_config(const json& cfg, bool strict) {
  check_keys(cfg, "config", {"command", "setup", "k", "k_range", "c", "region", "tolerances",
                             "critical_layer", "lipschitz", "sweep", "output", "threads"},
             strict);
  RunConfig rc;
  if (!cfg.contains("command") || !cfg.at("command").is_string()) invalid("config needs a 'command'");
  const auto cmd = command_from(cfg.at("command").get<std::string>());
  if (!cmd) invalid("unknown command '" + cfg.at("command").get<std::string>() + "'");
  rc.command = *cmd;

  if (cfg.contains("tolerances")) {
    const json& t = cfg.at("tolerances");
    check_keys(t, "tolerances", {"rtol", "atol", "accept_rel", "eta_floor", "identity_tol", "identity_gate"},
               strict);
    rc.tol.rtol = number(t, "rtol", rc.tol.rtol, "tolerances");
    rc.tol.atol = number(t, "atol", rc.tol.atol, "tolerances");
    rc.tol.accept_rel = number(t, "accept_rel", rc.tol.accept_rel, "tolerances");
    rc.tol.eta_floor = number(t, "eta_floor", rc.tol.eta_floor, "tolerances");
    rc.tol.identity_tol = number(t, "identity_tol", rc.tol.identity_tol, "tolerances");
    rc.tol.identity_gate = t.value("identity_gate", rc.tol.identity_gate);
    if (!(rc.tol.rtol > 0.0) || !(rc.tol.atol > 0.0) || !(rc.tol.accept_rel > 0.0) ||
        !(rc.tol.eta_floor > 0.0) || !(rc.tol.identity_tol > 0.0))
      invalid("tolerances must be positive");
  }

  rc.ks = parse_ks(cfg);
  const bool needs_setup = rc.command != Command::VerifyOracles && rc.command != Command::EpsilonScaling;
  if (needs_setup) {
    if (!cfg.contains("setup")) invalid("command '" + std::string(to_string(rc.command)) + "' needs a setup");
    rc.setup_json = cfg.at("setup");
    if (rc.command != Command::Sweep) rc.setup = parse_setup(rc.setup_json, strict);
    if (rc.command != Command::Sweep && rc.ks.empty()) invalid("config needs k or k_range");
  }

  if (cfg.contains("c")) {
    const auto v = numbers(cfg.at("c"), "c");
    if (v.size() != 2) invalid("c must be [re, im]");
    rc.c = cplx(v[0], v[1]);
  }
  if (rc.command == Command::SolveMode && !rc.c) invalid("solve-mode needs c = [re, im]");

  if (cfg.contains("region")) {
    const json& r = cfg.at("region");
    check_keys(r, "region", {"re_lo", "re_hi", "im_lo", "im_hi"}, strict);
    SearchRegion reg;
    reg.re_lo = number(r, "re_lo", 0.0, "region");
    reg.re_hi = number(r, "re_hi", 0.0, "region");
    reg.im_lo = number(r, "im_lo", rc.tol.eta_floor, "region");
    reg.im_hi = number(r, "im_hi", 0.0, "region");
    if (reg.im_lo < rc.tol.eta_floor) invalid("region.im_lo must be at least eta_floor");
    rc.region = reg;
  }

  if (cfg.contains("critical_layer")) {
    const json& c = cfg.at("critical_layer");
    check_keys(c, "critical_layer", {"branch", "mu", "delta0", "eta_grid", "convergence"}, strict);
    const std::string br = c.value("branch", std::string("plus"));
    if (br != "plus" && br != "minus") invalid("critical_layer.branch must be plus or minus");
    rc.branch = br == "plus" ? Branch::plus : Branch::minus;
    rc.layer.mu = number(c, "mu", rc.layer.mu, "critical_layer");
    rc.layer.delta0 = number(c, "delta0", rc.layer.delta0, "critical_layer");
    if (c.contains("eta_grid")) rc.layer.eta_grid = numbers(c.at("eta_grid"), "critical_layer.eta_grid");
    rc.convergence = c.value("convergence", true);
  }

  if (cfg.contains("lipschitz")) {
    const json& l = cfg.at("lipschitz");
    check_keys(l, "lipschitz", {"omega_star", "b", "s_star", "B", "alpha", "rho_plus", "k", "ladder"}, strict);
    auto& p = rc.lipschitz;
    p.omega_star = number(l, "omega_star", p.omega_star, "lipschitz");
    p.b = number(l, "b", p.b, "lipschitz");
    p.B = number(l, "B", p.B, "lipschitz");
    p.alpha = number(l, "alpha", p.alpha, "lipschitz");
    p.rho_plus = number(l, "rho_plus", p.rho_plus, "lipschitz");
    p.k = l.value("k", p.k);
    if (l.contains("s_star")) {
      p.s_star = number(l, "s_star", p.s_star, "lipschitz");
      rc.calibrate_sstar = false;
    }
    if (l.contains("ladder")) rc.ladder = numbers(l.at("ladder"), "lipschitz.ladder");
  }

  if (rc.command == Command::Sweep) {
    if (!cfg.contains("sweep")) invalid("sweep needs a 'sweep' block");
    const json& s = cfg.at("sweep");
    check_keys(s, "sweep", {"axes"}, strict);
    if (s.contains("axes")) {
      if (!s.at("axes").is_object()) invalid("sweep.axes must be an object");
      for (const auto& [name, vals] : s.at("axes").items()) {
        SweepAxis ax{name, numbers(vals, "sweep.axes." + name)};
        if (name == "k")
          for (double v : ax.values)
            if (v != std::round(v) || v == 0.0) invalid("sweep axis k needs nonzero integers");
        rc.axes.push_back(std::move(ax));
      }
    }
  }

  if (cfg.contains("output")) {
    const json& o = cfg.at("output");
    check_keys(o, "output", {"path", "format"}, strict);
    rc.out_path = o.value("path", std::string());
    const std::string f = o.value("format", std::string("csv"));
    if (f != "csv" && f != "json") invalid("output.format must be csv or json");
    rc.format = f == "csv" ? OutputFormat::Csv : OutputFormat::Json;
  }
  if (cfg.contains("threads")) {
    if (!cfg.at("threads").is_number_integer() || cfg.at("threads").get<int>() < 1)
      invalid("threads must be a positive integer");
    rc.threads = cfg.at("threads").get<int>();
  }
  return rc;
}

namespace {

struct Row {
  std::optional<int> k;
  std::optional<double> re, im, residual;
  std::optional<int> count;
  std::optional<double> m, M, condition;
  std::string notes;
  std::string error;
  std::vector<double> axis_values;
};

struct Report {
  std::vector<Row> rows;
  json summary = json::object();
  int exit_code = 0;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

std::string kv(std::initializer_list<std::pair<const char*, double>> items) {
  std::string s;
  for (const auto& [key, value] : items) {
    if (!s.empty()) s += ';';
    s += key;
    s += '=';
    s += fmt(value);
  }
  return s;
}

SearchOptions search_options(const RunConfig& rc) {
  SearchOptions so;
  so.eta_floor = rc.tol.eta_floor;
  so.identity_gate = rc.tol.identity_gate;
  so.identity_tol = rc.tol.identity_tol;
  so.dispersion.accept_rel = rc.tol.accept_rel;
  so.dispersion.bvp.rtol = rc.tol.rtol;
  so.dispersion.bvp.atol = rc.tol.atol;
  return so;
}

Report cmd_solve_mode(const RunConfig& rc) {
  Report rep;
  const ProblemSetup& setup = *rc.setup;
  const auto [m, M] = combined_range(setup);
  for (int k : rc.ks) {
    const SearchOptions so = search_options(rc);
    const DispersionResidual r = residual(setup, Mode{k, *rc.c}, so.dispersion);
    BvpOptions bo = so.dispersion.bvp;
    double cond = solve_side(setup, Side::plus, Mode{k, *rc.c}, bo).condition_estimate;
    if (setup.rho_minus != 0.0)
      cond = std::max(cond, solve_side(setup, Side::minus, Mode{k, *rc.c}, bo).condition_estimate);
    Row row;
    row.k = k;
    row.re = rc.c->real();
    row.im = rc.c->imag();
    row.residual = std::abs(r.value) / r.scale;
    row.m = m;
    row.M = M;
    row.condition = cond;
    row.notes = kv({{"accepted", r.accepted ? 1.0 : 0.0},
                    {"zeta_plus_re", r.zeta_prime_plus.real()},
                    {"zeta_plus_im", r.zeta_prime_plus.imag()},
                    {"zeta_minus_re", r.zeta_prime_minus.real()},
                    {"zeta_minus_im", r.zeta_prime_minus.imag()}});
    rep.rows.push_back(row);
  }
  return rep;
}

// One row per root (or a single empty row when there is none).
std::vector<Row> find_rows(const ProblemSetup& setup, int k, const RunConfig& rc, int* count,
                           double* most_unstable) {
  const SearchOptions so = search_options(rc);
  const SearchRegion region = rc.region ? *rc.region : semicircle_region(setup, k, so);
  const ModeCatalog cat = find_modes(setup, k, region, so);
  const auto [m, M] = combined_range(setup);
  const double scale = residual_scale(setup, k);
  log(LogLevel::Info, "find-modes k=" + std::to_string(k) + ": " + std::to_string(cat.counted) +
                          " root(s), " + std::to_string(cat.evaluations) + " evaluations");
  if (count) *count = cat.counted;
  if (most_unstable) *most_unstable = 0.0;
  std::vector<Row> rows;
  for (const auto& e : cat.roots) {
    Row row;
    row.k = k;
    row.re = e.c.real();
    row.im = e.c.imag();
    row.residual = e.abs_D / scale;
    row.count = cat.counted;
    row.m = m;
    row.M = M;
    row.condition = e.multiplicity;
    if (e.identity_defects)
      row.notes = kv({{"newton_iterations", static_cast<double>(e.newton_iterations)},
                      {"im_defect", (*e.identity_defects)[0]},
                      {"re_defect", (*e.identity_defects)[1]}});
    else
      row.notes = kv({{"newton_iterations", static_cast<double>(e.newton_iterations)}});
    if (most_unstable) *most_unstable = std::max(*most_unstable, e.c.imag());
    rows.push_back(row);
  }
  if (rows.empty()) {
    Row row;
    row.k = k;
    row.count = 0;
    row.m = m;
    row.M = M;
    row.notes = "stable";
    rows.push_back(row);
  }
  return rows;
}

Report cmd_find_modes(const RunConfig& rc) {
  Report rep;
  for (int k : rc.ks)
    for (auto& row : find_rows(*rc.setup, k, rc, nullptr, nullptr)) rep.rows.push_back(row);
  return rep;
}

Report cmd_semicircle(const RunConfig& rc) {
  Report rep;
  for (int k : rc.ks) {
    const SemicircleReport b = bound(*rc.setup, k);
    Row row;
    row.k = k;
    row.m = b.m;
    row.M = b.M;
    row.condition = b.condition_strict ? 1.0 : 0.0;
    row.notes = kv({{"center", b.center}, {"radius", b.radius}, {"applicable", b.applicable ? 1.0 : 0.0}});
    if (rc.c) {
      const IdentityCheck chk = verify_identities(*rc.setup, Mode{k, *rc.c});
      row.re = rc.c->real();
      row.im = rc.c->imag();
      row.residual = std::max(chk.im_defect, chk.re_defect);
      row.notes += ";" + kv({{"im_defect", chk.im_defect}, {"re_defect", chk.re_defect}});
    }
    rep.rows.push_back(row);
  }
  return rep;
}

Report cmd_verify_oracles(const RunConfig& rc) {
  struct Case {
    OracleCase which;
    OracleParams p;
  };
  std::vector<Case> cases;
  {
    OracleParams p;
    p.k = 3;
    cases.push_back({OracleCase::ConstantVortex, p});
    p = {};
    p.k = 3;
    p.alpha = 0.7;
    p.B = 1.3;
    cases.push_back({OracleCase::CapillaryConstant, p});
    p = {};
    p.k = 2;
    p.alpha = 0.5;
    p.r_in = 0.4;
    p.A = 0.3;
    p.B = 0.8;
    cases.push_back({OracleCase::TCWaterWave, p});
    p = {};
    p.k = 2;
    p.alpha = 0.5;
    p.r_in = 0.3;
    p.r_out = 2.5;
    p.A = 0.2;
    p.B = 0.7;
    p.a = 0.4;
    p.b = 0.1;
    p.epsilon = 0.3;
    cases.push_back({OracleCase::TwoPhaseTC, p});
    p = {};
    p.k = 2;
    p.alpha = 1.0;
    p.epsilon = 0.01;
    p.omega_star = 3.0;
    p.s_star = 1.1696349310;
    cases.push_back({OracleCase::LipschitzOuter, p});
  }
  const std::vector<cplx> probes{{0.3, 0.7}, {1.1, 0.2}, {-0.4, 1.3}, {2.5, 0.05}};
  const SearchOptions so = search_options(rc);
  Report rep;
  double worst = 0.0;
  for (const auto& cs : cases) {
    const ProblemSetup setup = oracle_setup(cs.which, cs.p);
    const double f = oracle_scale(cs.which, cs.p);
    const double scale = residual_scale(setup, cs.p.k);
    double dev = 0.0;
    for (const cplx& c : probes) {
      const cplx d = residual(setup, Mode{cs.p.k, c}, so.dispersion).value;
      dev = std::max(dev, std::abs(d - f * oracle_dispersion(cs.which, cs.p, c)) / scale);
    }
    worst = std::max(worst, dev);
    Row row;
    row.k = cs.p.k;
    row.residual = dev;
    row.count = static_cast<int>(probes.size());
    row.notes = "case=" + std::string(to_string(cs.which)) + (dev <= 1e-8 ? ";pass" : ";FAIL");
    rep.rows.push_back(row);
    rep.summary[std::string(to_string(cs.which))] = dev;
  }
  rep.summary["max_deviation"] = worst;
  rep.summary["passed"] = worst <= 1e-8;
  if (worst > 1e-8) rep.exit_code = 3;
  return rep;
}

Report cmd_critical_layer(const RunConfig& rc) {
  Report rep;
  const ProblemSetup& setup = *rc.setup;
  const auto [m, M] = range(setup.profile_minus);
  BifurcationOptions bo;
  bo.layer = rc.layer;
  bo.layer.keep_trace = false;
  for (int k : rc.ks) {
    const BifurcationSolve sol = solve_unstable_mode(setup, k, rc.branch, bo);
    const double eps = setup.epsilon();
    Row row;
    row.k = k;
    row.re = sol.c_final.real();
    row.im = sol.c_final.imag();
    row.residual = std::max(sol.lambda_residuals[0], sol.lambda_residuals[1]);
    row.m = m;
    row.M = M;
    row.condition = sol.c_sharp;
    row.notes = kv({{"c_k", sol.c_k},
                    {"c_sharp", sol.c_sharp},
                    {"nu1", sol.nu1},
                    {"nu2", sol.nu2},
                    {"epsilon", eps},
                    {"iterations", static_cast<double>(sol.iterations)}});
    rep.rows.push_back(row);
    json s = {{"c_k", sol.c_k}, {"c_sharp", sol.c_sharp}, {"re_c", sol.c_final.real()},
              {"im_c", sol.c_final.imag()}};
    if (rc.convergence && !rc.layer.eta_grid.empty()) {
      const LimitConvergence lc = limit_convergence(setup, k, sol.c_k, rc.layer);
      for (const auto& p : lc.points) {
        Row cr;
        cr.k = k;
        cr.re = sol.c_k;
        cr.im = p.im;
        cr.residual = p.error;
        cr.m = m;
        cr.M = M;
        cr.notes = "convergence;" + kv({{"phi_full", p.phi_full}, {"phi_limit", lc.phi_limit},
                                        {"rate", lc.fitted_rate}});
        rep.rows.push_back(cr);
      }
      s["phi_limit"] = lc.phi_limit;
      s["rate"] = lc.fitted_rate;
    }
    rep.summary[std::to_string(k)] = s;
  }
  return rep;
}

Report cmd_epsilon_scaling(const RunConfig& rc) {
  LipschitzParams p = rc.lipschitz;
  const double lambda_plus = lipschitz_lambdas(p)[1];
  if (rc.calibrate_sstar) p.s_star = calibrate_sstar(p.omega_star, p.b, p.k, lambda_plus);
  const ScalingStudy st = epsilon_scaling_study(p, rc.ladder);
  Report rep;
  for (const auto& smp : st.samples) {
    Row row;
    row.k = p.k;
    row.re = smp.root.real();
    row.im = smp.root.imag();
    row.notes = kv({{"epsilon", smp.epsilon}, {"gap", smp.critical_layer_gap}});
    rep.rows.push_back(row);
  }
  Row sum;
  sum.k = p.k;
  sum.notes = "summary;" + kv({{"slope", st.imag_slope},
                               {"lambda_plus", st.lambda_plus},
                               {"real_shift_slope", st.real_shift_slope},
                               {"min_gap", st.min_gap},
                               {"s_star", p.s_star}});
  rep.rows.push_back(sum);
  rep.summary = {{"slope", st.imag_slope},
                 {"lambda_plus", st.lambda_plus},
                 {"real_shift_slope", st.real_shift_slope},
                 {"min_gap", st.min_gap},
                 {"s_star", p.s_star}};
  return rep;
}

Report cmd_sweep(const RunConfig& rc, int threads) {
  Report rep;
  std::vector<std::vector<double>> points;
  bool empty = rc.axes.empty();
  for (const auto& ax : rc.axes) empty = empty || ax.values.empty();
  if (!empty) {
    // lexicographic order: the first axis varies slowest
    std::vector<size_t> idx(rc.axes.size(), 0);
    for (;;) {
      std::vector<double> pt;
      for (size_t a = 0; a < rc.axes.size(); ++a) pt.push_back(rc.axes[a].values[idx[a]]);
      points.push_back(pt);
      size_t a = rc.axes.size();
      while (a > 0) {
        --a;
        if (++idx[a] < rc.axes[a].values.size()) break;
        idx[a] = 0;
        if (a == 0) goto done;
      }
    }
  }
done:
  std::vector<Row> rows(points.size());
  auto work = [&](size_t i) {
    Row row;
    row.axis_values = points[i];
    try {
      json sj = rc.setup_json;
      std::optional<int> k = rc.ks.empty() ? std::nullopt : std::optional<int>(rc.ks.front());
      for (size_t a = 0; a < rc.axes.size(); ++a) {
        const std::string& name = rc.axes[a].name;
        if (name == "k") {
          k = static_cast<int>(points[i][a]);
          continue;
        }
        std::string ptr = "/" + name;
        std::replace(ptr.begin(), ptr.end(), '.', '/');
        sj[json::json_pointer(ptr)] = points[i][a];
      }
      if (!k) throw Error(ErrorCode::ConfigInvalid, "sweep needs k or a k axis");
      row.k = *k;
      const ProblemSetup setup = parse_setup(sj, true);
      int count = 0;
      double most = 0.0;
      const std::vector<Row> found = find_rows(setup, *k, rc, &count, &most);
      const SemicircleReport b = bound(setup, *k);
      row.count = count;
      row.m = b.m;
      row.M = b.M;
      row.condition = b.condition_strict ? 1.0 : 0.0;
      if (count > 0) {
        for (const auto& f : found)
          if (f.im && *f.im == most) {
            row.re = f.re;
            row.im = f.im;
            row.residual = f.residual;
          }
      }
      row.notes = kv({{"center", b.center}, {"radius", b.radius}});
    } catch (const Error& e) {
      row.error = std::string(to_string(e.code()));
      log(LogLevel::Warn, "sweep point " + std::to_string(i) + ": " + e.what());
    } catch (const std::exception& e) {
      row.error = "Exception";
      log(LogLevel::Warn, "sweep point " + std::to_string(i) + ": " + e.what());
    }
    rows[i] = std::move(row);
  };

  const int nt = std::max(1, std::min<int>(threads, static_cast<int>(points.size())));
  if (nt <= 1) {
    for (size_t i = 0; i < points.size(); ++i) work(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t)
      pool.emplace_back([&] {
        for (size_t i = next++; i < points.size(); i = next++) work(i);
      });
    for (auto& th : pool) th.join();
  }
  rep.rows = std::move(rows);
  return rep;
}

std::string tolerance_string(const Tolerances& t) {
  return "rtol:" + fmt(t.rtol) + ",atol:" + fmt(t.atol) + ",accept_rel:" + fmt(t.accept_rel) +
         ",eta_floor:" + fmt(t.eta_floor) + ",identity_tol:" + fmt(t.identity_tol);
}

std::string render_csv(const RunConfig& rc, const Report& rep, const std::string& hash) {
  std::ostringstream os;
  os << "# config_hash=" << hash << " tolerances=" << tolerance_string(rc.tol) << '\n';
  os << "schema_version,command,k,re_c,im_c,residual,count,m,M,condition,notes";
  const bool sweep = rc.command == Command::Sweep;
  if (sweep) {
    os << ",error";
    for (const auto& ax : rc.axes) os << ",axis:" << ax.name;
  }
  os << '\n';
  auto opt = [](const auto& v) -> std::string {
    if (!v) return "";
    if constexpr (std::is_same_v<std::decay_t<decltype(*v)>, int>) return std::to_string(*v);
    else return fmt(*v);
  };
  for (const auto& r : rep.rows) {
    os << kSchemaVersion << ',' << to_string(rc.command) << ',' << opt(r.k) << ',' << opt(r.re) << ','
       << opt(r.im) << ',' << opt(r.residual) << ',' << opt(r.count) << ',' << opt(r.m) << ','
       << opt(r.M) << ',' << opt(r.condition) << ',' << r.notes;
    if (sweep) {
      os << ',' << r.error;
      for (double v : r.axis_values) os << ',' << fmt(v);
    }
    os << '\n';
  }
  return os.str();
}

std::string render_json(const RunConfig& rc, const Report& rep, const std::string& hash) {
  json out;
  out["schema_version"] = kSchemaVersion;
  out["command"] = std::string(to_string(rc.command));
  out["config_hash"] = hash;
  out["tolerances"] = {{"rtol", rc.tol.rtol},
                       {"atol", rc.tol.atol},
                       {"accept_rel", rc.tol.accept_rel},
                       {"eta_floor", rc.tol.eta_floor},
                       {"identity_tol", rc.tol.identity_tol}};
  json rows = json::array();
  for (const auto& r : rep.rows) {
    json j = json::object();
    auto put = [&](const char* key, const auto& v) {
      if (v) j[key] = *v;
      else j[key] = nullptr;
    };
    put("k", r.k);
    put("re_c", r.re);
    put("im_c", r.im);
    put("residual", r.residual);
    put("count", r.count);
    put("m", r.m);
    put("M", r.M);
    put("condition", r.condition);
    json notes = json::object();
    std::istringstream ns(r.notes);
    std::string item;
    while (std::getline(ns, item, ';')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) notes[item] = true;
      else {
        const std::string value = item.substr(eq + 1);
        char* end = nullptr;
        const double x = std::strtod(value.c_str(), &end);
        if (!value.empty() && end == value.c_str() + value.size()) notes[item.substr(0, eq)] = x;
        else notes[item.substr(0, eq)] = value;
      }
    }
    j["notes"] = notes;
    if (rc.command == Command::Sweep) {
      j["error"] = r.error.empty() ? json(nullptr) : json(r.error);
      json axes = json::object();
      for (size_t a = 0; a < rc.axes.size(); ++a) axes[rc.axes[a].name] = r.axis_values[a];
      j["axes"] = axes;
    }
    rows.push_back(j);
  }
  out["rows"] = rows;
  out["summary"] = rep.summary;
  return out.dump(2) + "\n";
}

std::string diagnostic(const std::string& code, const std::string& message) {
  return json{{"error", code}, {"message", message}}.dump(2) + "\n";
}

}  // namespace

RunResult run(const json& config_in, const RunOverrides& ov) {
  RunResult res;
  try {
    json config = config_in;
    if (!config.is_object()) invalid("config must be a JSON object");
    if (ov.command) config["command"] = *ov.command;
    if (ov.format) {
      if (*ov.format != "csv" && *ov.format != "json") invalid("format must be csv or json");
      config["output"]["format"] = *ov.format;
    }
    if (ov.out) config["output"]["path"] = *ov.out;
    RunConfig rc = parse_config(config, ov.strict);
    if (ov.threads) rc.threads = *ov.threads;
    res.out_path = rc.out_path;
    // the hash covers what determines the numbers, not where they are written
    json hashed = config;
    if (hashed.contains("output")) {
      hashed["output"].erase("path");
      if (hashed["output"].empty()) hashed.erase("output");
    }
    hashed.erase("threads");
    const std::string hash = config_hash(hashed);

    Report rep;
    switch (rc.command) {
      case Command::SolveMode: rep = cmd_solve_mode(rc); break;
      case Command::FindModes: rep = cmd_find_modes(rc); break;
      case Command::Semicircle: rep = cmd_semicircle(rc); break;
      case Command::VerifyOracles: rep = cmd_verify_oracles(rc); break;
      case Command::CriticalLayer: rep = cmd_critical_layer(rc); break;
      case Command::EpsilonScaling: rep = cmd_epsilon_scaling(rc); break;
      case Command::Sweep: rep = cmd_sweep(rc, rc.threads); break;
    }
    res.output = rc.format == OutputFormat::Csv ? render_csv(rc, rep, hash) : render_json(rc, rep, hash);
    res.exit_code = rep.exit_code;
  } catch (const Error& e) {
    const ErrorCode c = e.code();
    const bool validation =
        c == ErrorCode::ConfigInvalid || c == ErrorCode::BadSetup || c == ErrorCode::BadParams;
    res.exit_code = validation ? 2 : 3;
    res.output = diagnostic(std::string(to_string(c)), e.what());
    log(LogLevel::Error, e.what());
  } catch (const json::exception& e) {
    res.exit_code = 2;
    res.output = diagnostic("ConfigInvalid", e.what());
    log(LogLevel::Error, e.what());
  } catch (const std::exception& e) {
    res.exit_code = 3;
    res.output = diagnostic("Exception", e.what());
    log(LogLevel::Error, e.what());
  }
  return res;
}

RunResult run_file(const std::string& path, const RunOverrides& ov) {
  std::ifstream in(path);
  if (!in) {
    RunResult r;
    r.exit_code = 2;
    r.output = diagnostic("ConfigInvalid", "cannot read config file " + path);
    return r;
  }
  json cfg;
  try {
    cfg = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    RunResult r;
    r.exit_code = 2;
    r.output = diagnostic("ConfigInvalid", std::string("config is not valid JSON: ") + e.what());
    return r;
  }
  return run(cfg, ov);
}

}  // namespace circstab
