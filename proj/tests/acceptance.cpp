// Acceptance suite: one pass/fail line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>

#include "circstab/cli_runner.hpp"
#include "circstab/critical_layer.hpp"
#include "circstab/mode_search.hpp"
#include "circstab/semicircle.hpp"
#include "support.hpp"

using namespace circstab;

namespace {

int failures = 0;

void report(int n, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", n, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

AngularProfile table(const std::function<double(double)>& f, double lo, double hi, int n) {
  std::vector<std::pair<double, double>> nodes;
  for (int i = 0; i <= n; ++i) {
    const double s = lo + (hi - lo) * i / n;
    nodes.emplace_back(s, f(s));
  }
  return AngularProfile::tabulated(nodes);
}

// Identity defects of every accepted mode, gathered for criterion 6.
double worst_identity = 0.0;
int identity_modes = 0;

void record_identities(const ModeCatalog& cat) {
  for (const auto& e : cat.roots) {
    ++identity_modes;
    if (!e.identity_defects) {
      worst_identity = INFINITY;
      continue;
    }
    worst_identity = std::max({worst_identity, (*e.identity_defects)[0], (*e.identity_defects)[1]});
  }
}

// Full critical-layer traces, gathered for criterion 7.
double worst_pythagorean = 0.0;
int pythagorean_traces = 0;

void record_pythagorean(const CriticalLayerState& st) {
  ++pythagorean_traces;
  for (size_t i = 0; i < st.s.size(); ++i) {
    const double d = std::abs(st.xi2[i] * st.xi2[i] + st.Phi[i] * st.Phi[i] - st.xi1[i] * st.xi3[i]) /
                     (1.0 + st.xi1[i] * st.xi3[i]);
    worst_pythagorean = std::max(worst_pythagorean, d);
  }
}

template <typename F>
void guarded(int n, F&& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(n, false, std::string("exception: ") + e.what());
  }
}

ProblemSetup linear_wind(double eps) {
  return make_setup(1, eps, 1, 0, std::exp(1.0), AngularProfile::constant(0),
                    table([](double s) { return 6 - 7 * s; }, 0, 1, 40));
}

}  // namespace

int main() {
  // 1. constant vortex
  guarded(1, [] {
    const auto t0 = std::chrono::steady_clock::now();
    const auto setup = make_setup(1, 0, 0, 0, kInf, AngularProfile::constant(1), AngularProfile::constant(0));
    double worst = 0.0;
    bool one_each = true;
    for (int k = 2; k <= 8; ++k) {
      const auto cat = find_modes(setup, k, semicircle_region(setup, k));
      record_identities(cat);
      if (cat.roots.size() != 1 || cat.counted != 1) {
        one_each = false;
        continue;
      }
      worst = std::max(worst, std::abs(cat.roots[0].c - testing::constant_vortex_root(k)));
    }
    const double dt = seconds_since(t0);
    report(1, one_each && worst <= 1e-8 && dt <= 5.0,
           fmt("k=2..8 single root, max error %.3g, %.2f s", worst, dt));
  });

  // 2. capillary stabilisation
  guarded(2, [] {
    const auto t0 = std::chrono::steady_clock::now();
    testing::Gen g(1002);
    int unstable = 0, counts = 0;
    for (int pair = 0; pair < 20; ++pair) {
      const double B = g.uniform(-2, 2);
      const double alpha = B * B / 6.0 * g.uniform(1.0, 2.0) + (pair == 0 ? 0.0 : 1e-12);
      const auto setup = make_setup(1, 0, alpha, 0, kInf, AngularProfile::constant(B), AngularProfile::constant(0));
      for (int k = 2; k <= 64; ++k) {
        unstable += count_roots(setup, k, semicircle_region(setup, k));
        ++counts;
      }
    }
    const double dt = seconds_since(t0);
    report(2, unstable == 0 && dt <= 30.0,
           fmt("%.0f regions counted, %.0f unstable roots, %.2f s", counts, unstable, dt));
  });

  // 3. shooting against the Taylor-Couette closed form
  guarded(3, [] {
    testing::Gen g(1003);
    BvpOptions o;
    o.keep_trace = false;
    double worst = 0.0;
    auto check = [&](double r_in, int k, double A, double B, cplx c) {
      const auto setup = make_setup(1, 0, 0, r_in, kInf, AngularProfile::taylor_couette(A, B),
                                    AngularProfile::constant(0));
      const cplx z = solve_side(setup, Side::plus, Mode{k, c}, o).zeta_prime_at_0;
      const double ref = testing::inner_irrotational_slope(r_in, k);
      worst = std::max(worst, std::abs(z - ref) / std::abs(ref));
      return z;
    };
    const cplx z = check(0.5, 2, 1.0, 0.3, cplx(0.3, 0.2));
    const double anchor = std::abs(z - 34.0 / 15.0);
    for (int i = 1; i < 100; ++i)
      check(g.uniform(0.05, 0.95), g.nonzero(-8, 8), g.uniform(-1, 1), g.uniform(-1, 1),
            cplx(g.uniform(-2, 2), g.uniform(0.05, 1)));
    report(3, worst <= 1e-8 && anchor <= 1e-8,
           fmt("100 cases, max relative error %.3g, |z - 34/15| = %.3g", worst, anchor));
  });

  // 4. quiescent Taylor-Couette water
  guarded(4, [] {
    testing::Gen g(1004);
    int unstable = 0, cases = 0;
    for (int trial = 0; trial < 30; ++trial) {
      const double r_in = trial % 3 == 0 ? 0.0 : g.uniform(0.05, 0.9);
      // a disk needs A = 0, so A + B = 0 leaves it at rest
      const double A = r_in == 0.0 ? 0.0 : g.uniform(-2, 2);
      const double B = -A;
      const double alpha = trial % 5 == 0 ? 0.0 : g.uniform(0, 2);
      const auto setup = make_setup(1, 0, alpha, r_in, kInf, AngularProfile::taylor_couette(A, B),
                                    AngularProfile::constant(0));
      for (int k : {1, 2, 3, 5, 8}) {
        unstable += count_roots(setup, k, semicircle_region(setup, k));
        ++cases;
      }
    }
    report(4, unstable == 0, fmt("%.0f (setup, k) cases, %.0f unstable roots", cases, unstable));
  });

  // 5. semicircle containment
  guarded(5, [] {
    testing::Gen g(1005);
    int setups = 0, roots = 0, violations = 0;
    while (setups < 50) {
      const double rp = g.uniform(0.5, 2), rm = rp * g.uniform(0, 1);
      const double r_in = g.uniform(0, 1) < 0.3 ? 0.0 : g.uniform(0.1, 0.8);
      const double r_out = g.uniform(0, 1) < 0.3 ? kInf : g.uniform(1.5, 4);
      const double Ap = r_in == 0.0 ? 0.0 : g.uniform(-1, 1), Bp = g.uniform(-2, 2);
      const double Am = g.uniform(-1, 1), Bm = r_out == kInf ? 0.0 : g.uniform(-2, 2);
      const double alpha = g.uniform(0, 0.3);
      const int k = g.integer(1, 6);
      const auto setup = make_setup(rp, rm, alpha, r_in, r_out, AngularProfile::taylor_couette(Ap, Bp),
                                    AngularProfile::taylor_couette(Am, Bm));
      const auto rep = bound(setup, k);
      if (!rep.condition_strict) continue;
      ++setups;
      const auto cat = find_modes(setup, k, semicircle_region(setup, k));
      record_identities(cat);
      for (const auto& e : cat.roots) {
        ++roots;
        const double lhs = std::norm(e.c - rep.center);
        if (!(lhs < rep.radius * rep.radius - 1e-10)) ++violations;
      }
    }
    report(5, violations == 0 && roots > 0,
           fmt("%.0f setups, %.0f unstable roots, %.0f violations", setups, roots, violations));
  });

  // 8 and 9 feed 6 and 7, so run them first.
  guarded(8, [] {
    const auto setup = linear_wind(1e-3);
    const double R = small_density_expansion(setup, 2).c_plus_k;
    const auto conv = limit_convergence(setup, 2, R);
    for (double im : {1e-2, 1e-3, 1e-4}) record_pythagorean(integrate_full(setup, Mode{2, cplx(R, im)}));
    std::string pts;
    for (const auto& p : conv.points) pts += fmt(" %.0e:%.3g", p.im, p.error);
    report(8, conv.fitted_rate >= 0.8, fmt("fitted rate %.4f (errors", conv.fitted_rate) + pts + ")");
  });

  guarded(9, [] {
    const auto setup = linear_wind(1e-3);
    const auto sol = solve_unstable_mode(setup, 2, Branch::plus);
    const double band = sol.c_final.imag() / (1e-3 * sol.c_sharp);
    SearchRegion box{sol.c_final.real() - 1e-3, sol.c_final.real() + 1e-3,
                     std::max(1e-6, sol.c_final.imag() - 1e-3), sol.c_final.imag() + 1e-3};
    const int count = count_roots(setup, 2, box);
    const auto cat = find_modes(setup, 2, box);
    record_identities(cat);
    record_pythagorean(integrate_full(setup, Mode{2, sol.c_final}));
    const bool same = cat.roots.size() == 1 && std::abs(cat.roots[0].c - sol.c_final) < 1e-6;
    report(9, sol.accepted && sol.c_final.imag() > 0 && band >= 0.5 && band <= 2.0 && count == 1 && same,
           fmt("c = %.10f%+.10fi, Im c / (eps c_sharp) = %.4f", sol.c_final.real(), sol.c_final.imag(), band) +
               ", roots in box = " + std::to_string(count));
  });

  guarded(6, [] {
    report(6, identity_modes > 0 && worst_identity <= 1e-6,
           fmt("%.0f accepted modes, worst identity defect %.3g", identity_modes, worst_identity));
  });

  guarded(7, [] {
    testing::Gen g(1007);
    for (int trial = 0; trial < 20; ++trial) {
      const double a0 = g.uniform(1, 4), a1 = g.uniform(-3, 3), a2 = g.uniform(-2, 2);
      const auto wind = table([&](double s) { return a0 + a1 * s + a2 * s * s; }, 0, 1, 30);
      const auto setup = make_setup(1, 0.01, 1, 0, std::exp(1.0), AngularProfile::constant(0), wind);
      record_pythagorean(integrate_full(setup, Mode{g.nonzero(-4, 4), cplx(g.uniform(0, 4), g.uniform(1e-4, 0.5))}));
    }
    report(7, worst_pythagorean <= 1e-8,
           fmt("%.0f traces, worst defect %.3g", pythagorean_traces, worst_pythagorean));
  });

  // 10. square-root scaling
  guarded(10, [] {
    LipschitzParams lp;
    lp.s_star = calibrate_sstar(lp.omega_star, lp.b, lp.k, lipschitz_lambdas(lp)[1]);
    const auto st = epsilon_scaling_study(lp, {1e-6, 1e-5, 1e-4, 1e-3, 1e-2});
    const bool ok = std::abs(st.imag_slope - 0.5) <= 0.05 && st.min_gap > 0 &&
                    std::abs(st.lambda_plus - std::sqrt(1.5)) < 1e-12;
    report(10, ok, fmt("slope %.4f, lambda_+ %.6f, min critical-layer gap %.4f", st.imag_slope, st.lambda_plus,
                       st.min_gap));
  });

  // 11. absence near the unperturbed speeds
  guarded(11, [] {
    const auto wind = table([](double s) { return 3 + 0.5 * s; }, 0, 1, 20);
    bool all = true;
    int checks = 0;
    for (double eps : {1e-4, 1e-3}) {
      const auto setup = make_setup(1, eps, 1, 0, std::exp(1.0), AngularProfile::constant(0), wind);
      const auto ex = small_density_expansion(setup, 2);
      for (double c : {ex.c_plus_k, ex.c_minus_k}) {
        all = all && verify_no_unstable_near(setup, 2, c).confirmed_absent;
        ++checks;
      }
    }
    report(11, all, fmt("%.0f half-disks checked, all empty: ", checks) + (all ? "yes" : "no"));
  });

  // 12. determinism of the sweep output
  guarded(12, [] {
    using nlohmann::json;
    const json cfg{{"command", "sweep"},
                   {"setup", {{"oracle", "CapillaryConstant"}, {"B", 1.0}}},
                   {"sweep", {{"axes", {{"alpha", {0.0, 0.05, 0.1, 1.0 / 6.0, 0.3}}, {"k", {2, 3, 4, 8}}}}}},
                   {"threads", 4}};
    auto write = [&](const std::string& path) {
      RunOverrides ov;
      ov.out = path;
      const RunResult r = run(cfg, ov);
      std::ofstream(r.out_path, std::ios::binary) << r.output;
      std::ifstream in(path, std::ios::binary);
      return std::pair{r.exit_code, std::string(std::istreambuf_iterator<char>(in), {})};
    };
    const auto [rc1, a] = write("acceptance_sweep_1.csv");
    const auto [rc2, b] = write("acceptance_sweep_2.csv");
    report(12, rc1 == 0 && rc2 == 0 && !a.empty() && a == b,
           fmt("two sweep runs, %.0f bytes each, identical: ", a.size()) + (a == b ? "yes" : "no"));
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
