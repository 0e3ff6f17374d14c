#include "doctest.h"

#include <cmath>

#include "circstab/dispersion.hpp"
#include "circstab/poly_roots.hpp"
#include "support.hpp"

using namespace circstab;

namespace {

OracleParams draw(OracleCase which, testing::Gen& g) {
  OracleParams p;
  p.k = g.nonzero(-6, 6);
  if (std::abs(p.k) < 2 && which == OracleCase::LipschitzOuter) p.k = 2;
  p.alpha = g.uniform(0, 2);
  p.rho_plus = g.uniform(0.5, 2);
  p.epsilon = g.uniform(0, 0.9);
  p.r_in = which == OracleCase::TCWaterWave || which == OracleCase::TwoPhaseTC ? g.uniform(0, 0.8) : 0.0;
  p.r_out = which == OracleCase::TwoPhaseTC ? g.uniform(1.5, 4) : kInf;
  p.A = g.uniform(-1, 1);
  p.B = g.uniform(-1, 1);
  p.a = g.uniform(-1, 1);
  p.b = g.uniform(-1, 1);
  p.omega_star = g.uniform(0.5, 3);
  p.s_star = g.uniform(0.3, 1.5);
  return p;
}

}  // namespace

TEST_CASE("constant vortex residual") {
  const auto setup = make_setup(1, 0, 0, 0, kInf, AngularProfile::constant(1), AngularProfile::constant(0));
  const auto r = residual(setup, Mode{2, cplx(0.5, 0.5)});
  CHECK(std::abs(r.value) <= 1e-9);
  CHECK(r.accepted);
  const auto r0 = residual(setup, Mode{2, cplx(0.0, 0.0)});
  CHECK(std::abs(r0.value - (-1.0)) < 1e-9);
}

TEST_CASE("vacuous outer side") {
  const auto a = make_setup(1, 0, 0.3, 0, kInf, AngularProfile::constant(1), AngularProfile::constant(0));
  const auto b = make_setup(1, 0, 0.3, 0, 3.0, AngularProfile::constant(1),
                            AngularProfile::taylor_couette(0.4, 2.0));
  const Mode m{3, cplx(0.2, 0.7)};
  CHECK(residual(a, m).value == residual(b, m).value);
}

TEST_CASE("closed-form examples") {
  OracleParams p;
  p.k = 2;
  CHECK(std::abs(oracle_dispersion(OracleCase::ConstantVortex, p, cplx(0.5, 0.5))) < 1e-15);
  p.alpha = 1;
  p.B = 1;
  CHECK(std::abs(oracle_dispersion(OracleCase::CapillaryConstant, p, 0.5 + std::sqrt(1.25))) < 1e-14);

  // quiescent Taylor-Couette water: both roots real
  testing::Gen g(31);
  for (int trial = 0; trial < 50; ++trial) {
    OracleParams q;
    q.k = g.integer(2, 12);
    q.alpha = g.uniform(0, 3);
    q.r_in = g.uniform(0, 0.9);
    q.A = g.uniform(-2, 2);
    q.B = -q.A;
    // the relation is a quadratic in c: recover its coefficients by sampling
    auto f = [&](cplx c) { return oracle_dispersion(OracleCase::TCWaterWave, q, c); };
    const cplx c0 = f(0.0), c1 = f(1.0), cm = f(-1.0);
    const cplx a2 = 0.5 * (c1 + cm) - c0, a1 = 0.5 * (c1 - cm);
    for (const cplx& r : testing::companion_roots({c0, a1, a2})) CHECK(std::abs(r.imag()) < 1e-9);
  }
}

TEST_CASE("property: residual matches the closed forms") {
  testing::Gen g(32);
  DispersionOptions o;
  for (auto which : {OracleCase::ConstantVortex, OracleCase::CapillaryConstant, OracleCase::TCWaterWave,
                     OracleCase::TwoPhaseTC, OracleCase::LipschitzOuter}) {
    const int draws = which == OracleCase::LipschitzOuter ? 40 : 200;
    for (int trial = 0; trial < draws; ++trial) {
      const OracleParams p = draw(which, g);
      const ProblemSetup setup = oracle_setup(which, p);
      const cplx c(g.uniform(-2, 2), g.uniform(0.05, 1.5));
      const cplx d = residual(setup, Mode{p.k, c}, o).value;
      const cplx ref = oracle_scale(which, p) * oracle_dispersion(which, p, c);
      CHECK_MESSAGE(std::abs(d - ref) <= 1e-8 * (std::abs(ref) + residual_scale(setup, p.k)),
                    to_string(which));
    }
  }
}

TEST_CASE("property: conjugate symmetry of D") {
  testing::Gen g(33);
  for (int trial = 0; trial < 30; ++trial) {
    const OracleParams p = draw(OracleCase::TwoPhaseTC, g);
    const ProblemSetup setup = oracle_setup(OracleCase::TwoPhaseTC, p);
    const cplx c(g.uniform(-2, 2), g.uniform(0.05, 1.5));
    const cplx a = residual(setup, Mode{p.k, c}).value, b = residual(setup, Mode{p.k, std::conj(c)}).value;
    CHECK(std::abs(a - std::conj(b)) <= 1e-10 * (1 + std::abs(a)));
  }
}

TEST_CASE("property: capillary threshold keeps the closed-form roots real") {
  testing::Gen g(34);
  for (int trial = 0; trial < 100; ++trial) {
    OracleParams p;
    p.B = g.uniform(-3, 3);
    p.alpha = p.B * p.B / 6.0 * g.uniform(1.0, 3.0);
    p.k = g.integer(2, 64) * (g.integer(0, 1) ? 1 : -1);
    auto f = [&](cplx c) { return oracle_dispersion(OracleCase::CapillaryConstant, p, c); };
    const cplx c0 = f(0.0), c1 = f(1.0), cm = f(-1.0);
    for (const cplx& r : testing::companion_roots({c0, 0.5 * (c1 - cm), 0.5 * (c1 + cm) - c0}))
      CHECK(std::abs(r.imag()) <= 1e-7 * (1 + std::abs(r)));
  }
}

TEST_CASE("property: equal-rotation two-phase relation") {
  testing::Gen g(35);
  for (int trial = 0; trial < 100; ++trial) {
    OracleParams p;
    p.k = g.nonzero(-10, 10);
    p.alpha = g.uniform(0, 2);
    p.rho_plus = g.uniform(0.5, 2);
    p.epsilon = g.uniform(0, 0.99);
    p.B = p.b = g.uniform(-3, 3);
    CHECK(two_phase_tc_rhs(p) == doctest::Approx(two_phase_tc_rhs_equal_rotation(p)).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("small density expansion") {
  const auto setup = make_setup(1, 0, 1, 0, kInf, AngularProfile::taylor_couette(0, 1), AngularProfile::constant(0));
  const auto ex = small_density_expansion(setup, 2);
  CHECK(ex.c_plus_k == doctest::Approx(0.5 + std::sqrt(1.25)).epsilon(1e-12));
  CHECK(ex.c_minus_k == doctest::Approx(0.5 - std::sqrt(1.25)).epsilon(1e-12));
  CHECK(ex.h_I_0[0] == doctest::Approx(0.585410).epsilon(1e-6));
  CHECK(ex.h_R_0[0] == ex.c_plus_k);

  // the unperturbed speeds are roots of the one-phase residual
  for (double c : {ex.c_plus_k, ex.c_minus_k}) {
    const auto r = residual(setup, Mode{2, cplx(c, 0.0)});
    CHECK(std::abs(r.value) <= 1e-9 * r.scale);
  }

  const auto quiet = make_setup(1, 0, 0, 0, kInf, AngularProfile::constant(0), AngularProfile::constant(0));
  try {
    small_density_expansion(quiet, 2);
    FAIL("expected StableBranchMissing");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::StableBranchMissing);
  }
}

TEST_CASE("frozen relation reproduces the full residual") {
  // with zeta_-'(0) frozen at its value at c, c is a root of the quadratic iff D(c) = 0
  LipschitzParams lp;
  lp.s_star = calibrate_sstar(3, 0, 2, lipschitz_lambdas(lp)[1]);
  const auto root = lipschitz_case_roots(lp, 1e-3).upper;
  OracleParams p;
  p.k = 2;
  p.alpha = 1;
  p.epsilon = 1e-3;
  p.omega_star = 3;
  p.s_star = lp.s_star;
  const auto setup = oracle_setup(OracleCase::LipschitzOuter, p);
  const auto r = residual(setup, Mode{2, root});
  const auto roots = frozen_dispersion_roots(setup, 2, r.zeta_prime_minus);
  const double d = std::min(std::abs(roots[0] - root), std::abs(roots[1] - root));
  CHECK(d < 1e-9);
  // the quadratic's roots coincide with -D / rho_+ vanishing
  CHECK(std::abs(r.value) < 1e-9 * r.scale);
}

TEST_CASE("Lipschitz example") {
  LipschitzParams lp;
  const auto lam = lipschitz_lambdas(lp);
  CHECK(lam[1] == doctest::Approx(std::sqrt(1.5)).epsilon(1e-12));
  CHECK(lam[0] == doctest::Approx(-std::sqrt(1.5)).epsilon(1e-12));

  lp.s_star = calibrate_sstar(3, 0, 2, lam[1]);
  CHECK(lp.s_star == doctest::Approx(1.1696349310).epsilon(1e-9));
  const auto gam = lipschitz_gammas(lp);
  CHECK(gam[1] == doctest::Approx(lam[1]).epsilon(1e-11));
  const double w_star = 3.0 * (1.0 - std::exp(-2 * lp.s_star));
  CHECK(w_star - lam[1] == doctest::Approx(1.5 * (1 - std::exp(-4 * lp.s_star))).epsilon(1e-10));

  // cubic: independent construction and companion-matrix roots
  for (double eps : {1e-4, 1e-3, 1e-2}) {
    const double kk = 2.0, ws = 3.0, b = 0.0;
    using testing::cplx;
    std::vector<cplx> F = testing::multiply(testing::multiply({-lam[0], 1.0}, {-lam[1], 1.0}), {-lam[1], 1.0});
    std::vector<cplx> G = testing::multiply(testing::multiply({-gam[0], 1.0}, {-b, 1.0}), {-b, 1.0});
    G = testing::add(G, testing::multiply({-b, 1.0}, {-lam[1], 1.0}), -2.0 * ws / kk);
    G = testing::add(G, {-lam[1], 1.0}, -b * b / kk);
    F = testing::add(F, G, eps);
    const auto ref = testing::companion_roots(F);
    const auto got = lipschitz_case_roots(lp, eps);
    double best = 1e9;
    for (const auto& r : ref) best = std::min(best, std::abs(r - got.upper));
    CHECK(best < 1e-10);
    CHECK(got.upper.imag() > 0);
    CHECK(std::abs(got.lower - std::conj(got.upper)) < 1e-12);
  }
  const auto r4 = lipschitz_case_roots(lp, 1e-4);
  CHECK(std::abs(r4.upper.imag() / r4.asymptotic_imag - 1.0) < 0.1);

  try {
    lipschitz_case_roots(lp, 0.0);
    FAIL("expected NoComplexPair");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoComplexPair);
  }
  // omega_star = 1 never reaches lambda_+ (gamma_2 -> omega_star / 2)
  try {
    calibrate_sstar(1, 0, 2, lam[1]);
    FAIL("expected NoSolution");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoSolution);
  }
  LipschitzParams bad = lp;
  bad.b = lam[1];
  CHECK_THROWS_AS(lipschitz_case_roots(bad, 1e-3), Error);
}

TEST_CASE("polynomial roots agree with the companion matrix") {
  testing::Gen g(36);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = g.integer(1, 7);
    std::vector<cplx> coeffs;
    for (int i = 0; i <= n; ++i) coeffs.emplace_back(g.uniform(-2, 2), g.uniform(-2, 2));
    const auto a = polynomial_roots(coeffs);
    const auto b = testing::companion_roots(coeffs);
    REQUIRE(a.size() == b.size());
    for (const auto& r : a) {
      double best = 1e9;
      for (const auto& s : b) best = std::min(best, std::abs(r - s));
      CHECK(best < 1e-8 * (1 + std::abs(r)));
    }
  }
}
