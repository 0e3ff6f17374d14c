#include "circstab/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "circstab/poly_roots.hpp"

namespace circstab {

namespace {

// (1 + r^{2|k|}) / (1 - r^{2|k|}) for r < 1, written to survive r -> 0.
double inner_ratio(double r_in, double ak) {
  const double y = std::pow(r_in, 2.0 * ak);
  return (1.0 + y) / (1.0 - y);
}

// (1 + R^{2|k|}) / (R^{2|k|} - 1) for R > 1, written to survive R -> inf.
double outer_ratio(double r_out, double ak) {
  if (r_out == kInf) return 1.0;
  const double x_inv = std::pow(r_out, -2.0 * ak);
  return (1.0 + x_inv) / (1.0 - x_inv);
}

double abs_k(int k) {
  if (k == 0) throw Error(ErrorCode::BadParams, "wave number must be nonzero");
  return std::abs(static_cast<double>(k));
}

}  // namespace

double residual_scale(const ProblemSetup& setup, int k) {
  const double k2 = static_cast<double>(k) * k;
  const double wp = setup.profile_plus.jet(0.0).w;
  const double wm = setup.profile_minus.jet(0.0).w;
  return std::abs(setup.alpha) * k2 + setup.rho_plus * (1.0 + wp * wp) +
         setup.rho_minus * (1.0 + wm * wm);
}

cplx assemble_dispersion(const ProblemSetup& setup, int k, cplx c, cplx zeta_prime_plus,
                         cplx zeta_prime_minus) {
  const double k2 = static_cast<double>(k) * k;
  const Jet jp = setup.profile_plus.jet(0.0);
  const cplx dp = jp.w - c;
  cplx lhs = setup.alpha * (k2 - 1.0) - setup.rho_plus * jp.w * jp.w;
  cplx rhs = setup.rho_plus * (zeta_prime_plus * dp * dp - jp.varpi() * dp);
  if (setup.rho_minus != 0.0) {
    const Jet jm = setup.profile_minus.jet(0.0);
    const cplx dm = jm.w - c;
    lhs += setup.rho_minus * jm.w * jm.w;
    rhs -= setup.rho_minus * (zeta_prime_minus * dm * dm - jm.varpi() * dm);
  }
  return lhs - rhs;
}

DispersionResidual residual(const ProblemSetup& setup, const Mode& mode,
                            const DispersionOptions& opts) {
  auto evaluate = [&](cplx c, cplx* zp, cplx* zm, cplx* phase) {
    const Mode m{mode.k, c};
    const BvpSolution sp = solve_side(setup, Side::plus, m, opts.bvp);
    cplx minus = 0.0, ph = sp.raw_phase_at_0;
    if (setup.rho_minus != 0.0) {
      const BvpSolution sm = solve_side(setup, Side::minus, m, opts.bvp);
      minus = sm.zeta_prime_at_0;
      ph *= sm.raw_phase_at_0;
    }
    if (zp) *zp = sp.zeta_prime_at_0;
    if (zm) *zm = minus;
    if (phase) *phase = ph;
    return assemble_dispersion(setup, mode.k, c, sp.zeta_prime_at_0, minus);
  };

  DispersionResidual out;
  out.mode = mode;
  out.value = evaluate(mode.c, &out.zeta_prime_plus, &out.zeta_prime_minus, &out.phase_factor);
  if (!std::isfinite(std::abs(out.value)))
    throw Error(ErrorCode::IntegratorFailure, "non-finite dispersion residual");
  out.scale = residual_scale(setup, mode.k);
  out.accepted = std::abs(out.value) <= opts.accept_rel * out.scale;
  if (opts.with_derivative) {
    const double h = 1e-6 * (1.0 + std::abs(mode.c));
    out.derivative_estimate =
        (evaluate(mode.c + h, nullptr, nullptr, nullptr) - evaluate(mode.c - h, nullptr, nullptr, nullptr)) /
        (2.0 * h);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Closed forms

std::string_view to_string(OracleCase c) {
  switch (c) {
    case OracleCase::ConstantVortex: return "ConstantVortex";
    case OracleCase::CapillaryConstant: return "CapillaryConstant";
    case OracleCase::TCWaterWave: return "TCWaterWave";
    case OracleCase::TwoPhaseTC: return "TwoPhaseTC";
    case OracleCase::LipschitzOuter: return "LipschitzOuter";
  }
  return "Unknown";
}

std::optional<OracleCase> oracle_case_from(std::string_view name) {
  for (auto c : {OracleCase::ConstantVortex, OracleCase::CapillaryConstant,
                 OracleCase::TCWaterWave, OracleCase::TwoPhaseTC, OracleCase::LipschitzOuter})
    if (to_string(c) == name) return c;
  return std::nullopt;
}

double two_phase_tc_rhs(const OracleParams& p) {
  const double ak = abs_k(p.k);
  const double pin = inner_ratio(p.r_in, ak), pout = outer_ratio(p.r_out, ak);
  const double eps = p.epsilon;
  const double K = ak * (pin + eps * pout);
  const double N = ak * pin * (p.A + p.B) - p.B + eps * ak * pout * (p.a + p.b) + eps * p.b;
  return p.alpha / p.rho_plus * (ak * ak - 1.0) + N * N / K + (p.B * p.B - p.A * p.A) -
         ak * pin * (p.A + p.B) * (p.A + p.B) + eps * (p.a * p.a - p.b * p.b) -
         ak * eps * pout * (p.a + p.b) * (p.a + p.b);
}

double two_phase_tc_rhs_equal_rotation(const OracleParams& p) {
  const double ak = abs_k(p.k);
  const double eps = p.epsilon;
  return p.alpha / p.rho_plus * (ak * ak - 1.0) -
         p.b * p.b * (1.0 - eps) * (1.0 - (1.0 - eps) / (ak * (1.0 + eps)));
}

cplx oracle_dispersion(OracleCase which, const OracleParams& p, cplx c) {
  const double ak = abs_k(p.k);
  const double al = p.alpha / p.rho_plus;
  switch (which) {
    case OracleCase::ConstantVortex: {
      const cplx d = c - (1.0 - 1.0 / ak);
      return d * d + (1.0 / ak) * (1.0 - 1.0 / ak);
    }
    case OracleCase::CapillaryConstant: {
      const cplx d = c - p.B * (1.0 - 1.0 / ak);
      return d * d - (ak - 1.0) / (ak * ak) * (al * ak * (ak + 1.0) - p.B * p.B);
    }
    case OracleCase::TCWaterWave: {
      const double pin = inner_ratio(p.r_in, ak);
      const double q = 1.0 / (ak * pin);  // (1 - r^{2|k|}) / (|k| (1 + r^{2|k|}))
      const cplx d = c - (p.A + p.B - q * p.B);
      return pin * ak * d * d - (al * (ak * ak - 1.0) + q * p.B * p.B - (p.A + p.B) * (p.A + p.B));
    }
    case OracleCase::TwoPhaseTC: {
      const double pin = inner_ratio(p.r_in, ak), pout = outer_ratio(p.r_out, ak);
      const double eps = p.epsilon;
      const double K = ak * (pin + eps * pout);
      const double N = ak * pin * (p.A + p.B) - p.B + eps * ak * pout * (p.a + p.b) + eps * p.b;
      const cplx d = c - N / K;
      return K * d * d - two_phase_tc_rhs(p);
    }
    case OracleCase::LipschitzOuter: {
      LipschitzParams lp{p.omega_star, p.b, p.s_star, p.B, p.alpha, p.rho_plus, p.k};
      const auto [g1, g2] = lipschitz_gammas(lp);
      const cplx d = c - (1.0 - 1.0 / ak) * p.B;
      return ak * d * d - (1.0 - 1.0 / ak) * (al * ak * (ak + 1.0) - p.B * p.B) +
             p.epsilon * (ak * (c - g1) / (c - g2) * (c - p.b) * (c - p.b) -
                          2.0 * p.omega_star * (c - p.b) - p.b * p.b);
    }
  }
  throw Error(ErrorCode::BadParams, "unknown oracle case");
}

double oracle_scale(OracleCase which, const OracleParams& p) {
  switch (which) {
    case OracleCase::ConstantVortex:
    case OracleCase::CapillaryConstant: return -p.rho_plus * abs_k(p.k);
    default: return -p.rho_plus;
  }
}

ProblemSetup oracle_setup(OracleCase which, const OracleParams& p) {
  const double rm = p.epsilon * p.rho_plus;
  switch (which) {
    case OracleCase::ConstantVortex:
      return make_setup(p.rho_plus, 0.0, 0.0, 0.0, kInf, AngularProfile::constant(1.0),
                        AngularProfile::constant(0.0));
    case OracleCase::CapillaryConstant:
      return make_setup(p.rho_plus, 0.0, p.alpha, 0.0, kInf, AngularProfile::constant(p.B),
                        AngularProfile::constant(0.0));
    case OracleCase::TCWaterWave:
      return make_setup(p.rho_plus, 0.0, p.alpha, p.r_in, kInf,
                        AngularProfile::taylor_couette(p.A, p.B), AngularProfile::constant(0.0));
    case OracleCase::TwoPhaseTC:
      return make_setup(p.rho_plus, rm, p.alpha, p.r_in, p.r_out,
                        AngularProfile::taylor_couette(p.A, p.B),
                        AngularProfile::taylor_couette(p.a, p.b));
    case OracleCase::LipschitzOuter:
      return make_setup(p.rho_plus, rm, p.alpha, 0.0, kInf, AngularProfile::constant(p.B),
                        AngularProfile::piecewise_outer(p.omega_star, p.b, p.s_star));
  }
  throw Error(ErrorCode::BadParams, "unknown oracle case");
}

// ---------------------------------------------------------------------------
// Small density ratio

InnerTaylorCouette inner_taylor_couette(const ProblemSetup& setup, int k) {
  InnerTaylorCouette t;
  const auto& kind = setup.profile_plus.kind();
  if (const auto* c = std::get_if<ConstantProfile>(&kind)) {
    t.B = c->B;
  } else if (const auto* tc = std::get_if<TaylorCouetteProfile>(&kind)) {
    t.A = tc->A;
    t.B = tc->B;
  } else {
    throw Error(ErrorCode::BadParams, "inner profile must be constant or Taylor-Couette");
  }
  const double ak = abs_k(k);
  t.kappa = ak * inner_ratio(setup.r_in, ak);
  t.centre = t.A + t.B - t.B / t.kappa;
  return t;
}

SmallDensityExpansion small_density_expansion(const ProblemSetup& setup, int k) {
  const InnerTaylorCouette tc = inner_taylor_couette(setup, k);
  const double k2 = static_cast<double>(k) * k;
  SmallDensityExpansion e;
  e.k = k;
  e.discriminant = setup.alpha / setup.rho_plus * (k2 - 1.0) + tc.B * tc.B / tc.kappa -
                   (tc.A + tc.B) * (tc.A + tc.B);
  if (!(e.discriminant > 0.0))
    throw Error(ErrorCode::StableBranchMissing,
                "no pair of distinct real speeds (discriminant " +
                    std::to_string(e.discriminant) + ")");
  const double root = std::sqrt(e.discriminant / tc.kappa);
  e.c_plus_k = tc.centre + root;
  e.c_minus_k = tc.centre - root;
  const double wm = setup.profile_minus.jet(0.0).w;
  const std::array<double, 2> cs{e.c_plus_k, e.c_minus_k};
  for (size_t i = 0; i < 2; ++i) {
    e.h_R_0[i] = cs[i];
    e.h_I_0[i] = (cs[i] - wm) * (cs[i] - wm) / (2.0 * tc.kappa * (cs[i] - tc.centre));
  }
  return e;
}

std::array<cplx, 2> frozen_dispersion_roots(const ProblemSetup& setup, int k,
                                            cplx zeta_prime_minus) {
  const InnerTaylorCouette tc = inner_taylor_couette(setup, k);
  const double k2 = static_cast<double>(k) * k;
  const double eps = setup.epsilon();
  const Jet jm = setup.profile_minus.jet(0.0);
  const double w = jm.w, vp = jm.varpi();
  const cplx Z = eps * zeta_prime_minus;

  const cplx a2 = tc.kappa - Z;
  const cplx a1 = -2.0 * tc.kappa * tc.centre + 2.0 * Z * w - eps * vp;
  const cplx a0 = tc.kappa * tc.centre * tc.centre - tc.B * tc.B / tc.kappa +
                  (tc.A + tc.B) * (tc.A + tc.B) - setup.alpha / setup.rho_plus * (k2 - 1.0) -
                  Z * w * w - eps * w * w + eps * vp * w;
  const cplx disc = std::sqrt(a1 * a1 - 4.0 * a2 * a0);
  // cancellation-free pairing of the two roots
  const cplx q = -0.5 * (a1 + (std::real(std::conj(a1) * disc) >= 0.0 ? disc : -disc));
  if (q == 0.0) return {0.0, 0.0};
  return {q / a2, a0 / q};
}

// ---------------------------------------------------------------------------
// Lipschitz wind

std::array<double, 2> lipschitz_lambdas(const LipschitzParams& p) {
  const double ak = abs_k(p.k);
  if (ak < 2.0) throw Error(ErrorCode::BadParams, "Lipschitz example needs |k| >= 2");
  const double al = p.alpha / p.rho_plus;
  const double bracket = al * ak * (ak + 1.0) - p.B * p.B;
  if (!(bracket > 0.0))
    throw Error(ErrorCode::BadParams, "need B^2 < (alpha/rho_+) |k| (|k| + 1)");
  const double centre = (1.0 - 1.0 / ak) * p.B;
  const double root = std::sqrt((ak - 1.0) / (ak * ak) * bracket);
  return {centre - root, centre + root};
}

std::array<double, 2> lipschitz_gammas(const LipschitzParams& p) {
  const double ak = abs_k(p.k);
  const double ws = PiecewiseOuterProfile{p.omega_star, p.b, p.s_star}.value_at_s_star();
  const double e = std::exp(-2.0 * ak * p.s_star);
  return {ws - p.omega_star / ak * (1.0 + e), ws - p.omega_star / ak * (1.0 - e)};
}

std::vector<cplx> lipschitz_cubic(const LipschitzParams& p, double epsilon) {
  const double ak = abs_k(p.k);
  const auto [lm, lp] = lipschitz_lambdas(p);
  const auto [g1, g2] = lipschitz_gammas(p);
  (void)g2;
  using P = std::vector<cplx>;
  auto lin = [](double root) { return P{-root, 1.0}; };
  P F = poly_mul(poly_mul(lin(lm), lin(lp)), lin(lp));
  P pert = poly_mul(poly_mul(lin(g1), lin(p.b)), lin(p.b));
  const P t2 = poly_mul(lin(p.b), lin(lp));
  for (size_t i = 0; i < t2.size(); ++i) pert[i] -= 2.0 * p.omega_star / ak * t2[i];
  const P t3 = lin(lp);
  for (size_t i = 0; i < t3.size(); ++i) pert[i] -= p.b * p.b / ak * t3[i];
  for (size_t i = 0; i < F.size(); ++i) F[i] += epsilon * pert[i];
  return F;
}

LipschitzRoots lipschitz_case_roots(const LipschitzParams& p, double epsilon) {
  LipschitzRoots out;
  const auto [lm, lp] = lipschitz_lambdas(p);
  const auto [g1, g2] = lipschitz_gammas(p);
  out.lambda_minus = lm;
  out.lambda_plus = lp;
  out.gamma1 = g1;
  out.gamma2 = g2;
  if (std::abs(g2 - lp) > 1e-8 * (1.0 + std::abs(lp)))
    throw Error(ErrorCode::BadParams, "s_star is not calibrated: gamma_2 != lambda_+");
  if (std::abs(p.b - lp) < 1e-12)
    throw Error(ErrorCode::BadParams, "b = lambda_+ makes the perturbation degenerate");
  // at zero density lambda_+ is an exact double root; polishing it only yields O(sqrt(u)) noise
  if (epsilon == 0.0) throw Error(ErrorCode::NoComplexPair, "zero density leaves a real double root");
  out.asymptotic_imag =
      std::sqrt(epsilon * (g2 - g1) * (lp - p.b) * (lp - p.b) / (lp - lm));

  std::vector<cplx> roots = polynomial_roots(lipschitz_cubic(p, epsilon));
  // drop the root continuing lambda_-
  const auto far = std::min_element(roots.begin(), roots.end(), [&](cplx u, cplx v) {
    return std::abs(u - lm) < std::abs(v - lm);
  });
  roots.erase(far);
  const cplx top = roots[0].imag() >= roots[1].imag() ? roots[0] : roots[1];
  if (!(top.imag() > 1e-13 * (1.0 + std::abs(top))))
    throw Error(ErrorCode::NoComplexPair, "roots near lambda_+ are real");
  out.upper = top;
  out.lower = std::conj(top);
  return out;
}

double calibrate_sstar(double omega_star, double b, int k, double target, double s_max) {
  const double ak = abs_k(k);
  if (std::abs(b - target) < 1e-12)
    throw Error(ErrorCode::BadParams, "b equals the target speed");
  auto g = [&](double s) {
    LipschitzParams lp;
    lp.omega_star = omega_star;
    lp.b = b;
    lp.s_star = s;
    lp.k = static_cast<int>(ak);
    return lipschitz_gammas(lp)[1] - target;
  };
  constexpr int n = 20000;
  double x0 = 0.0, f0 = b - target;
  for (int i = 1; i <= n; ++i) {
    const double x1 = s_max * i / n;
    const double f1 = g(x1);
    if ((f0 < 0.0) != (f1 < 0.0) || f1 == 0.0) {
      double lo = x0, hi = x1, flo = f0;
      while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        const double fm = g(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      return 0.5 * (lo + hi);
    }
    x0 = x1;
    f0 = f1;
  }
  throw Error(ErrorCode::NoSolution, "gamma_2 never reaches the target; change omega_star or b");
}

}  // namespace circstab
