#pragma once

// Dispersion residual D(c) of the interface, closed-form relations for the
// classical examples, the small-density expansion around Taylor–Couette water,
// and the cubic for the Lipschitz wind.

#include <array>
#include <optional>
#include <string_view>

#include "circstab/rayleigh_bvp.hpp"

namespace circstab {

struct DispersionOptions {
  BvpOptions bvp = [] {
    BvpOptions o;
    o.keep_trace = false;
    return o;
  }();
  double accept_rel = 1e-9;
  bool with_derivative = false;
};

struct DispersionResidual {
  Mode mode;
  cplx value;
  cplx zeta_prime_plus;
  cplx zeta_prime_minus;  // zero when rho_minus = 0 (side not solved)
  std::optional<cplx> derivative_estimate;
  double scale = 1.0;
  bool accepted = false;
  /// Unit factor making value * phase_factor analytic across fixed-boundary
  /// eigenvalues (used for winding numbers).
  cplx phase_factor = 1.0;
};

/// |alpha| k^2 + rho_+ (1 + w_+(0)^2) + rho_- (1 + w_-(0)^2).
double residual_scale(const ProblemSetup& setup, int k);

/// D from interface derivatives already computed.
cplx assemble_dispersion(const ProblemSetup& setup, int k, cplx c, cplx zeta_prime_plus,
                         cplx zeta_prime_minus);

DispersionResidual residual(const ProblemSetup& setup, const Mode& mode,
                            const DispersionOptions& opts = {});

// ---------------------------------------------------------------------------
// Closed-form examples

enum class OracleCase { ConstantVortex, CapillaryConstant, TCWaterWave, TwoPhaseTC, LipschitzOuter };

std::string_view to_string(OracleCase c);
std::optional<OracleCase> oracle_case_from(std::string_view name);

struct OracleParams {
  int k = 2;
  double alpha = 0.0;
  double rho_plus = 1.0;
  double epsilon = 0.0;  // rho_- / rho_+
  double r_in = 0.0;
  double r_out = kInf;
  double A = 0.0, B = 0.0;  // inner w = A e^{-2s} + B
  double a = 0.0, b = 0.0;  // outer Taylor–Couette, or outer value at the interface
  double omega_star = 0.0, s_star = 1.0;
};

/// Printed relation (left minus right side) at c.
cplx oracle_dispersion(OracleCase which, const OracleParams& p, cplx c);

/// Factor f with residual() = f * oracle_dispersion() for the matching setup.
double oracle_scale(OracleCase which, const OracleParams& p);

/// The ProblemSetup each closed form describes.
ProblemSetup oracle_setup(OracleCase which, const OracleParams& p);

/// Right side of the two-phase Taylor–Couette relation, assembled term by term.
double two_phase_tc_rhs(const OracleParams& p);
/// Simplified right side for A = a = 0, B = b.
double two_phase_tc_rhs_equal_rotation(const OracleParams& p);

// ---------------------------------------------------------------------------
// Small density ratio around Taylor–Couette water

struct InnerTaylorCouette {
  double A = 0.0, B = 0.0;
  double kappa = 1.0;   // zeta_+'(0) = |k| (1 + r_in^{2|k|}) / (1 - r_in^{2|k|})
  double centre = 0.0;  // A + B - B / kappa
};

/// Reads A, B off a constant or Taylor–Couette inner profile.
InnerTaylorCouette inner_taylor_couette(const ProblemSetup& setup, int k);

struct SmallDensityExpansion {
  int k = 2;
  double c_plus_k = 0.0, c_minus_k = 0.0;
  std::array<double, 2> h_R_0{};  // (+, -) branches
  std::array<double, 2> h_I_0{};
  double discriminant = 0.0;
};

SmallDensityExpansion small_density_expansion(const ProblemSetup& setup, int k);

/// Both roots in c of the dispersion relation with zeta_-'(0) frozen; for a
/// Taylor–Couette inner side this relation is quadratic in c.
std::array<cplx, 2> frozen_dispersion_roots(const ProblemSetup& setup, int k,
                                            cplx zeta_prime_minus);

// ---------------------------------------------------------------------------
// Lipschitz wind: disk with constant B inside, piecewise outer wind, unbounded exterior

struct LipschitzParams {
  double omega_star = 3.0;
  double b = 0.0;
  double s_star = 1.0;
  double B = 0.0;
  double alpha = 1.0;
  double rho_plus = 1.0;
  int k = 2;
};

/// lambda_{-}, lambda_{+}: the real roots at epsilon = 0.
std::array<double, 2> lipschitz_lambdas(const LipschitzParams& p);
/// gamma_1, gamma_2 at the given s_star.
std::array<double, 2> lipschitz_gammas(const LipschitzParams& p);
/// Ascending coefficients of F(., epsilon).
std::vector<cplx> lipschitz_cubic(const LipschitzParams& p, double epsilon);

struct LipschitzRoots {
  cplx upper;  // lambda_R + i lambda_I, lambda_I > 0
  cplx lower;
  double lambda_plus = 0.0, lambda_minus = 0.0;
  double gamma1 = 0.0, gamma2 = 0.0;
  /// sqrt(eps (gamma2 - gamma1)(lambda_+ - b)^2 / (lambda_+ - lambda_-))
  double asymptotic_imag = 0.0;
};

LipschitzRoots lipschitz_case_roots(const LipschitzParams& p, double epsilon);

/// s_star with gamma_2(s_star) = target, by bisection on the first sign change in (0, s_max].
double calibrate_sstar(double omega_star, double b, int k, double target, double s_max = 50.0);

}  // namespace circstab
