#pragma once

// Outer-side critical-layer analysis: the real system for the moduli
// (xi1, xi2, xi3, Phi) = (|zeta|^2, Re zeta* zeta', |zeta'|^2, Im zeta* zeta'),
// its limit as Im c -> 0 with jumps at the critical points, the predicted
// growth coefficient c_sharp, the (nu1, nu2) Newton solve for unstable modes at
// small density ratio, and the sqrt(epsilon) study for the Lipschitz wind.

#include <array>
#include <optional>
#include <vector>

#include "circstab/dispersion.hpp"

namespace circstab {

enum class LayerVariant { Full, Limit };

struct CriticalLayerState {
  LayerVariant variant = LayerVariant::Full;
  Mode mode;  // for Limit: c = R (real) and the sign of Im c in `im_sign`
  int im_sign = 1;
  /// Samples ordered from the far boundary toward s = 0, scaled so xi1(0) = 1.
  std::vector<double> s, xi1, xi2, xi3, Phi;
  /// Values at s = 0 with the same scaling.
  std::array<double, 4> at0{};
  /// zeta_-'(0) = xi2(0) + i Phi(0).
  cplx zeta_prime_at_0;
  /// max |xi2^2 + Phi^2 - xi1 xi3| / (1 + xi1 xi3) over the samples.
  double pythagorean_defect = 0.0;
  /// Limit only: critical points and xi1 there (same scaling).
  CriticalPointSet critical;
  std::vector<double> xi1_at_critical;
  /// Limit only: -sgn(I) pi sum varpi' xi1 / |w'| over the critical points.
  double phi_sum_formula = 0.0;
};

struct CriticalLayerConfig {
  double mu = 0.9;
  /// Half-width of the windows around critical points; 0 selects a quarter of
  /// the smallest gap among 0, the critical points and log r_out.
  double delta0 = 0.0;
  std::vector<double> eta_grid{1e-2, 1e-3, 1e-4};
  /// Distance from a critical point at which the limit solution is matched to
  /// its local Frobenius expansion.
  double frobenius_offset = 1e-5;
  int trace_points = 512;
  bool keep_trace = true;
  double rtol = 1e-11;
  double atol = 1e-13;
};

/// Full system on the outer side, integrated from the far boundary to 0.
/// Throws IdentityDrift when the Pythagorean defect exceeds 1e-6.
CriticalLayerState integrate_full(const ProblemSetup& setup, const Mode& mode,
                                  const CriticalLayerConfig& cfg = {});

/// Limit system at real phase speed R with the given sign of Im c.
CriticalLayerState integrate_limit(const ProblemSetup& setup, int k, double R, int im_sign,
                                   const CriticalLayerConfig& cfg = {});

enum class Branch { plus, minus };

struct BifurcationPrediction {
  Branch branch = Branch::plus;
  double c_k = 0.0;
  double h_I = 0.0;
  double c_sharp = 0.0;
  CriticalPointSet critical;
};

/// c_sharp = -pi h_I sum varpi'(s_j) xi1(s_j) / |w'(s_j)| with xi1(0) = 1.
/// Throws HypothesisViolated or ZeroPrediction.
BifurcationPrediction predict_bifurcation(const ProblemSetup& setup, int k, Branch branch,
                                          const CriticalLayerConfig& cfg = {});

struct BifurcationSolve {
  double c_k = 0.0;
  double c_sharp = 0.0;
  double nu1 = 0.0, nu2 = 0.0;
  cplx c_final;
  std::array<double, 2> lambda_residuals{};
  int iterations = 0;
  bool accepted = false;
};

struct BifurcationOptions {
  double epsilon_cap = 1e-2;
  double tol = 1e-9;
  int max_iter = 50;
  int max_halvings = 20;
  CriticalLayerConfig layer = [] {
    CriticalLayerConfig c;
    c.keep_trace = false;
    return c;
  }();
};

/// Newton on (nu1, nu2) for c = (c_k + nu1) + i eps (c_sharp + nu2) at the
/// density ratio of `setup`. Throws NewtonDiverged or LeftHalfPlane.
BifurcationSolve solve_unstable_mode(const ProblemSetup& setup, int k, Branch branch,
                                     const BifurcationOptions& opts = {});

struct ConvergencePoint {
  double im = 0.0;
  double phi_full = 0.0;
  double error = 0.0;
};

struct LimitConvergence {
  double phi_limit = 0.0;
  std::vector<ConvergencePoint> points;
  double fitted_rate = 0.0;
};

/// |Phi_full(0) - Phi_limit(0)| on cfg.eta_grid and its log-log slope.
LimitConvergence limit_convergence(const ProblemSetup& setup, int k, double R,
                                   const CriticalLayerConfig& cfg = {});

struct ScalingSample {
  double epsilon = 0.0;
  cplx root;
  double critical_layer_gap = 0.0;  // min |s_cl - s_star|
};

struct ScalingStudy {
  std::vector<ScalingSample> samples;
  double lambda_plus = 0.0;
  double imag_slope = 0.0;       // d log Im / d log eps
  double real_shift_slope = 0.0; // d log |Re - lambda_+| / d log eps
  double min_gap = 0.0;
};

/// Roots of the Lipschitz cubic over the ladder and the fitted exponents.
ScalingStudy epsilon_scaling_study(const LipschitzParams& params,
                                   const std::vector<double>& ladder);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace circstab
