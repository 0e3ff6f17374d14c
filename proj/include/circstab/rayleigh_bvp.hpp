#pragma once

// Shooting solver for the Rayleigh problem on one side of the interface:
//   zeta'' = (k^2 + varpi'/(w - c)) zeta,  zeta(0) = 1,  zeta(far) = 0.

#include <complex>
#include <vector>

#include "circstab/profiles.hpp"

namespace circstab {

using cplx = std::complex<double>;

enum class Side { plus, minus };

struct Mode {
  int k = 1;
  cplx c;

  bool unstable() const { return c.imag() > 0.0; }
  /// Growth rate lambda = -i k c.
  cplx growth_rate() const { return cplx(0.0, -static_cast<double>(k)) * c; }
};

struct TracePoint {
  double s = 0.0;
  cplx zeta;
  cplx zeta_dot;
};

struct BvpSolution {
  Side side = Side::plus;
  Mode mode;
  cplx zeta_prime_at_0;
  /// Ordered from the far boundary to s = 0. A sample is repeated at each
  /// Dirac support point, first with the far-side derivative, then the near-side one.
  std::vector<TracePoint> trace;
  /// (|zeta(0)| + |zeta'(0)|) / |zeta(0)| before normalisation.
  double condition_estimate = 1.0;
  /// Phase of zeta(0) before normalisation. The unnormalised solution is
  /// analytic in c, so multiplying D by this phase removes the poles of D at
  /// fixed-boundary eigenvalues without moving its zeros.
  cplx raw_phase_at_0 = 1.0;
};

struct BvpOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  bool keep_trace = true;
  int min_trace_points = 512;
  /// Decay lengths (in units of 1/|k|) between the last varpi' support and a
  /// truncated infinite boundary.
  double decay_lengths = 12.0;
  /// Minimum distance of a real c from the side's range [m, M].
  double singular_margin = 1e-8;
};

BvpSolution solve_side(const ProblemSetup& setup, Side side, const Mode& mode,
                       const BvpOptions& opts = {});

/// Largest relative defect of the ODE on the stored trace, measured with
/// five-point finite differences that never straddle a Dirac support point.
double residual_check(const BvpSolution& solution, const ProblemSetup& setup);

/// Index ranges [first, last) of the trace between repeated samples; the
/// profile is smooth on each run.
std::vector<std::pair<size_t, size_t>> smooth_runs(const std::vector<TracePoint>& trace);

/// Branch hint that keeps a piecewise profile on the smooth piece [a, b].
double hint_in(double s, double a, double b);

/// Weights of the first-derivative finite-difference formula at x0 over nodes x.
std::vector<double> fd_weights(double x0, const std::vector<double>& x);

}  // namespace circstab
