#pragma once

// Howard-type bound for unstable phase velocities and the two integral
// identities behind it, evaluated by quadrature on solver traces.

#include <array>
#include <optional>

#include "circstab/rayleigh_bvp.hpp"

namespace circstab {

struct SemicircleReport {
  double m = 0.0, M = 0.0;  // extremes of w over both sides
  bool applicable = true;   // rho_+ >= rho_-
  bool condition_strict = false;
  double center = 0.0, radius = 0.0;
  std::optional<std::array<double, 2>> identity_defects;  // (imaginary, real)
};

/// Combined (inf, sup) of w_+ and w_-.
std::pair<double, double> combined_range(const ProblemSetup& setup);

SemicircleReport bound(const ProblemSetup& setup, int k);

struct IdentityCheck {
  double im_defect = 0.0;
  double re_defect = 0.0;
  /// min X / max X over both traces; should not fall below -1e-12.
  double min_X_relative = 0.0;
  /// Quadrature error estimates (trapezoid vs. Simpson on paired intervals), relative.
  double im_quadrature_error = 0.0;
  double re_quadrature_error = 0.0;
  /// rho-weighted integrals of X on each side (plus, minus).
  std::array<double, 2> integral_X{};
  /// max |chi| on each side.
  std::array<double, 2> max_chi{};
};

/// `minus` may be omitted when rho_- = 0. Throws InsufficientTrace.
IdentityCheck verify_identities(const ProblemSetup& setup, const Mode& mode,
                                const BvpSolution& plus, const BvpSolution* minus,
                                int min_trace_points = 512);

/// Solves both sides with dense traces and runs the check.
IdentityCheck verify_identities(const ProblemSetup& setup, const Mode& mode);

}  // namespace circstab
