#pragma once

// Angular-velocity profiles w(s) in the log-radius coordinate s = log r, with
// the interface at s = 0. Vorticity is varpi = 2w + w', and the Rayleigh
// coefficient needs varpi' = 2w' + w''.

#include <Eigen/Dense>

#include <limits>
#include <utility>
#include <variant>
#include <vector>

#include "circstab/error.hpp"

namespace circstab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Pointwise values returned by `eval`.
struct ProfileValues {
  double w = 0.0;
  double w_dot = 0.0;
  double varpi = 0.0;
  double varpi_dot = 0.0;
};

/// w and its first three s-derivatives at one point.
struct Jet {
  double w = 0.0, w1 = 0.0, w2 = 0.0, w3 = 0.0;
  double varpi() const { return 2.0 * w + w1; }
  double varpi_dot() const { return 2.0 * w1 + w2; }
  double varpi_ddot() const { return 2.0 * w2 + w3; }
};

struct ConstantProfile {
  double B = 0.0;
};

/// w(s) = A e^{-2s} + B, i.e. velocity A/r + B r.
struct TaylorCouetteProfile {
  double A = 0.0;
  double B = 0.0;
};

/// Outer wind with constant vorticity 2 omega_star on [0, s_star) and
/// irrotational flow beyond; varpi' is the measure -2 omega_star delta_{s_star}.
struct PiecewiseOuterProfile {
  double omega_star = 0.0;
  double b = 0.0;
  double s_star = 1.0;

  double value_at_s_star() const;
};

/// C^2 cubic spline through (s, w) nodes.
///
/// Ends adjacent to a finite boundary are clamped to the slope of the
/// interpolant through the six end nodes (fewer for short tables), so cubic
/// data is reproduced exactly. A flat end clamps the slope to zero and extends
/// w as a constant past the last node; that is how a table represents a disk
/// centre or an unbounded exterior.
class TabulatedProfile {
 public:
  TabulatedProfile() = default;
  TabulatedProfile(std::vector<std::pair<double, double>> nodes, bool flat_left,
                   bool flat_right);

  Jet jet(double s, double branch_hint) const;
  double s_first() const { return s_[0]; }
  double s_last() const { return s_[s_.size() - 1]; }
  bool flat_left() const { return flat_left_; }
  bool flat_right() const { return flat_right_; }
  const Eigen::VectorXd& nodes_s() const { return s_; }
  const Eigen::VectorXd& nodes_w() const { return w_; }

  /// Exact (min, max) over [lo, hi] using each cubic piece's stationary points.
  std::pair<double, double> range_on(double lo, double hi) const;

 private:
  Eigen::Index piece_of(double s) const;

  Eigen::VectorXd s_, w_;
  Eigen::VectorXd b_, c_, d_;  // per-piece: w_i + b t + c t^2 + d t^3
  bool flat_left_ = false;
  bool flat_right_ = false;
};

class AngularProfile {
 public:
  using Kind = std::variant<ConstantProfile, TaylorCouetteProfile, PiecewiseOuterProfile,
                            TabulatedProfile>;

  AngularProfile() : kind_(ConstantProfile{}) {}

  static AngularProfile constant(double B);
  static AngularProfile taylor_couette(double A, double B);
  static AngularProfile piecewise_outer(double omega_star, double b, double s_star);
  static AngularProfile tabulated(std::vector<std::pair<double, double>> nodes,
                                  bool flat_left = false, bool flat_right = false);

  /// Copy restricted to [s_lo, s_hi]; either end may be infinite.
  AngularProfile on(double s_lo, double s_hi) const;

  const Kind& kind() const { return kind_; }
  double s_lo() const { return lo_; }
  double s_hi() const { return hi_; }

  /// Pointwise values; throws OutOfDomain or DistributionalPoint.
  ProfileValues eval(double s) const;

  /// Derivatives of the smooth piece that contains `branch_hint`, evaluated at s.
  /// Used by integrators that step up to a kink from one side.
  Jet jet(double s, double branch_hint) const;
  Jet jet(double s) const { return jet(s, s); }

  /// Support points of Dirac masses in varpi' inside the domain, ascending.
  std::vector<double> distributional_points() const;
  /// Mass of the Dirac component of varpi' at s (zero if none there).
  double varpi_dot_mass(double s) const;
  /// True when varpi' vanishes identically (constant or Taylor–Couette flows).
  bool irrotational_forcing() const;
  /// Points where w is only Lipschitz (grid breakpoints for root bracketing).
  std::vector<double> kinks() const;

  /// Beyond this s (towards +inf) varpi' vanishes; -inf analogue below `quiet_below`.
  double quiet_above() const;
  double quiet_below() const;

  bool in_domain(double s) const;

 private:
  explicit AngularProfile(Kind k) : kind_(std::move(k)) {}

  Kind kind_;
  double lo_ = -kInf;
  double hi_ = kInf;
};

/// (m, M) = (inf w, sup w) over the profile's domain.
std::pair<double, double> range(const AngularProfile& profile);

struct CriticalPoint {
  double sigma = 0.0;
  double w_dot = 0.0;
  double varpi_dot = 0.0;
};

struct CriticalPointSet {
  double value = 0.0;
  std::vector<CriticalPoint> points;  // strictly increasing sigma
};

struct CriticalPointOptions {
  double regularity_floor = 1e-6;
  double location_tol = 1e-12;
  double intervals_per_unit = 2048.0;
  int max_doublings = 6;
};

/// Complete preimage w^{-1}(value) within the domain.
CriticalPointSet critical_points(const AngularProfile& profile, double value,
                                 const CriticalPointOptions& opts = {});

/// Geometry, densities, surface tension, and both background profiles.
/// Build through `make_setup`, which validates and assigns profile domains.
struct ProblemSetup {
  double rho_plus = 1.0;
  double rho_minus = 0.0;
  double alpha = 0.0;
  double r_in = 0.0;
  double r_out = kInf;
  AngularProfile profile_plus;
  AngularProfile profile_minus;

  double epsilon() const { return rho_minus / rho_plus; }
  bool disk() const { return r_in == 0.0; }
  bool unbounded_outer() const { return r_out == kInf; }
  double s_in() const;
  double s_out() const;
};

ProblemSetup make_setup(double rho_plus, double rho_minus, double alpha, double r_in,
                        double r_out, const AngularProfile& plus,
                        const AngularProfile& minus);

}  // namespace circstab
