#pragma once

// Winding number of an analytic function along a closed path made of line
// segments and circular arcs, with adaptive refinement of the phase increments.

#include <complex>
#include <functional>
#include <variant>
#include <vector>

namespace circstab {

struct LinePiece {
  std::complex<double> from, to;
};

struct ArcPiece {
  std::complex<double> centre;
  double radius = 1.0;
  double theta_from = 0.0, theta_to = 0.0;
};

using PathPiece = std::variant<LinePiece, ArcPiece>;

std::complex<double> point_on(const PathPiece& piece, double t);

/// Counter-clockwise rectangle [re_lo, re_hi] x [im_lo, im_hi].
std::vector<PathPiece> rectangle_path(double re_lo, double re_hi, double im_lo, double im_hi);

/// Upper half-disk |z - centre| <= radius cut at Im z = floor (floor < radius).
std::vector<PathPiece> half_disk_path(double centre, double radius, double floor);

struct WindingOptions {
  int min_points_per_piece = 16;
  double max_phase_step = 1.5707963267948966;  // pi / 2
  double chord_tolerance = 0.5;  // |f(mid) - chord| relative to |f(mid)| before a step is trusted
  int max_bisections = 30;
  double small_value = 0.0;  // |f| at or below this on the path counts as a boundary root
};

struct WindingResult {
  int winding = 0;
  double total_phase = 0.0;  // radians
  double min_abs = 0.0;
  long evaluations = 0;
};

/// Throws BoundaryRootSuspected when the path passes (numerically) through a zero.
WindingResult winding_number(const std::function<std::complex<double>(std::complex<double>)>& f,
                             const std::vector<PathPiece>& path, const WindingOptions& opts = {});

}  // namespace circstab
