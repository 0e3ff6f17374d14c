#pragma once

// Root finding for the dispersion residual in a box of the upper half plane:
// winding-number counts, quadrisection, Newton polish and the absence check
// around a real phase velocity.

#include <array>
#include <optional>
#include <vector>

#include "circstab/dispersion.hpp"

namespace circstab {

enum class RegionSource { SemicircleBound, UserSpecified };

struct SearchRegion {
  double re_lo = 0.0, re_hi = 0.0;
  double im_lo = 1e-6, im_hi = 0.0;
  RegionSource source = RegionSource::UserSpecified;

  bool empty() const { return !(re_hi > re_lo) || !(im_hi > im_lo); }
};

struct SearchOptions {
  double eta_floor = 1e-6;
  /// Semicircle box is inflated by this fraction of the radius plus `inflate_abs`.
  double inflate = 0.1;
  double inflate_abs = 1e-3;
  int max_depth = 40;
  double jitter = 1e-5;
  int jitter_retries = 3;
  int newton_max_iter = 60;
  /// |D| below small_rel * scale on a contour is treated as a root on the contour.
  double small_rel = 1e-12;
  bool identity_gate = true;
  double identity_tol = 1e-6;
  DispersionOptions dispersion;
};

/// Bounding box of the upper half of the semicircle disk, inflated and cut at eta_floor.
/// Throws BadSetup when rho_+ < rho_- or when no bound applies (|k| = 1, rho_+ = rho_-).
SearchRegion semicircle_region(const ProblemSetup& setup, int k, const SearchOptions& opts = {});

/// Zeros of D in the rectangle, counted with multiplicity.
int count_roots(const ProblemSetup& setup, int k, const SearchRegion& region,
                const SearchOptions& opts = {});

struct CatalogEntry {
  cplx c;
  double abs_D = 0.0;
  int multiplicity = 1;
  int newton_iterations = 0;
  std::optional<std::array<double, 2>> identity_defects;  // (imaginary, real)
};

struct ModeCatalog {
  int k = 0;
  std::vector<CatalogEntry> roots;  // sorted by (Re c, Im c)
  int counted = 0;
  SearchRegion region;
  long evaluations = 0;
};

ModeCatalog find_modes(const ProblemSetup& setup, int k, const SearchRegion& region,
                       const SearchOptions& opts = {});

struct AbsenceResult {
  bool confirmed_absent = false;
  std::optional<Mode> found;
  int count = 0;
  double center = 0.0, radius = 0.0;
};

/// Counts roots in the half disk |c - center| <= radius, Im c >= eta_floor.
/// Without an explicit radius, center must lie outside range(w_-) and the radius
/// is half its distance to that range.
AbsenceResult verify_no_unstable_near(const ProblemSetup& setup, int k, double center,
                                      std::optional<double> radius = std::nullopt,
                                      const SearchOptions& opts = {});

}  // namespace circstab
