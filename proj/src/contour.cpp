#include "circstab/contour.hpp"

#include <cmath>
#include <string>

#include "circstab/error.hpp"

namespace circstab {

using cd = std::complex<double>;

cd point_on(const PathPiece& piece, double t) {
  if (const auto* l = std::get_if<LinePiece>(&piece)) {
    // exact endpoints so that adjacent pieces share evaluations
    if (t == 0.0) return l->from;
    if (t == 1.0) return l->to;
    return l->from + t * (l->to - l->from);
  }
  const auto& a = std::get<ArcPiece>(piece);
  return a.centre + std::polar(a.radius, a.theta_from + t * (a.theta_to - a.theta_from));
}

std::vector<PathPiece> rectangle_path(double re_lo, double re_hi, double im_lo, double im_hi) {
  const cd z00(re_lo, im_lo), z10(re_hi, im_lo), z11(re_hi, im_hi), z01(re_lo, im_hi);
  return {LinePiece{z00, z10}, LinePiece{z10, z11}, LinePiece{z11, z01}, LinePiece{z01, z00}};
}

std::vector<PathPiece> half_disk_path(double centre, double radius, double floor) {
  const double th = std::asin(floor / radius);
  const double dx = radius * std::cos(th);
  const cd left(centre - dx, floor), right(centre + dx, floor);
  return {LinePiece{left, right}, ArcPiece{cd(centre, 0.0), radius, th, M_PI - th}};
}

WindingResult winding_number(const std::function<cd(cd)>& f, const std::vector<PathPiece>& path,
                             const WindingOptions& opts) {
  WindingResult res;
  res.min_abs = INFINITY;
  auto eval = [&](const PathPiece& piece, double t) {
    const cd z = point_on(piece, t);
    const cd v = f(z);
    ++res.evaluations;
    const double av = std::abs(v);
    res.min_abs = std::min(res.min_abs, av);
    if (!std::isfinite(av))
      throw Error(ErrorCode::IntegratorFailure, "non-finite value on the contour");
    if (av <= opts.small_value)
      throw Error(ErrorCode::BoundaryRootSuspected,
                  "function vanishes on the contour near " + std::to_string(z.real()) + "+" +
                      std::to_string(z.imag()) + "i");
    return v;
  };

  // A pair of zeros between two samples turns the phase by 2 pi and aliases to nothing, so an
  // interval is only accepted when the midpoint also agrees with linear interpolation: near a
  // zero close to the path f dips well below the chord.
  std::function<double(const PathPiece&, double, cd, double, cd, int)> refine =
      [&](const PathPiece& piece, double t0, cd f0, double t1, cd f1, int depth) -> double {
    const double tm = 0.5 * (t0 + t1);
    const cd fm = eval(piece, tm);
    const double d0 = std::arg(fm / f0), d1 = std::arg(f1 / fm);
    const bool smooth = std::abs(d0) < opts.max_phase_step && std::abs(d1) < opts.max_phase_step &&
                        std::abs(fm - 0.5 * (f0 + f1)) <= opts.chord_tolerance * std::abs(fm);
    if (smooth) return d0 + d1;
    if (depth >= opts.max_bisections) {
      const cd z = point_on(piece, tm);
      throw Error(ErrorCode::BoundaryRootSuspected,
                  "phase does not resolve on the contour near " + std::to_string(z.real()) + "+" +
                      std::to_string(z.imag()) + "i");
    }
    return refine(piece, t0, f0, tm, fm, depth + 1) + refine(piece, tm, fm, t1, f1, depth + 1);
  };

  for (const auto& piece : path) {
    const int n = std::max(opts.min_points_per_piece, 2);
    double t_prev = 0.0;
    cd f_prev = eval(piece, 0.0);
    for (int i = 1; i <= n; ++i) {
      const double t = static_cast<double>(i) / n;
      const cd fv = eval(piece, t);
      res.total_phase += refine(piece, t_prev, f_prev, t, fv, 0);
      t_prev = t;
      f_prev = fv;
    }
  }
  const double turns = res.total_phase / (2.0 * M_PI);
  res.winding = static_cast<int>(std::lround(turns));
  if (std::abs(turns - res.winding) > 0.25)
    throw Error(ErrorCode::NonConvergence, "winding number is not close to an integer");
  return res;
}

}  // namespace circstab
