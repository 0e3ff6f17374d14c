#include "circstab/rayleigh_bvp.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>

#include "circstab/ode.hpp"

namespace circstab {

namespace {

using State = ode::Vector<cplx, 2>;

const AngularProfile& profile_of(const ProblemSetup& setup, Side side) {
  return side == Side::plus ? setup.profile_plus : setup.profile_minus;
}

cplx coefficient(const AngularProfile& p, bool irrotational, double k2, cplx c, double s,
                 double hint) {
  if (irrotational) return k2;
  const Jet j = p.jet(s, hint);
  return k2 + j.varpi_dot() / (j.w - c);
}

// Crossings of w = value inside (a, b), located coarsely; only used to grade the trace grid.
std::vector<std::pair<double, double>> rough_crossings(const AngularProfile& p, double value,
                                                       double a, double b) {
  std::vector<std::pair<double, double>> out;
  constexpr int n = 4096;
  double x0 = a;
  double f0 = p.jet(a, hint_in(a, a, b)).w - value;
  for (int i = 1; i <= n; ++i) {
    const double x1 = a + (b - a) * i / n;
    const double f1 = p.jet(x1, hint_in(x1, a, b)).w - value;
    if ((f0 < 0.0) != (f1 < 0.0)) {
      double lo = x0, hi = x1, flo = f0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = p.jet(mid, hint_in(mid, a, b)).w - value;
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      const double s = 0.5 * (lo + hi);
      out.emplace_back(s, p.jet(s, hint_in(s, a, b)).w1);
    }
    x0 = x1;
    f0 = f1;
  }
  return out;
}

// Interior spline nodes of a tabulated profile in (a, b), where w''' jumps.
std::vector<double> spline_nodes(const AngularProfile& p, double a, double b) {
  std::vector<double> out;
  if (const auto* t = std::get_if<TabulatedProfile>(&p.kind()))
    for (double s : t->nodes_s())
      if (s > a && s < b) out.push_back(s);
  return out;
}

constexpr double kLayerDensity = 128.0;

// Ascending sample grid on [a, b]: uniform at the base density, graded
// geometrically towards thin critical layers when Im c is small.
std::vector<double> segment_grid(const AngularProfile& p, bool irrotational, double a, double b,
                                 cplx c, double density) {
  std::vector<double> cuts = spline_nodes(p, a, b);
  cuts.push_back(a);
  cuts.push_back(b);
  std::vector<std::pair<double, double>> layers;  // (sigma, width)
  const double im = std::abs(c.imag());
  if (!irrotational && im < 0.5) {
    for (const auto& [sigma, wd] : rough_crossings(p, c.real(), a, b)) {
      const double width = std::max(im / std::max(std::abs(wd), 1e-12), 1e-12);
      layers.emplace_back(sigma, width);
      for (double d = width; d < 0.5; d *= 2.0) {
        if (sigma - d > a) cuts.push_back(sigma - d);
        if (sigma + d < b) cuts.push_back(sigma + d);
      }
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double u, double v) { return v - u < 1e-14; }),
             cuts.end());

  std::vector<double> grid{a};
  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], hi = cuts[i + 1];
    // near a layer the solution varies on the scale of the distance to it
    double local = density;
    for (const auto& [sigma, width] : layers) {
      const double dist = std::max({lo - sigma, sigma - hi, 0.0});
      local = std::max(local, kLayerDensity / std::max(dist, width));
    }
    long n = std::max<long>(2, static_cast<long>(std::ceil((hi - lo) * local)));
    n += n % 2;  // pairs of equal intervals, for Richardson checks on the trace
    for (long j = 1; j <= n; ++j) grid.push_back(j == n ? hi : lo + (hi - lo) * j / n);
  }
  return grid;
}

}  // namespace

BvpSolution solve_side(const ProblemSetup& setup, Side side, const Mode& mode,
                       const BvpOptions& opts) {
  if (mode.k == 0) throw Error(ErrorCode::BadParams, "wave number must be nonzero");
  const AngularProfile& prof = profile_of(setup, side);
  const double ak = std::abs(static_cast<double>(mode.k));
  const double k2 = ak * ak;
  const cplx c = mode.c;
  const bool irrot = prof.irrotational_forcing();

  if (c.imag() == 0.0) {
    const auto [m, M] = range(prof);
    const bool in_range =
        c.real() >= m - opts.singular_margin && c.real() <= M + opts.singular_margin;
    if (!irrot && in_range)
      throw Error(ErrorCode::SingularCoefficient,
                  "real c=" + std::to_string(c.real()) + " lies in the profile range");
    if (std::abs(prof.jet(0.0, side == Side::plus ? -1.0 : 1.0).w - c.real()) <
        opts.singular_margin)
      throw Error(ErrorCode::SingularCoefficient, "real c equals w at the interface");
  }

  // Far boundary and starting data.
  double far;
  State y;
  if (side == Side::plus) {
    if (setup.disk()) {
      far = std::min(prof.quiet_below(), 0.0) - opts.decay_lengths / ak;
      y << 1.0, ak;
    } else {
      far = setup.s_in();
      y << 0.0, 1.0;
    }
  } else {
    if (setup.unbounded_outer()) {
      far = std::max(prof.quiet_above(), 0.0) + opts.decay_lengths / ak;
      y << 1.0, -ak;
    } else {
      far = setup.s_out();
      y << 0.0, 1.0;
    }
  }
  const double dir = far < 0.0 ? 1.0 : -1.0;

  // Breakpoints in traversal order.
  std::vector<double> stops{far};
  {
    std::vector<double> kinks;
    for (double s : prof.distributional_points())
      if ((s - far) * dir > 0.0 && s * dir < 0.0) kinks.push_back(s);
    std::sort(kinks.begin(), kinks.end(), [&](double u, double v) { return dir * (u - v) < 0; });
    stops.insert(stops.end(), kinks.begin(), kinks.end());
  }
  stops.push_back(0.0);

  ode::Options oo;
  oo.rtol = opts.rtol;
  oo.atol = opts.atol;
  const bool capped = !irrot && std::abs(c.imag()) < 1e-4;

  BvpSolution sol;
  sol.side = side;
  sol.mode = mode;

  const double total = std::abs(far);
  const double density =
      std::max({256.0, 96.0 * ak, static_cast<double>(opts.min_trace_points) / total});

  auto renormalise = [&] {
    const double mag = std::abs(y[0]) + std::abs(y[1]);
    if (mag > 1e150) {
      const double f = 1.0 / mag;
      y *= f;
      for (auto& tp : sol.trace) {
        tp.zeta *= f;
        tp.zeta_dot *= f;
      }
    }
  };

  double h_hint = 0.0;
  for (size_t seg = 0; seg + 1 < stops.size(); ++seg) {
    const double from = stops[seg], to = stops[seg + 1];
    const double a = std::min(from, to), b = std::max(from, to);
    auto rhs = [&](double s, const State& v) {
      State d;
      d << v[1], coefficient(prof, irrot, k2, c, s, hint_in(s, a, b)) * v[0];
      return d;
    };
    auto cap = [&](double s, const State&) {
      if (!capped) return kInf;
      const Jet j = prof.jet(s, hint_in(s, a, b));
      return std::max(1e-2 * std::abs(j.w - c) / std::max(std::abs(j.w1), 1.0), 1e-14);
    };

    if (!opts.keep_trace) {
      y = ode::integrate<State>(rhs, from, y, to, oo, nullptr, cap);
      renormalise();
    } else {
      std::vector<double> grid = segment_grid(prof, irrot, a, b, c, density);
      if (dir < 0.0) std::reverse(grid.begin(), grid.end());
      if (sol.trace.empty()) sol.trace.push_back({grid.front(), y[0], y[1]});
      for (size_t i = 1; i < grid.size(); ++i) {
        ode::Stats st;
        ode::Options chunk = oo;
        chunk.h_init = h_hint;
        y = ode::integrate<State>(rhs, grid[i - 1], y, grid[i], chunk, &st, cap);
        h_hint = st.last_h;
        sol.trace.push_back({grid[i], y[0], y[1]});
        renormalise();
      }
    }

    if (seg + 2 < stops.size()) {
      // Dirac mass in varpi' at `to`: zeta' jumps by mass * zeta / (w - c).
      const double s = to;
      const Jet j = prof.jet(s, hint_in(s, a, b));
      const cplx jump = prof.varpi_dot_mass(s) * y[0] / (j.w - c);
      y[1] += dir * jump;
      if (opts.keep_trace) sol.trace.push_back({s, y[0], y[1]});
    }
  }

  const cplx z0 = y[0];
  const cplx zd0 = y[1];
  if (!(std::abs(z0) >= 1e-12 * std::abs(zd0)) || std::abs(z0) == 0.0)
    throw Error(ErrorCode::InterfaceZero, "zeta vanishes at the interface");
  if (!std::isfinite(std::abs(zd0 / z0)))
    throw Error(ErrorCode::IntegratorFailure, "non-finite interface data");

  const cplx scale = 1.0 / z0;
  for (auto& tp : sol.trace) {
    tp.zeta *= scale;
    tp.zeta_dot *= scale;
  }
  if (!sol.trace.empty()) sol.trace.back().zeta = 1.0;
  sol.zeta_prime_at_0 = zd0 * scale;
  sol.condition_estimate = (std::abs(z0) + std::abs(zd0)) / std::abs(z0);
  sol.raw_phase_at_0 = z0 / std::abs(z0);
  return sol;
}

double hint_in(double s, double a, double b) {
  const double pad = 1e-9 * (b - a);
  return std::clamp(s, a + pad, b - pad);
}

std::vector<std::pair<size_t, size_t>> smooth_runs(const std::vector<TracePoint>& trace) {
  std::vector<std::pair<size_t, size_t>> runs;
  size_t start = 0;
  for (size_t i = 1; i <= trace.size(); ++i) {
    if (i == trace.size() || trace[i].s == trace[i - 1].s) {
      runs.emplace_back(start, i);
      start = i;
    }
  }
  return runs;
}

std::vector<double> fd_weights(double x0, const std::vector<double>& x) {
  // Fornberg's recursion, first derivative only.
  const size_t n = x.size();
  std::vector<std::vector<double>> c(n, std::vector<double>(2, 0.0));
  double c1 = 1.0, c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (size_t i = 1; i < n; ++i) {
    const size_t mn = std::min<size_t>(i, 1);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (size_t j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (size_t kk = mn; kk >= 1; --kk)
          c[i][kk] = c1 * (static_cast<double>(kk) * c[i - 1][kk - 1] - c5 * c[i - 1][kk]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (size_t kk = mn; kk >= 1; --kk)
        c[j][kk] = (c4 * c[j][kk] - static_cast<double>(kk) * c[j][kk - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (size_t i = 0; i < n; ++i) w[i] = c[i][1];
  return w;
}

double residual_check(const BvpSolution& solution, const ProblemSetup& setup) {
  const auto& tr = solution.trace;
  const AngularProfile& prof = profile_of(setup, solution.side);
  const bool irrot = prof.irrotational_forcing();
  const double ak = std::abs(static_cast<double>(solution.mode.k));
  const cplx c = solution.mode.c;

  double worst = 0.0;
  const std::vector<double> nodes = spline_nodes(prof, -kInf, kInf);
  for (const auto& [p0, q0] : smooth_runs(tr)) {
    if (q0 - p0 < 5) continue;
    const double a = std::min(tr[p0].s, tr[q0 - 1].s), b = std::max(tr[p0].s, tr[q0 - 1].s);
    // split at trace points sitting on spline nodes so no stencil straddles a jump in zeta'''
    std::vector<size_t> ends{p0};
    for (size_t j = p0 + 1; j + 1 < q0; ++j)
      if (std::binary_search(nodes.begin(), nodes.end(), tr[j].s)) ends.push_back(j);
    ends.push_back(q0 - 1);
    for (size_t e = 0; e + 1 < ends.size(); ++e) {
      const size_t p = ends[e], q = ends[e + 1] + 1;
      if (q - p < 5) continue;
      for (size_t i = p; i < q; ++i) {
        const size_t lo = std::clamp<size_t>(i >= p + 2 ? i - 2 : p, p, q - 5);
        std::vector<double> xs(5);
        for (size_t j = 0; j < 5; ++j) xs[j] = tr[lo + j].s;
        const auto w = fd_weights(tr[i].s, xs);
        cplx d_zeta = 0.0, d_zeta_dot = 0.0;
        for (size_t j = 0; j < 5; ++j) {
          d_zeta += w[j] * tr[lo + j].zeta;
          d_zeta_dot += w[j] * tr[lo + j].zeta_dot;
        }
        const cplx q_s = coefficient(prof, irrot, ak * ak, c, tr[i].s, hint_in(tr[i].s, a, b));
        const double denom = 1.0 + std::abs(tr[i].zeta) + std::abs(tr[i].zeta_dot);
        worst = std::max(worst, std::abs(d_zeta_dot - q_s * tr[i].zeta) / denom);
        worst = std::max(worst, std::abs(d_zeta - tr[i].zeta_dot) / denom);
      }
    }
  }
  return worst;
}

}  // namespace circstab
