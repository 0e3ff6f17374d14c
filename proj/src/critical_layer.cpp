#include "circstab/critical_layer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "circstab/ode.hpp"

namespace circstab {

namespace {

using Real4 = ode::Vector<double, 4>;
using Cplx2 = ode::Vector<cplx, 2>;

double abs_k(int k) {
  if (k == 0) throw Error(ErrorCode::BadParams, "wave number must be nonzero");
  return std::abs(static_cast<double>(k));
}

// Far end of the outer side and whether it is a truncation of an unbounded domain.
double outer_far(const ProblemSetup& setup, const AngularProfile& prof, double ak,
                 double beyond = 0.0) {
  if (!setup.unbounded_outer()) return setup.s_out();
  return std::max({prof.quiet_above(), 0.0, beyond}) + 12.0 / ak;
}

// Uniform sample positions on [from, to] (either order), endpoints included.
std::vector<double> samples_between(double from, double to, double per_unit, int at_least) {
  const int n = std::max(at_least, static_cast<int>(std::ceil(std::abs(to - from) * per_unit)));
  std::vector<double> g(n + 1);
  for (int i = 0; i <= n; ++i) g[i] = from + (to - from) * static_cast<double>(i) / n;
  g[n] = to;
  return g;
}

}  // namespace

CriticalLayerState integrate_full(const ProblemSetup& setup, const Mode& mode,
                                  const CriticalLayerConfig& cfg) {
  const double I = mode.c.imag(), R = mode.c.real();
  if (I == 0.0) throw Error(ErrorCode::BadParams, "full critical-layer system needs Im c != 0");
  const double ak = abs_k(mode.k);
  const double k2 = ak * ak;
  const AngularProfile& prof = setup.profile_minus;
  const bool irrot = prof.irrotational_forcing();

  CriticalLayerState st;
  st.variant = LayerVariant::Full;
  st.mode = mode;
  st.im_sign = I > 0.0 ? 1 : -1;

  const double far = outer_far(setup, prof, ak);
  Real4 y;
  if (setup.unbounded_outer())
    y << 1.0, -ak, k2, 0.0;  // zeta = e^{-|k| (s - far)} at the truncation point
  else
    y << 0.0, 0.0, 1.0, 0.0;

  std::vector<double> stops{far};
  {
    auto pts = prof.distributional_points();
    std::sort(pts.rbegin(), pts.rend());
    for (double s : pts)
      if (s > 0.0 && s < far) stops.push_back(s);
  }
  stops.push_back(0.0);

  ode::Options oo;
  oo.rtol = cfg.rtol;
  oo.atol = cfg.atol;
  const double per_unit = cfg.trace_points / far;

  auto renormalise = [&] {
    const double mag = std::abs(y[0]) + std::abs(y[1]) + std::abs(y[2]) + std::abs(y[3]);
    if (mag > 1e100) {
      const double f = 1.0 / mag;
      y *= f;
      for (auto* v : {&st.xi1, &st.xi2, &st.xi3, &st.Phi})
        for (double& x : *v) x *= f;
    }
  };
  auto record = [&](double s) {
    st.s.push_back(s);
    st.xi1.push_back(y[0]);
    st.xi2.push_back(y[1]);
    st.xi3.push_back(y[2]);
    st.Phi.push_back(y[3]);
  };

  double h_hint = 0.0;
  for (size_t seg = 0; seg + 1 < stops.size(); ++seg) {
    const double from = stops[seg], to = stops[seg + 1];
    const double a = std::min(from, to), b = std::max(from, to);
    auto rhs = [&](double s, const Real4& v) {
      const Jet j = prof.jet(s, hint_in(s, a, b));
      const double d = j.w - R;
      const double den = d * d + I * I;
      const double vd = irrot ? 0.0 : 2.0 * j.w1 + j.w2;
      const double re_q = k2 + vd * d / den;
      const double im_q = vd * I / den;
      Real4 out;
      out << 2.0 * v[1], re_q * v[0] + v[2], 2.0 * re_q * v[1] + 2.0 * im_q * v[3], im_q * v[0];
      return out;
    };
    auto cap = [&](double s, const Real4&) {
      if (irrot) return kInf;
      const Jet j = prof.jet(s, hint_in(s, a, b));
      return std::max(0.1 * std::abs(j.w - mode.c) / std::max(std::abs(j.w1), 1.0), 1e-14);
    };

    const std::vector<double> grid =
        cfg.keep_trace ? samples_between(from, to, per_unit, 8) : std::vector<double>{from, to};
    if (cfg.keep_trace && st.s.empty()) record(grid.front());
    for (size_t i = 1; i < grid.size(); ++i) {
      ode::Stats stats;
      ode::Options chunk = oo;
      chunk.h_init = h_hint;
      y = ode::integrate<Real4>(rhs, grid[i - 1], y, grid[i], chunk, &stats, cap);
      h_hint = stats.last_h;
      if (cfg.keep_trace) record(grid[i]);
      renormalise();
    }

    if (seg + 2 < stops.size()) {
      // zeta' -> zeta' + J zeta with J the signed Dirac jump in the traversal direction
      const double s = to;
      const Jet j = prof.jet(s, hint_in(s, a, b));
      const cplx J = -prof.varpi_dot_mass(s) / (j.w - mode.c);
      const double x1 = y[0], x2 = y[1], x3 = y[2], ph = y[3];
      y[1] = x2 + J.real() * x1;
      y[3] = ph + J.imag() * x1;
      y[2] = x3 + 2.0 * (J.real() * x2 + J.imag() * ph) + std::norm(J) * x1;
      if (cfg.keep_trace) record(s);
    }
  }

  if (!(y[0] > 0.0)) throw Error(ErrorCode::InterfaceZero, "xi1 vanishes at the interface");
  const double f = 1.0 / y[0];
  y *= f;
  for (auto* v : {&st.xi1, &st.xi2, &st.xi3, &st.Phi})
    for (double& x : *v) x *= f;
  st.at0 = {y[0], y[1], y[2], y[3]};
  st.zeta_prime_at_0 = cplx(y[1], y[3]);

  auto defect = [](double x1, double x2, double x3, double ph) {
    return std::abs(x2 * x2 + ph * ph - x1 * x3) / (1.0 + x1 * x3);
  };
  st.pythagorean_defect = defect(y[0], y[1], y[2], y[3]);
  for (size_t i = 0; i < st.s.size(); ++i)
    st.pythagorean_defect =
        std::max(st.pythagorean_defect, defect(st.xi1[i], st.xi2[i], st.xi3[i], st.Phi[i]));
  if (st.pythagorean_defect > 1e-6)
    throw Error(ErrorCode::IdentityDrift,
                "Pythagorean defect " + std::to_string(st.pythagorean_defect));
  return st;
}

namespace {

// Local solutions of zeta'' = (k^2 + varpi'/(w - R)) zeta at x = s - sigma:
// phi_a = x + (beta/2) x^2 + a3 x^3 and phi_b = beta phi_a log|x| + 1 + d2 x^2.
struct Frobenius {
  double beta, a2, a3, d2;

  Frobenius(const Jet& j, double k2) {
    const double vd = 2.0 * j.w1 + j.w2;
    const double vdd = 2.0 * j.w2 + j.w3;
    beta = vd / j.w1;
    const double p1 = vdd / j.w1 - vd * j.w2 / (2.0 * j.w1 * j.w1);
    a2 = 0.5 * beta;
    a3 = (beta * a2 + p1 + k2) / 6.0;
    d2 = 0.5 * (p1 + k2 - 1.5 * beta * beta);
  }

  // (phi_a, phi_a', phi_b, phi_b') at x != 0
  std::array<double, 4> at(double x) const {
    const double pa = x + a2 * x * x + a3 * x * x * x;
    const double dpa = 1.0 + 2.0 * a2 * x + 3.0 * a3 * x * x;
    const double lg = std::log(std::abs(x));
    const double pb = beta * pa * lg + 1.0 + d2 * x * x;
    const double dpb = beta * (dpa * lg + pa / x) + 2.0 * d2 * x;
    return {pa, dpa, pb, dpb};
  }
};

}  // namespace

CriticalLayerState integrate_limit(const ProblemSetup& setup, int k, double R, int im_sign,
                                   const CriticalLayerConfig& cfg) {
  const double ak = abs_k(k);
  const double k2 = ak * ak;
  const AngularProfile& prof = setup.profile_minus;
  const bool irrot = prof.irrotational_forcing();
  const double sg = im_sign >= 0 ? 1.0 : -1.0;

  CriticalLayerState st;
  st.variant = LayerVariant::Limit;
  st.mode = Mode{k, cplx(R, 0.0)};
  st.im_sign = static_cast<int>(sg);
  st.critical = critical_points(prof, R);
  const auto& pts = st.critical.points;

  const double far = outer_far(setup, prof, ak, pts.empty() ? 0.0 : pts.back().sigma);

  // windows around the critical points
  double delta0 = cfg.delta0;
  {
    std::vector<double> marks{0.0};
    for (const auto& p : pts) marks.push_back(p.sigma);
    if (!setup.unbounded_outer()) marks.push_back(setup.s_out());
    double gap = kInf;
    for (size_t i = 1; i < marks.size(); ++i) gap = std::min(gap, marks[i] - marks[i - 1]);
    if (!pts.empty() && !(gap > 0.0))
      throw Error(ErrorCode::NotRegularValue, "critical point on the domain boundary");
    if (delta0 <= 0.0) delta0 = 0.25 * gap;
    if (!pts.empty() && (pts.front().sigma - delta0 <= 0.0 || 2.0 * delta0 > gap ||
                         (!setup.unbounded_outer() && pts.back().sigma + delta0 >= setup.s_out())))
      throw Error(ErrorCode::BadParams, "critical windows overlap or leave the domain");
  }
  const double dp = std::min(cfg.frobenius_offset, 0.5 * delta0);

  // events from the far end toward 0: crossings (index into pts) and Dirac masses
  struct Event {
    double s;
    int crossing;  // -1 for a Dirac mass
  };
  std::vector<Event> events;
  if (!irrot)
    for (int i = 0; i < static_cast<int>(pts.size()); ++i) events.push_back({pts[i].sigma, i});
  for (double s : prof.distributional_points())
    if (s > 0.0 && s < far) events.push_back({s, -1});
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.s > b.s; });

  Cplx2 y;
  if (setup.unbounded_outer())
    y << 1.0, -ak;
  else
    y << 0.0, 1.0;

  ode::Options oo;
  oo.rtol = cfg.rtol;
  oo.atol = cfg.atol;
  const double per_unit = cfg.trace_points / far;
  std::vector<double> xi1_crit(pts.size(), 0.0);
  std::vector<cplx> zeta_s, zeta_d;

  auto renormalise = [&] {
    const double mag = std::abs(y[0]) + std::abs(y[1]);
    if (mag > 1e100) {
      const double f = 1.0 / mag;
      y *= f;
      for (auto& z : zeta_s) z *= f;
      for (auto& z : zeta_d) z *= f;
      for (double& x : xi1_crit) x *= f * f;
    }
  };
  auto record = [&](double s) {
    st.s.push_back(s);
    zeta_s.push_back(y[0]);
    zeta_d.push_back(y[1]);
  };

  auto run = [&](double from, double to) {
    if (from == to) return;
    const double a = std::min(from, to), b = std::max(from, to);
    auto rhs = [&](double s, const Cplx2& v) {
      const Jet j = prof.jet(s, hint_in(s, a, b));
      const double q = irrot ? k2 : k2 + (2.0 * j.w1 + j.w2) / (j.w - R);
      Cplx2 out;
      out << v[1], q * v[0];
      return out;
    };
    const std::vector<double> grid =
        cfg.keep_trace ? samples_between(from, to, per_unit, 4) : std::vector<double>{from, to};
    if (cfg.keep_trace && st.s.empty()) record(grid.front());
    for (size_t i = 1; i < grid.size(); ++i) {
      y = ode::integrate<Cplx2>(rhs, grid[i - 1], y, grid[i], oo);
      if (cfg.keep_trace) record(grid[i]);
      renormalise();
    }
  };

  double pos = far;
  for (const Event& ev : events) {
    if (ev.crossing < 0) {
      run(pos, ev.s);
      const Jet j = prof.jet(ev.s, ev.s + 1e-9);
      y[1] -= prof.varpi_dot_mass(ev.s) * y[0] / (j.w - R);
      if (cfg.keep_trace) record(ev.s);
      pos = ev.s;
      continue;
    }
    const CriticalPoint& cp = pts[ev.crossing];
    run(pos, cp.sigma + dp);
    const Frobenius fb(prof.jet(cp.sigma), k2);
    const auto r = fb.at(dp);
    Eigen::Matrix2d M;
    M << r[0], r[2], r[1], r[3];
    const Eigen::Matrix2d Mi = M.inverse();
    cplx Aa = Mi(0, 0) * y[0] + Mi(0, 1) * y[1];
    const cplx Ab = Mi(1, 0) * y[0] + Mi(1, 1) * y[1];
    xi1_crit[ev.crossing] = std::norm(Ab);
    const double gamma = M_PI * sg * cp.varpi_dot / std::abs(cp.w_dot);
    Aa -= cplx(0.0, gamma) * Ab;
    const auto l = fb.at(-dp);
    y << Aa * l[0] + Ab * l[2], Aa * l[1] + Ab * l[3];
    pos = cp.sigma - dp;
  }
  run(pos, 0.0);

  const double n0 = std::norm(y[0]);
  if (!(n0 > 0.0)) throw Error(ErrorCode::InterfaceZero, "zeta vanishes at the interface");
  const double f = 1.0 / n0;
  for (size_t i = 0; i < st.s.size(); ++i) {
    const cplx z = zeta_s[i], zd = zeta_d[i];
    st.xi1.push_back(std::norm(z) * f);
    st.xi2.push_back(std::real(std::conj(z) * zd) * f);
    st.xi3.push_back(std::norm(zd) * f);
    st.Phi.push_back(std::imag(std::conj(z) * zd) * f);
  }
  const cplx z0 = y[0], zd0 = y[1];
  st.at0 = {1.0, std::real(std::conj(z0) * zd0) * f, std::norm(zd0) * f,
            std::imag(std::conj(z0) * zd0) * f};
  st.zeta_prime_at_0 = zd0 / z0;

  st.xi1_at_critical.resize(pts.size());
  double sum = 0.0;
  for (size_t i = 0; i < pts.size(); ++i) {
    st.xi1_at_critical[i] = xi1_crit[i] * f;
    if (!irrot) sum += pts[i].varpi_dot * st.xi1_at_critical[i] / std::abs(pts[i].w_dot);
  }
  st.phi_sum_formula = -sg * M_PI * sum;
  return st;
}

BifurcationPrediction predict_bifurcation(const ProblemSetup& setup, int k, Branch branch,
                                          const CriticalLayerConfig& cfg) {
  const SmallDensityExpansion ex = small_density_expansion(setup, k);
  BifurcationPrediction out;
  out.branch = branch;
  const size_t idx = branch == Branch::plus ? 0 : 1;
  out.c_k = branch == Branch::plus ? ex.c_plus_k : ex.c_minus_k;
  out.h_I = ex.h_I_0[idx];

  const CriticalLayerState lim = integrate_limit(setup, k, out.c_k, +1, cfg);
  out.critical = lim.critical;
  const auto& pts = out.critical.points;
  if (pts.empty())
    throw Error(ErrorCode::HypothesisViolated, "c_k = " + std::to_string(out.c_k) +
                                                   " is not in the range of the outer wind");
  for (const auto& p : pts)
    if (out.c_k * p.varpi_dot > 0.0)
      throw Error(ErrorCode::HypothesisViolated,
                  "c_k varpi' > 0 at the critical point " + std::to_string(p.sigma));
  const size_t n = pts.size();
  const bool strict = out.c_k * pts[n - 1].varpi_dot < 0.0 ||
                      (n >= 2 && out.c_k * pts[n - 2].varpi_dot < 0.0);
  if (!strict)
    throw Error(ErrorCode::HypothesisViolated,
                "c_k varpi' is not negative at the last two critical points");

  out.c_sharp = out.h_I * lim.phi_sum_formula;
  if (std::abs(out.c_sharp) <= 1e-12)
    throw Error(ErrorCode::ZeroPrediction, "predicted growth coefficient vanishes");
  if (out.c_sharp < 0.0)
    throw Error(ErrorCode::HypothesisViolated,
                "predicted growth coefficient is negative (" + std::to_string(out.c_sharp) + ")");
  return out;
}

BifurcationSolve solve_unstable_mode(const ProblemSetup& setup, int k, Branch branch,
                                     const BifurcationOptions& opts) {
  const double eps = setup.epsilon();
  if (eps > opts.epsilon_cap)
    throw Error(ErrorCode::BadParams, "density ratio above the cap " + std::to_string(opts.epsilon_cap));
  const BifurcationPrediction pred = predict_bifurcation(setup, k, branch, opts.layer);

  BifurcationSolve out;
  out.c_k = pred.c_k;
  out.c_sharp = pred.c_sharp;
  out.c_final = pred.c_k;
  if (eps == 0.0) {
    out.accepted = true;
    return out;
  }

  using V2 = Eigen::Vector2d;
  auto lambda = [&](const V2& nu) {
    const cplx c(pred.c_k + nu[0], eps * (pred.c_sharp + nu[1]));
    const CriticalLayerState st = integrate_full(setup, Mode{k, c}, opts.layer);
    const auto roots = frozen_dispersion_roots(setup, k, st.zeta_prime_at_0);
    const cplx r = std::abs(roots[0] - c) <= std::abs(roots[1] - c) ? roots[0] : roots[1];
    return V2(pred.c_k + nu[0] - r.real(), pred.c_sharp + nu[1] - r.imag() / eps);
  };

  V2 nu = V2::Zero();
  V2 L = lambda(nu);
  for (int it = 0;; ++it) {
    out.iterations = it;
    if (L.cwiseAbs().maxCoeff() <= opts.tol) break;
    if (it >= opts.max_iter)
      throw Error(ErrorCode::NewtonDiverged, "no convergence in " + std::to_string(it) + " iterations");
    Eigen::Matrix2d J;
    for (int col = 0; col < 2; ++col) {
      V2 nh = nu;
      const double h = 1e-7 * (1.0 + std::abs(nu[col]));
      nh[col] += h;
      J.col(col) = (lambda(nh) - L) / h;
    }
    V2 step = J.partialPivLu().solve(L);
    bool improved = false;
    for (int halving = 0; halving <= opts.max_halvings; ++halving) {
      const V2 trial = nu - step;
      if (pred.c_sharp + trial[1] != 0.0) {
        const V2 Lt = lambda(trial);
        if (Lt.cwiseAbs().maxCoeff() < L.cwiseAbs().maxCoeff()) {
          nu = trial;
          L = Lt;
          improved = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!improved)
      throw Error(ErrorCode::NewtonDiverged, "damped Newton step does not reduce the residual");
  }

  out.nu1 = nu[0];
  out.nu2 = nu[1];
  out.c_final = cplx(pred.c_k + nu[0], eps * (pred.c_sharp + nu[1]));
  out.lambda_residuals = {std::abs(L[0]), std::abs(L[1])};
  out.accepted = true;
  if (!(out.c_final.imag() > 0.0))
    throw Error(ErrorCode::LeftHalfPlane, "converged mode has Im c <= 0");
  return out;
}

LimitConvergence limit_convergence(const ProblemSetup& setup, int k, double R,
                                   const CriticalLayerConfig& cfg) {
  CriticalLayerConfig c = cfg;
  c.keep_trace = false;
  LimitConvergence out;
  out.phi_limit = integrate_limit(setup, k, R, +1, c).at0[3];
  std::vector<double> xs, ys;
  for (double im : cfg.eta_grid) {
    const CriticalLayerState full = integrate_full(setup, Mode{k, cplx(R, im)}, c);
    ConvergencePoint p{im, full.at0[3], std::abs(full.at0[3] - out.phi_limit)};
    out.points.push_back(p);
    xs.push_back(im);
    ys.push_back(p.error);
  }
  out.fitted_rate = loglog_slope(xs, ys);
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw Error(ErrorCode::BadParams, "slope fit needs at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw Error(ErrorCode::BadParams, "slope fit needs positive data");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ScalingStudy epsilon_scaling_study(const LipschitzParams& params,
                                   const std::vector<double>& ladder) {
  if (ladder.size() < 2) throw Error(ErrorCode::BadParams, "ladder needs at least two values");
  OracleParams op;
  op.k = params.k;
  op.alpha = params.alpha;
  op.rho_plus = params.rho_plus;
  op.B = params.B;
  op.omega_star = params.omega_star;
  op.b = params.b;
  op.s_star = params.s_star;
  const AngularProfile outer = oracle_setup(OracleCase::LipschitzOuter, op).profile_minus;

  ScalingStudy out;
  out.lambda_plus = lipschitz_lambdas(params)[1];
  out.min_gap = kInf;
  std::vector<double> eps, im, shift_eps, shift;
  for (double e : ladder) {
    const LipschitzRoots r = lipschitz_case_roots(params, e);
    ScalingSample smp{e, r.upper, kInf};
    for (const auto& p : critical_points(outer, r.upper.real()).points)
      smp.critical_layer_gap = std::min(smp.critical_layer_gap, std::abs(p.sigma - params.s_star));
    out.min_gap = std::min(out.min_gap, smp.critical_layer_gap);
    out.samples.push_back(smp);
    eps.push_back(e);
    im.push_back(r.upper.imag());
    const double d = std::abs(r.upper.real() - out.lambda_plus);
    if (d > 0.0) {
      shift_eps.push_back(e);
      shift.push_back(d);
    }
  }
  out.imag_slope = loglog_slope(eps, im);
  out.real_shift_slope = shift.size() >= 2 ? loglog_slope(shift_eps, shift) : kInf;
  return out;
}

}  // namespace circstab
