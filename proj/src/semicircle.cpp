#include "circstab/semicircle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace circstab {

std::pair<double, double> combined_range(const ProblemSetup& setup) {
  const auto [mp, Mp] = range(setup.profile_plus);
  const auto [mm, Mm] = range(setup.profile_minus);
  return {std::min(mp, mm), std::max(Mp, Mm)};
}

SemicircleReport bound(const ProblemSetup& setup, int k) {
  SemicircleReport r;
  std::tie(r.m, r.M) = combined_range(setup);
  r.applicable = setup.rho_plus >= setup.rho_minus;
  const double k2 = static_cast<double>(k) * k;
  r.condition_strict =
      setup.alpha * (k2 - 1.0) > r.m * r.M * (setup.rho_plus - setup.rho_minus);
  r.center = 0.5 * (r.m + r.M);
  r.radius = 0.5 * (r.M - r.m);
  return r;
}

namespace {

struct SideSums {
  double im = 0.0, re = 0.0;          // Simpson values
  double im_trap = 0.0, re_trap = 0.0;
  double im_abs = 0.0, re_abs = 0.0;  // integrals of |integrand|
  double X = 0.0;
  double min_X = kInf, max_X = 0.0;
  double max_chi = 0.0;
};

SideSums integrate_side(const AngularProfile& prof, double rho, const BvpSolution& sol) {
  SideSums out;
  const auto& tr = sol.trace;
  const double k2 = static_cast<double>(sol.mode.k) * sol.mode.k;
  const cplx c = sol.mode.c;
  const double R = c.real(), I = c.imag();
  const double w0 = prof.jet(0.0).w;

  for (const auto& [p, q] : smooth_runs(tr)) {
    const double a = std::min(tr[p].s, tr[q - 1].s), b = std::max(tr[p].s, tr[q - 1].s);
    const size_t n = q - p;
    std::vector<double> h(n), f_im(n), f_re(n), g_im(n), g_re(n), fx(n);
    for (size_t i = p; i < q; ++i) {
      const Jet j = prof.jet(tr[i].s, hint_in(tr[i].s, a, b));
      const cplx d = j.w - c;
      const cplx chi = (w0 - c) / d * tr[i].zeta;
      const cplx chi_dot = (w0 - c) * (tr[i].zeta_dot / d - j.w1 * tr[i].zeta / (d * d));
      const double X = k2 * std::norm(chi) + std::norm(chi_dot) - 2.0 * std::real(chi * std::conj(chi_dot));
      out.min_X = std::min(out.min_X, X);
      out.max_X = std::max(out.max_X, X);
      out.max_chi = std::max(out.max_chi, std::abs(chi));
      const size_t t = i - p;
      h[t] = tr[i].s;
      f_im[t] = rho * (R - j.w) * X;
      f_re[t] = rho * ((j.w - R) * (j.w - R) - I * I) * X;
      g_im[t] = std::abs(f_im[t]);
      g_re[t] = std::abs(f_re[t]);
      fx[t] = rho * X;
    }
    // paired intervals: Simpson (nonuniform form) vs trapezoid
    auto quad = [&](const std::vector<double>& f, double* simpson, double* trap) {
      size_t i = 0;
      for (; i + 2 < n; i += 2) {
        const double h0 = std::abs(h[i + 1] - h[i]), h1 = std::abs(h[i + 2] - h[i + 1]);
        const double hs = h0 + h1;
        *simpson += hs / 6.0 *
                    ((2.0 - h1 / h0) * f[i] + hs * hs / (h0 * h1) * f[i + 1] + (2.0 - h0 / h1) * f[i + 2]);
        *trap += 0.5 * h0 * (f[i] + f[i + 1]) + 0.5 * h1 * (f[i + 1] + f[i + 2]);
      }
      for (; i + 1 < n; ++i) {
        const double hh = std::abs(h[i + 1] - h[i]);
        *simpson += 0.5 * hh * (f[i] + f[i + 1]);
        *trap += 0.5 * hh * (f[i] + f[i + 1]);
      }
    };
    double dummy = 0.0;
    quad(f_im, &out.im, &out.im_trap);
    quad(f_re, &out.re, &out.re_trap);
    quad(g_im, &out.im_abs, &dummy);
    quad(g_re, &out.re_abs, &dummy);
    quad(fx, &out.X, &dummy);
  }
  return out;
}

}  // namespace

IdentityCheck verify_identities(const ProblemSetup& setup, const Mode& mode,
                                const BvpSolution& plus, const BvpSolution* minus,
                                int min_trace_points) {
  if (mode.c.imag() == 0.0)
    throw Error(ErrorCode::BadParams, "identities need a non-real phase velocity");
  const bool two_phase = setup.rho_minus != 0.0;
  auto enough = [&](const BvpSolution* s) {
    return s && s->trace.size() >= static_cast<size_t>(min_trace_points);
  };
  if (!enough(&plus) || (two_phase && !enough(minus)))
    throw Error(ErrorCode::InsufficientTrace,
                "identity quadrature needs >= " + std::to_string(min_trace_points) +
                    " trace samples per side");

  const SideSums sp = integrate_side(setup.profile_plus, setup.rho_plus, plus);
  SideSums sm;
  if (two_phase) sm = integrate_side(setup.profile_minus, setup.rho_minus, *minus);

  const double R = mode.c.real(), I = mode.c.imag();
  const double k2 = static_cast<double>(mode.k) * mode.k;
  const double drho = setup.rho_minus - setup.rho_plus;

  const double rhs_im = R * drho;
  const double rhs_re = setup.alpha * (k2 - 1.0) + drho * (R * R - I * I);
  const double den_im = sp.im_abs + sm.im_abs + std::abs(rhs_im) + 1e-300;
  const double den_re = sp.re_abs + sm.re_abs + std::abs(rhs_re) + 1e-300;

  IdentityCheck out;
  out.im_defect = std::abs(sp.im + sm.im - rhs_im) / den_im;
  out.re_defect = std::abs(sp.re + sm.re - rhs_re) / den_re;
  out.im_quadrature_error = std::abs(sp.im + sm.im - sp.im_trap - sm.im_trap) / den_im;
  out.re_quadrature_error = std::abs(sp.re + sm.re - sp.re_trap - sm.re_trap) / den_re;
  const double max_X = std::max(sp.max_X, two_phase ? sm.max_X : 0.0);
  const double min_X = std::min(sp.min_X, two_phase ? sm.min_X : kInf);
  out.min_X_relative = max_X > 0.0 ? min_X / max_X : 0.0;
  out.integral_X = {sp.X, sm.X};
  out.max_chi = {sp.max_chi, sm.max_chi};
  return out;
}

IdentityCheck verify_identities(const ProblemSetup& setup, const Mode& mode) {
  BvpOptions opts;
  opts.keep_trace = true;
  const BvpSolution plus = solve_side(setup, Side::plus, mode, opts);
  if (setup.rho_minus == 0.0) return verify_identities(setup, mode, plus, nullptr);
  const BvpSolution minus = solve_side(setup, Side::minus, mode, opts);
  return verify_identities(setup, mode, plus, &minus);
}

}  // namespace circstab
