#pragma once

// Adaptive Dormand–Prince 5(4) integrator over Eigen column vectors.
//
// The scalar type is a template parameter so the same stepper drives the
// complex Rayleigh shooting problem and the real 4-vector critical-layer
// system. Integration may run in either direction (t1 < t0 is allowed).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "circstab/error.hpp"

namespace circstab::ode {

template <typename Scalar, int N>
using Vector = Eigen::Matrix<Scalar, N, 1>;

struct Options {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h_init = 0.0;  // 0 selects the automatic starting step
  double h_max = std::numeric_limits<double>::infinity();
  long max_steps = 4'000'000;
  double fixed_step = 0.0;  // > 0 disables error control (order studies)
};

struct Stats {
  long accepted = 0;
  long rejected = 0;
  long rhs_evals = 0;
  double last_h = 0.0;  // magnitude of the last proposed step
};

/// Step-size cap that never binds.
struct NoCap {
  template <typename Vec>
  double operator()(double, const Vec&) const {
    return std::numeric_limits<double>::infinity();
  }
};

namespace detail {

template <typename Vec>
double scaled_rms(const Vec& v, const Vec& y_old, const Vec& y_new, const Options& opt) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double sc =
        opt.atol + opt.rtol * std::max(std::abs(y_old[i]), std::abs(y_new[i]));
    const double r = std::abs(v[i]) / sc;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace detail

/// Integrates y' = rhs(t, y) from t0 to t1 and returns y(t1).
///
/// `cap(t, y)` bounds the step magnitude locally; it is how callers resolve
/// thin regions (critical layers) that the error estimate alone can step over.
template <typename Vec, typename Rhs, typename Cap = NoCap>
Vec integrate(Rhs&& rhs, double t0, const Vec& y0, double t1, const Options& opt,
              Stats* stats = nullptr, Cap&& cap = Cap{}) {
  // Dormand–Prince tableau.
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                   a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  Stats local;
  Stats& st = stats ? *stats : local;

  const double span = t1 - t0;
  if (span == 0.0) return y0;
  const double dir = span > 0 ? 1.0 : -1.0;

  Vec y = y0;
  double t = t0;
  Vec k1 = rhs(t, y);
  ++st.rhs_evals;

  double h;
  if (opt.fixed_step > 0.0) {
    h = opt.fixed_step;
  } else if (opt.h_init > 0.0) {
    h = opt.h_init;
  } else {
    // Hairer–Wanner starting step heuristic.
    const double d0 = detail::scaled_rms(y, y, y, opt);
    const double d1 = detail::scaled_rms(k1, y, y, opt);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, std::abs(span));
    const Vec y1 = y + dir * h0 * k1;
    const Vec f1 = rhs(t + dir * h0, y1);
    ++st.rhs_evals;
    const double d2 = detail::scaled_rms(Vec(f1 - k1), y, y, opt) / h0;
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    h = std::min(100.0 * h0, h1);
  }
  h = std::min({h, opt.h_max, std::abs(span)});

  bool last_rejected = false;
  long steps = 0;
  while (dir * (t1 - t) > 0.0) {
    if (++steps > opt.max_steps) {
      throw Error(ErrorCode::IntegratorFailure,
                  "step budget exhausted at t=" + std::to_string(t));
    }
    const double local_cap = cap(t, y);
    double hs = std::min({h, opt.h_max, local_cap});
    bool final_step = false;
    // never leave a sliver that is below the resolution of t
    if (hs >= std::abs(t1 - t) || std::abs(t1 - t) - hs < 1e-12 * std::max(1.0, std::abs(t1))) {
      hs = std::abs(t1 - t);
      final_step = true;
    }
    const double hh = dir * hs;
    if (!(std::abs(hh) > 0.0) || std::abs(hh) < 1e-15 * std::max(1.0, std::abs(t))) {
      throw Error(ErrorCode::IntegratorFailure,
                  "step size underflow at t=" + std::to_string(t));
    }

    const Vec k2 = rhs(t + c2 * hh, Vec(y + hh * (a21 * k1)));
    const Vec k3 = rhs(t + c3 * hh, Vec(y + hh * (a31 * k1 + a32 * k2)));
    const Vec k4 = rhs(t + c4 * hh, Vec(y + hh * (a41 * k1 + a42 * k2 + a43 * k3)));
    const Vec k5 =
        rhs(t + c5 * hh, Vec(y + hh * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
    const Vec k6 = rhs(t + hh,
                       Vec(y + hh * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
    const Vec y_new = y + hh * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    const double t_new = final_step ? t1 : t + hh;
    const Vec k7 = rhs(t_new, y_new);
    st.rhs_evals += 6;

    if (opt.fixed_step > 0.0) {
      y = y_new;
      t = t_new;
      k1 = k7;
      ++st.accepted;
      continue;
    }

    const Vec err = hh * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = detail::scaled_rms(err, y, y_new, opt);
    if (!std::isfinite(en)) {
      ++st.rejected;
      h = 0.25 * hs;
      last_rejected = true;
      continue;
    }
    if (en <= 1.0) {
      y = y_new;
      t = t_new;
      k1 = k7;
      ++st.accepted;
      double fac = en == 0.0 ? 5.0 : 0.9 * std::pow(en, -0.2);
      fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
      // a clipped final step says nothing about the natural step length
      h = final_step ? std::max(h, hs * fac) : hs * fac;
      last_rejected = false;
    } else {
      ++st.rejected;
      h = hs * std::max(0.2, 0.9 * std::pow(en, -0.2));
      last_rejected = true;
    }
  }
  st.last_h = h;
  return y;
}

}  // namespace circstab::ode
