#include "circstab/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace circstab {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Slope at nodes[i0] of the polynomial interpolating `count` consecutive nodes.
double end_slope(const Eigen::VectorXd& x, const Eigen::VectorXd& y, Eigen::Index i0,
                 Eigen::Index first, Eigen::Index count) {
  double slope = 0.0;
  for (Eigen::Index j = first; j < first + count; ++j) {
    double dl = 0.0;
    if (j == i0) {
      for (Eigen::Index m = first; m < first + count; ++m)
        if (m != j) dl += 1.0 / (x[i0] - x[m]);
    } else {
      double num = 1.0, den = 1.0;
      for (Eigen::Index m = first; m < first + count; ++m) {
        if (m == j) continue;
        den *= x[j] - x[m];
        if (m != i0) num *= x[i0] - x[m];
      }
      dl = num / den;
    }
    slope += y[j] * dl;
  }
  return slope;
}

// Exponential tail w = amp e^{-2s} + base that a profile follows past its core.
struct Tail {
  double amp = 0.0;
  double base = 0.0;
};

}  // namespace

// ---------------------------------------------------------------------------
// PiecewiseOuterProfile

double PiecewiseOuterProfile::value_at_s_star() const {
  return omega_star * (1.0 - std::exp(-2.0 * s_star)) + b * std::exp(-2.0 * s_star);
}

// ---------------------------------------------------------------------------
// TabulatedProfile

TabulatedProfile::TabulatedProfile(std::vector<std::pair<double, double>> nodes, bool flat_left,
                                   bool flat_right)
    : flat_left_(flat_left), flat_right_(flat_right) {
  if (nodes.size() < 4) throw Error(ErrorCode::BadParams, "tabulated profile needs >= 4 nodes");
  const auto n = static_cast<Eigen::Index>(nodes.size());
  s_.resize(n);
  w_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s_[i] = nodes[static_cast<size_t>(i)].first;
    w_[i] = nodes[static_cast<size_t>(i)].second;
    if (!std::isfinite(s_[i]) || !std::isfinite(w_[i]))
      throw Error(ErrorCode::BadParams, "tabulated profile has a non-finite node");
    if (i > 0 && !(s_[i] > s_[i - 1]))
      throw Error(ErrorCode::BadParams, "tabulated nodes must be strictly increasing in s");
  }

  const Eigen::VectorXd h = s_.tail(n - 1) - s_.head(n - 1);
  // quintic end slopes keep the clamped-end boundary layer in w'' below the interior error
  const Eigen::Index m = std::min<Eigen::Index>(n, 6);
  const double d_left = flat_left ? 0.0 : end_slope(s_, w_, 0, 0, m);
  const double d_right = flat_right ? 0.0 : end_slope(s_, w_, n - 1, n - m, m);

  // Clamped spline in second-derivative form, solved with the Thomas algorithm.
  Eigen::VectorXd lower = Eigen::VectorXd::Zero(n), diag(n), upper = Eigen::VectorXd::Zero(n),
                  rhs(n);
  diag[0] = 2.0 * h[0];
  upper[0] = h[0];
  rhs[0] = 6.0 * ((w_[1] - w_[0]) / h[0] - d_left);
  for (Eigen::Index i = 1; i < n - 1; ++i) {
    lower[i] = h[i - 1];
    diag[i] = 2.0 * (h[i - 1] + h[i]);
    upper[i] = h[i];
    rhs[i] = 6.0 * ((w_[i + 1] - w_[i]) / h[i] - (w_[i] - w_[i - 1]) / h[i - 1]);
  }
  lower[n - 1] = h[n - 2];
  diag[n - 1] = 2.0 * h[n - 2];
  rhs[n - 1] = 6.0 * (d_right - (w_[n - 1] - w_[n - 2]) / h[n - 2]);

  for (Eigen::Index i = 1; i < n; ++i) {
    const double m = lower[i] / diag[i - 1];
    diag[i] -= m * upper[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  Eigen::VectorXd M(n);
  M[n - 1] = rhs[n - 1] / diag[n - 1];
  for (Eigen::Index i = n - 2; i >= 0; --i) M[i] = (rhs[i] - upper[i] * M[i + 1]) / diag[i];

  b_.resize(n - 1);
  c_.resize(n - 1);
  d_.resize(n - 1);
  for (Eigen::Index i = 0; i < n - 1; ++i) {
    b_[i] = (w_[i + 1] - w_[i]) / h[i] - h[i] * (2.0 * M[i] + M[i + 1]) / 6.0;
    c_[i] = 0.5 * M[i];
    d_[i] = (M[i + 1] - M[i]) / (6.0 * h[i]);
  }
}

Eigen::Index TabulatedProfile::piece_of(double s) const {
  const auto last = s_.size() - 2;
  const double* begin = s_.data();
  const double* it = std::upper_bound(begin, begin + s_.size(), s);
  Eigen::Index i = static_cast<Eigen::Index>(it - begin) - 1;
  return std::clamp<Eigen::Index>(i, 0, last);
}

Jet TabulatedProfile::jet(double s, double branch_hint) const {
  if (s < s_[0] && flat_left_) return {w_[0], 0.0, 0.0, 0.0};
  if (s > s_[s_.size() - 1] && flat_right_) return {w_[w_.size() - 1], 0.0, 0.0, 0.0};
  // the spline is C^2, so the hint only matters for w''' exactly at a node
  Eigen::Index i = piece_of(s);
  if (i > 0 && s == s_[i] && branch_hint < s) --i;
  const double t = s - s_[i];
  return {w_[i] + t * (b_[i] + t * (c_[i] + t * d_[i])), b_[i] + t * (2.0 * c_[i] + 3.0 * t * d_[i]),
          2.0 * c_[i] + 6.0 * t * d_[i], 6.0 * d_[i]};
}

std::pair<double, double> TabulatedProfile::range_on(double lo, double hi) const {
  double mn = kInf, mx = -kInf;
  auto take = [&](double v) {
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  };
  const double a = std::max(lo, s_[0]);
  const double z = std::min(hi, s_[s_.size() - 1]);
  if (lo < s_[0] || hi > s_[s_.size() - 1]) {
    // flat extensions contribute the end values
    if (lo < s_[0]) take(w_[0]);
    if (hi > s_[s_.size() - 1]) take(w_[w_.size() - 1]);
  }
  if (a > z) return {mn, mx};
  for (Eigen::Index i = 0; i < s_.size() - 1; ++i) {
    const double p = std::max(a, s_[i]);
    const double q = std::min(z, s_[i + 1]);
    if (p > q) continue;
    const double hint = 0.5 * (p + q);
    take(jet(p, hint).w);
    take(jet(q, hint).w);
    // stationary points: b + 2c t + 3d t^2 = 0
    const double qa = 3.0 * d_[i], qb = 2.0 * c_[i], qc = b_[i];
    std::vector<double> ts;
    if (std::abs(qa) < 1e-300) {
      if (std::abs(qb) > 0) ts.push_back(-qc / qb);
    } else {
      const double disc = qb * qb - 4.0 * qa * qc;
      if (disc >= 0) {
        const double sq = std::sqrt(disc);
        ts.push_back((-qb + sq) / (2.0 * qa));
        ts.push_back((-qb - sq) / (2.0 * qa));
      }
    }
    for (double t : ts) {
      const double s = s_[i] + t;
      if (s > p && s < q) take(jet(s, hint).w);
    }
  }
  return {mn, mx};
}

// ---------------------------------------------------------------------------
// AngularProfile

AngularProfile AngularProfile::constant(double B) { return AngularProfile(ConstantProfile{B}); }

AngularProfile AngularProfile::taylor_couette(double A, double B) {
  return AngularProfile(TaylorCouetteProfile{A, B});
}

AngularProfile AngularProfile::piecewise_outer(double omega_star, double b, double s_star) {
  if (!(s_star > 0.0) || !std::isfinite(s_star))
    throw Error(ErrorCode::BadParams, "piecewise profile needs 0 < s_star < inf");
  return AngularProfile(PiecewiseOuterProfile{omega_star, b, s_star});
}

AngularProfile AngularProfile::tabulated(std::vector<std::pair<double, double>> nodes,
                                         bool flat_left, bool flat_right) {
  return AngularProfile(TabulatedProfile(std::move(nodes), flat_left, flat_right));
}

AngularProfile AngularProfile::on(double s_lo, double s_hi) const {
  if (!(s_lo < s_hi)) throw Error(ErrorCode::BadParams, "profile domain must satisfy lo < hi");
  if (const auto* tab = std::get_if<TabulatedProfile>(&kind_)) {
    constexpr double slack = 1e-12;
    if (s_lo < tab->s_first() - slack && !tab->flat_left())
      throw Error(ErrorCode::BadSetup, "tabulated nodes do not cover the lower end of the domain");
    if (s_hi > tab->s_last() + slack && !tab->flat_right())
      throw Error(ErrorCode::BadSetup, "tabulated nodes do not cover the upper end of the domain");
  }
  AngularProfile out = *this;
  out.lo_ = s_lo;
  out.hi_ = s_hi;
  return out;
}

bool AngularProfile::in_domain(double s) const {
  constexpr double slack = 1e-12;
  return s >= lo_ - slack && s <= hi_ + slack;
}

Jet AngularProfile::jet(double s, double branch_hint) const {
  return std::visit(
      Overloaded{
          [&](const ConstantProfile& p) { return Jet{p.B, 0.0, 0.0, 0.0}; },
          [&](const TaylorCouetteProfile& p) {
            const double e = p.A * std::exp(-2.0 * s);
            return Jet{e + p.B, -2.0 * e, 4.0 * e, -8.0 * e};
          },
          [&](const PiecewiseOuterProfile& p) {
            const double e = std::exp(-2.0 * s);
            if (branch_hint < p.s_star) {
              const double amp = p.b - p.omega_star;
              return Jet{p.omega_star + amp * e, -2.0 * amp * e, 4.0 * amp * e, -8.0 * amp * e};
            }
            const double K = p.omega_star * (std::exp(2.0 * p.s_star) - 1.0) + p.b;
            return Jet{K * e, -2.0 * K * e, 4.0 * K * e, -8.0 * K * e};
          },
          [&](const TabulatedProfile& p) { return p.jet(s, branch_hint); },
      },
      kind_);
}

ProfileValues AngularProfile::eval(double s) const {
  if (!std::isfinite(s) || !in_domain(s))
    throw Error(ErrorCode::OutOfDomain, "s=" + std::to_string(s) + " outside profile domain");
  if (const auto* p = std::get_if<PiecewiseOuterProfile>(&kind_); p && s == p->s_star)
    throw Error(ErrorCode::DistributionalPoint, "varpi' is a Dirac mass at s_star");
  const Jet j = jet(s);
  ProfileValues v{j.w, j.w1, j.varpi(), j.varpi_dot()};
  if (std::holds_alternative<TaylorCouetteProfile>(kind_) ||
      std::holds_alternative<ConstantProfile>(kind_)) {
    v.varpi_dot = 0.0;
  }
  return v;
}

std::vector<double> AngularProfile::distributional_points() const {
  if (const auto* p = std::get_if<PiecewiseOuterProfile>(&kind_)) {
    if (p->s_star > lo_ && p->s_star < hi_) return {p->s_star};
  }
  return {};
}

double AngularProfile::varpi_dot_mass(double s) const {
  if (const auto* p = std::get_if<PiecewiseOuterProfile>(&kind_)) {
    if (s == p->s_star) return -2.0 * p->omega_star;
  }
  return 0.0;
}

bool AngularProfile::irrotational_forcing() const {
  return std::holds_alternative<ConstantProfile>(kind_) ||
         std::holds_alternative<TaylorCouetteProfile>(kind_);
}

std::vector<double> AngularProfile::kinks() const { return distributional_points(); }

double AngularProfile::quiet_above() const {
  return std::visit(Overloaded{
                        [&](const ConstantProfile&) { return 0.0; },
                        [&](const TaylorCouetteProfile&) { return 0.0; },
                        [&](const PiecewiseOuterProfile& p) { return p.s_star; },
                        [&](const TabulatedProfile& p) { return p.s_last(); },
                    },
                    kind_);
}

double AngularProfile::quiet_below() const {
  return std::visit(Overloaded{
                        [&](const ConstantProfile&) { return 0.0; },
                        [&](const TaylorCouetteProfile&) { return 0.0; },
                        [&](const PiecewiseOuterProfile&) { return -kInf; },
                        [&](const TabulatedProfile& p) { return p.s_first(); },
                    },
                    kind_);
}

// ---------------------------------------------------------------------------
// range

std::pair<double, double> range(const AngularProfile& profile) {
  const double lo = profile.s_lo();
  const double hi = profile.s_hi();
  std::vector<double> vals;
  auto unbounded = [] { return Error(ErrorCode::Unbounded, "profile diverges within domain"); };

  std::visit(Overloaded{
                 [&](const ConstantProfile& p) { vals.push_back(p.B); },
                 [&](const TaylorCouetteProfile& p) {
                   if (std::isfinite(lo)) vals.push_back(profile.jet(lo).w);
                   else if (p.A != 0.0) throw unbounded();
                   else vals.push_back(p.B);
                   vals.push_back(std::isfinite(hi) ? profile.jet(hi).w : p.B);
                 },
                 [&](const PiecewiseOuterProfile& p) {
                   if (std::isfinite(lo)) vals.push_back(profile.jet(lo, lo).w);
                   else if (p.b != p.omega_star) throw unbounded();
                   else vals.push_back(p.omega_star);
                   vals.push_back(std::isfinite(hi) ? profile.jet(hi, hi).w : 0.0);
                   if (p.s_star > lo && p.s_star < hi) vals.push_back(p.value_at_s_star());
                 },
                 [&](const TabulatedProfile& p) {
                   const auto [mn, mx] = p.range_on(lo, hi);
                   vals.push_back(mn);
                   vals.push_back(mx);
                 },
             },
             profile.kind());
  const auto [mn, mx] = std::minmax_element(vals.begin(), vals.end());
  return {*mn, *mx};
}

// ---------------------------------------------------------------------------
// critical_points

namespace {

// Crossings of the exponential tail strictly inside (from, to).
void tail_roots(const Tail& tail, double value, double from, double to,
                std::vector<double>& out) {
  if (tail.amp == 0.0) {
    if (tail.base == value)
      throw Error(ErrorCode::NotRegularValue, "profile is flat at the requested value");
    return;
  }
  const double x = (value - tail.base) / tail.amp;
  if (!(x > 0.0)) return;
  const double s = -0.5 * std::log(x);
  if (s > from && s < to) out.push_back(s);
}

Tail tail_below(const AngularProfile& p) {
  return std::visit(Overloaded{
                        [](const ConstantProfile& q) { return Tail{0.0, q.B}; },
                        [](const TaylorCouetteProfile& q) { return Tail{q.A, q.B}; },
                        [](const PiecewiseOuterProfile& q) {
                          return Tail{q.b - q.omega_star, q.omega_star};
                        },
                        [](const TabulatedProfile& q) { return Tail{0.0, q.nodes_w()[0]}; },
                    },
                    p.kind());
}

Tail tail_above(const AngularProfile& p) {
  return std::visit(
      Overloaded{
          [](const ConstantProfile& q) { return Tail{0.0, q.B}; },
          [](const TaylorCouetteProfile& q) { return Tail{q.A, q.B}; },
          [](const PiecewiseOuterProfile& q) {
            return Tail{q.omega_star * (std::exp(2.0 * q.s_star) - 1.0) + q.b, 0.0};
          },
          [](const TabulatedProfile& q) {
            return Tail{0.0, q.nodes_w()[q.nodes_w().size() - 1]};
          },
      },
      p.kind());
}

struct ScanResult {
  std::vector<double> roots;
  bool grazing = false;
};

ScanResult scan_core(const AngularProfile& profile, double value, double a, double z,
                     const std::vector<double>& breaks, double per_unit, double tol) {
  ScanResult out;
  std::vector<double> cuts{a};
  for (double b : breaks)
    if (b > a && b < z) cuts.push_back(b);
  cuts.push_back(z);

  for (size_t seg = 0; seg + 1 < cuts.size(); ++seg) {
    const double p = cuts[seg], q = cuts[seg + 1];
    const auto n = std::max<long>(4, static_cast<long>(std::ceil((q - p) * per_unit)));
    const double hint_mid = 0.5 * (p + q);
    auto f = [&](double s) { return profile.jet(s, hint_mid).w - value; };
    double x0 = p, f0 = f(p);
    double d0 = profile.jet(p, hint_mid).w1;
    if (f0 == 0.0) out.roots.push_back(p);
    for (long j = 1; j <= n; ++j) {
      const double x1 = j == n ? q : p + (q - p) * static_cast<double>(j) / static_cast<double>(n);
      const double f1 = f(x1);
      const double d1 = profile.jet(x1, hint_mid).w1;
      if (f1 == 0.0) {
        out.roots.push_back(x1);
      } else if (f0 != 0.0 && (f0 < 0.0) != (f1 < 0.0)) {
        double lo = x0, hi = x1, flo = f0;
        while (hi - lo > tol) {
          const double mid = 0.5 * (lo + hi);
          const double fm = f(mid);
          if (fm == 0.0) {
            lo = hi = mid;
            break;
          }
          if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
          }
        }
        out.roots.push_back(0.5 * (lo + hi));
      } else if ((d0 < 0.0) != (d1 < 0.0) && d0 != 0.0 && d1 != 0.0) {
        // extremum without a sign change: check it does not graze the value
        double lo = x0, hi = x1, dlo = d0;
        for (int it = 0; it < 80 && hi - lo > tol; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double dm = profile.jet(mid, hint_mid).w1;
          if ((dm < 0.0) == (dlo < 0.0)) {
            lo = mid;
            dlo = dm;
          } else {
            hi = mid;
          }
        }
        if (std::abs(f(0.5 * (lo + hi))) < 1e-10 * (1.0 + std::abs(value))) out.grazing = true;
      }
      x0 = x1;
      f0 = f1;
      d0 = d1;
    }
  }
  std::sort(out.roots.begin(), out.roots.end());
  out.roots.erase(std::unique(out.roots.begin(), out.roots.end(),
                              [&](double u, double v) { return std::abs(u - v) <= 10.0 * tol; }),
                  out.roots.end());
  return out;
}

}  // namespace

CriticalPointSet critical_points(const AngularProfile& profile, double value,
                                 const CriticalPointOptions& opts) {
  const double lo = profile.s_lo();
  const double hi = profile.s_hi();
  const auto kinks = profile.kinks();

  // Finite core window; anything outside follows an exponential tail.
  std::vector<double> anchors{0.0};
  for (double k : kinks) anchors.push_back(k);
  if (const auto* tab = std::get_if<TabulatedProfile>(&profile.kind())) {
    anchors.push_back(tab->s_first());
    anchors.push_back(tab->s_last());
  }
  if (std::isfinite(lo)) anchors.push_back(lo);
  if (std::isfinite(hi)) anchors.push_back(hi);
  const double a = std::isfinite(lo) ? lo : *std::min_element(anchors.begin(), anchors.end()) - 1.0;
  const double z = std::isfinite(hi) ? hi : *std::max_element(anchors.begin(), anchors.end()) + 1.0;

  ScanResult scan = scan_core(profile, value, a, z, kinks, opts.intervals_per_unit, opts.location_tol);
  int stable = 0;
  double per_unit = opts.intervals_per_unit;
  for (int d = 0; d < opts.max_doublings && stable < 2; ++d) {
    per_unit *= 2.0;
    ScanResult finer = scan_core(profile, value, a, z, kinks, per_unit, opts.location_tol);
    stable = finer.roots.size() == scan.roots.size() ? stable + 1 : 0;
    scan = std::move(finer);
  }
  if (stable < 2)
    throw Error(ErrorCode::TangencySuspected, "preimage count did not stabilise under refinement");
  if (scan.grazing)
    throw Error(ErrorCode::TangencySuspected, "profile grazes the value without crossing");

  std::vector<double> roots = scan.roots;
  if (!std::isfinite(lo)) tail_roots(tail_below(profile), value, -kInf, a, roots);
  if (!std::isfinite(hi)) tail_roots(tail_above(profile), value, z, kInf, roots);
  std::sort(roots.begin(), roots.end());

  CriticalPointSet out{value, {}};
  for (double s : roots) {
    for (double k : kinks)
      if (std::abs(s - k) <= 10.0 * opts.location_tol)
        throw Error(ErrorCode::NotRegularValue, "preimage sits on a kink of the profile");
    const Jet j = profile.jet(s);
    if (std::abs(j.w1) < opts.regularity_floor)
      throw Error(ErrorCode::NotRegularValue,
                  "|w'| below regularity floor at s=" + std::to_string(s));
    const double vd = profile.irrotational_forcing() ? 0.0 : j.varpi_dot();
    out.points.push_back({s, j.w1, vd});
  }
  return out;
}

// ---------------------------------------------------------------------------
// ProblemSetup

double ProblemSetup::s_in() const { return r_in == 0.0 ? -kInf : std::log(r_in); }
double ProblemSetup::s_out() const { return r_out == kInf ? kInf : std::log(r_out); }

ProblemSetup make_setup(double rho_plus, double rho_minus, double alpha, double r_in,
                        double r_out, const AngularProfile& plus, const AngularProfile& minus) {
  if (!(rho_plus > 0.0) || !std::isfinite(rho_plus))
    throw Error(ErrorCode::BadSetup, "rho_plus must be positive");
  if (!(rho_minus >= 0.0) || !std::isfinite(rho_minus))
    throw Error(ErrorCode::BadSetup, "rho_minus must be non-negative");
  if (!(alpha >= 0.0) || !std::isfinite(alpha))
    throw Error(ErrorCode::BadSetup, "alpha must be non-negative");
  if (!(r_in >= 0.0 && r_in < 1.0)) throw Error(ErrorCode::BadSetup, "r_in must lie in [0, 1)");
  if (!(r_out > 1.0)) throw Error(ErrorCode::BadSetup, "r_out must exceed 1");
  if (std::holds_alternative<PiecewiseOuterProfile>(plus.kind()))
    throw Error(ErrorCode::BadSetup, "piecewise outer profile cannot describe the inner side");
  if (r_in == 0.0) {
    if (const auto* tc = std::get_if<TaylorCouetteProfile>(&plus.kind()); tc && tc->A != 0.0)
      throw Error(ErrorCode::BadSetup, "Taylor-Couette flow on the disk requires A = 0");
  }

  ProblemSetup s;
  s.rho_plus = rho_plus;
  s.rho_minus = rho_minus;
  s.alpha = alpha;
  s.r_in = r_in;
  s.r_out = r_out;
  s.profile_plus = plus.on(s.s_in(), 0.0);
  s.profile_minus = minus.on(0.0, s.s_out());
  return s;
}

}  // namespace circstab
