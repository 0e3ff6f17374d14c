#include "circstab/mode_search.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "circstab/contour.hpp"
#include "circstab/semicircle.hpp"

namespace circstab {

namespace {

// D with memoisation. The winding number is taken of D times the phase of the
// unnormalised interface values, which is analytic where D has poles.
class Residual {
 public:
  Residual(const ProblemSetup& setup, int k, const SearchOptions& opts)
      : setup_(setup), k_(k), opts_(opts), scale_(residual_scale(setup, k)) {}

  struct Value {
    cplx D;
    cplx phase;
  };

  const Value& at(cplx c) {
    const auto key = std::make_pair(c.real(), c.imag());
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const DispersionResidual r = residual(setup_, Mode{k_, c}, opts_.dispersion);
    ++evaluations_;
    return cache_.emplace(key, Value{r.value, r.phase_factor}).first->second;
  }

  cplx D(cplx c) { return at(c).D; }

  int winding(const std::vector<PathPiece>& path) {
    WindingOptions wo;
    wo.small_value = opts_.small_rel * scale_;
    auto f = [this](cplx z) {
      const Value& v = at(z);
      return v.D * v.phase;
    };
    return winding_number(f, path, wo).winding;
  }

  int count(const SearchRegion& r) {
    if (r.empty()) return 0;
    return winding(rectangle_path(r.re_lo, r.re_hi, r.im_lo, r.im_hi));
  }

  double scale() const { return scale_; }
  long evaluations() const { return evaluations_; }

 private:
  const ProblemSetup& setup_;
  int k_;
  const SearchOptions& opts_;
  double scale_;
  long evaluations_ = 0;
  std::map<std::pair<double, double>, Value> cache_;
};

// Retry with the rectangle pushed outward when the contour passes through a root.
int count_with_retry(Residual& res, SearchRegion& region, const SearchOptions& opts) {
  for (int attempt = 0;; ++attempt) {
    try {
      return res.count(region);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::BoundaryRootSuspected || attempt >= opts.jitter_retries) throw;
      const double j = opts.jitter;
      region.re_lo -= j;
      region.re_hi += j;
      region.im_hi += j;
      if (attempt + 1 == opts.jitter_retries) region.im_lo += j;
    }
  }
}

struct Polished {
  cplx c;
  double abs_D;
  int iterations;
};

std::optional<Polished> newton(Residual& res, cplx c, int mult, const SearchOptions& opts) {
  const double accept = opts.dispersion.accept_rel * res.scale();
  cplx d = res.D(c);
  for (int it = 0; it < opts.newton_max_iter; ++it) {
    if (std::abs(d) <= accept) return Polished{c, std::abs(d), it};
    const double h = 1e-6 * (1.0 + std::abs(c));
    const cplx dd = (res.D(c + h) - res.D(c - h)) / (2.0 * h);
    if (dd == 0.0) return std::nullopt;
    cplx step = static_cast<double>(mult) * d / dd;
    // damp while |D| grows; keep the iterate in the upper half plane
    bool moved = false;
    for (int halving = 0; halving < 20; ++halving) {
      const cplx trial = c - step;
      if (trial.imag() > 0.5 * opts.eta_floor) {
        const cplx dt = res.D(trial);
        if (std::abs(dt) < std::abs(d) || halving == 19) {
          c = trial;
          d = dt;
          moved = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!moved) return std::nullopt;
    if (std::abs(step) < 1e-15 * (1.0 + std::abs(c)) && std::abs(d) > accept) return std::nullopt;
  }
  if (std::abs(d) <= accept) return Polished{c, std::abs(d), opts.newton_max_iter};
  return std::nullopt;
}

bool inside(const SearchRegion& r, cplx c, double tol) {
  return c.real() >= r.re_lo - tol && c.real() <= r.re_hi + tol && c.imag() >= r.im_lo - tol &&
         c.imag() <= r.im_hi + tol;
}

class Subdivider {
 public:
  Subdivider(Residual& res, const SearchOptions& opts) : res_(res), opts_(opts) {}

  void run(const SearchRegion& cell, int n, int depth) {
    if (n <= 0) return;
    const double size = std::max(cell.re_hi - cell.re_lo, cell.im_hi - cell.im_lo);
    const double centre_abs = std::abs(cplx(0.5 * (cell.re_lo + cell.re_hi), 0.5 * (cell.im_lo + cell.im_hi)));
    if (n == 1 || depth >= opts_.max_depth || size < 1e-10 * (1.0 + centre_abs)) {
      polish(cell, n);
      return;
    }
    // off-centre split fractions keep subcell edges away from symmetric roots
    static constexpr double fractions[][2] = {{0.5123, 0.4871}, {0.4637, 0.5389}, {0.5561, 0.4419}};
    for (const auto& fr : fractions) {
      const double xm = cell.re_lo + fr[0] * (cell.re_hi - cell.re_lo);
      const double ym = cell.im_lo + fr[1] * (cell.im_hi - cell.im_lo);
      const std::array<SearchRegion, 4> sub = {
          SearchRegion{cell.re_lo, xm, cell.im_lo, ym, cell.source},
          SearchRegion{xm, cell.re_hi, cell.im_lo, ym, cell.source},
          SearchRegion{cell.re_lo, xm, ym, cell.im_hi, cell.source},
          SearchRegion{xm, cell.re_hi, ym, cell.im_hi, cell.source}};
      std::array<int, 4> counts{};
      try {
        int total = 0;
        for (int i = 0; i < 4; ++i) total += counts[i] = res_.count(sub[i]);
        if (total != n) continue;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::BoundaryRootSuspected) throw;
        continue;
      }
      for (int i = 0; i < 4; ++i) run(sub[i], counts[i], depth + 1);
      return;
    }
    // every split put a root on an inner edge: the roots are clustered, polish as one
    polish(cell, n);
  }

  std::vector<CatalogEntry> take() { return std::move(found_); }

 private:
  void polish(const SearchRegion& cell, int n) {
    const double wx = cell.re_hi - cell.re_lo, wy = cell.im_hi - cell.im_lo;
    const cplx centre(cell.re_lo + 0.5 * wx, cell.im_lo + 0.5 * wy);
    const std::array<cplx, 5> starts = {centre, centre + cplx(-0.25 * wx, -0.25 * wy),
                                        centre + cplx(0.25 * wx, -0.25 * wy),
                                        centre + cplx(-0.25 * wx, 0.25 * wy),
                                        centre + cplx(0.25 * wx, 0.25 * wy)};
    const double tol = 1e-9 * (1.0 + std::abs(centre)) + 1e-3 * std::max(wx, wy);
    for (const cplx& z0 : starts) {
      const auto p = newton(res_, z0, n, opts_);
      if (p && inside(cell, p->c, tol)) {
        found_.push_back(CatalogEntry{p->c, p->abs_D, n, p->iterations, std::nullopt});
        return;
      }
    }
    throw Error(ErrorCode::NonConvergence,
                "Newton did not converge in cell [" + std::to_string(cell.re_lo) + ", " +
                    std::to_string(cell.re_hi) + "] x [" + std::to_string(cell.im_lo) + ", " +
                    std::to_string(cell.im_hi) + "]");
  }

  Residual& res_;
  const SearchOptions& opts_;
  std::vector<CatalogEntry> found_;
};

}  // namespace

SearchRegion semicircle_region(const ProblemSetup& setup, int k, const SearchOptions& opts) {
  const SemicircleReport rep = bound(setup, k);
  if (!rep.applicable)
    throw Error(ErrorCode::BadSetup, "semicircle bound needs rho_+ >= rho_-");
  if (!rep.condition_strict && std::abs(k) < 2 && setup.rho_plus == setup.rho_minus)
    throw Error(ErrorCode::BadSetup, "no semicircle bound for |k| = 1 with equal densities");
  const double pad = opts.inflate * rep.radius + opts.inflate_abs;
  SearchRegion r;
  r.re_lo = rep.center - rep.radius - pad;
  r.re_hi = rep.center + rep.radius + pad;
  r.im_lo = opts.eta_floor;
  r.im_hi = std::max(rep.radius + pad, opts.eta_floor);
  r.source = RegionSource::SemicircleBound;
  return r;
}

int count_roots(const ProblemSetup& setup, int k, const SearchRegion& region,
                const SearchOptions& opts) {
  if (region.empty()) return 0;
  if (region.im_lo < opts.eta_floor)
    throw Error(ErrorCode::BadParams, "search region must stay above the eta floor");
  Residual res(setup, k, opts);
  SearchRegion r = region;
  return count_with_retry(res, r, opts);
}

ModeCatalog find_modes(const ProblemSetup& setup, int k, const SearchRegion& region,
                       const SearchOptions& opts) {
  ModeCatalog cat;
  cat.k = k;
  cat.region = region;
  if (region.empty()) return cat;
  if (region.im_lo < opts.eta_floor)
    throw Error(ErrorCode::BadParams, "search region must stay above the eta floor");

  Residual res(setup, k, opts);
  SearchRegion r = region;
  cat.counted = count_with_retry(res, r, opts);
  cat.region = r;

  Subdivider sub(res, opts);
  sub.run(r, cat.counted, 0);
  std::vector<CatalogEntry> roots = sub.take();

  // roots polished from neighbouring cells may coincide on a shared edge
  std::sort(roots.begin(), roots.end(), [](const CatalogEntry& a, const CatalogEntry& b) {
    return a.c.real() != b.c.real() ? a.c.real() < b.c.real() : a.c.imag() < b.c.imag();
  });
  std::vector<CatalogEntry> merged;
  for (const auto& e : roots) {
    bool dup = false;
    for (auto& m : merged)
      if (std::abs(m.c - e.c) <= 1e-8 * (1.0 + std::abs(e.c))) {
        m.multiplicity = std::max(m.multiplicity, e.multiplicity);
        dup = true;
      }
    if (!dup) merged.push_back(e);
  }
  int total = 0;
  for (const auto& e : merged) total += e.multiplicity;
  if (total != cat.counted)
    throw Error(ErrorCode::NonConvergence,
                "found " + std::to_string(total) + " roots with multiplicity but counted " +
                    std::to_string(cat.counted));

  if (opts.identity_gate) {
    for (auto& e : merged) {
      const IdentityCheck chk = verify_identities(setup, Mode{k, e.c});
      e.identity_defects = std::array<double, 2>{chk.im_defect, chk.re_defect};
      if (chk.im_defect > opts.identity_tol || chk.re_defect > opts.identity_tol)
        throw Error(ErrorCode::IdentityDrift,
                    "integral identities fail at root " + std::to_string(e.c.real()) + "+" +
                        std::to_string(e.c.imag()) + "i (defects " +
                        std::to_string(chk.im_defect) + ", " + std::to_string(chk.re_defect) + ")");
    }
  }
  cat.roots = std::move(merged);
  cat.evaluations = res.evaluations();
  return cat;
}

AbsenceResult verify_no_unstable_near(const ProblemSetup& setup, int k, double center,
                                      std::optional<double> radius, const SearchOptions& opts) {
  AbsenceResult out;
  out.center = center;
  if (radius) {
    if (!(*radius > 0.0)) throw Error(ErrorCode::BadParams, "radius must be positive");
    out.radius = *radius;
  } else {
    const auto [m, M] = range(setup.profile_minus);
    const double ell = center < m ? m - center : (center > M ? center - M : 0.0);
    if (!(ell > 0.0))
      throw Error(ErrorCode::BadParams, "center lies in the range of the outer wind");
    out.radius = 0.5 * ell;
  }
  if (out.radius <= opts.eta_floor) {
    out.confirmed_absent = true;
    return out;
  }

  Residual res(setup, k, opts);
  double floor = opts.eta_floor;
  for (int attempt = 0;; ++attempt) {
    try {
      out.count = res.winding(half_disk_path(center, out.radius + attempt * opts.jitter, floor));
      break;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::BoundaryRootSuspected || attempt >= opts.jitter_retries) throw;
      if (attempt + 1 == opts.jitter_retries) floor += opts.jitter;
    }
  }
  out.confirmed_absent = out.count == 0;
  if (!out.confirmed_absent) {
    SearchOptions so = opts;
    so.identity_gate = false;
    const SearchRegion box{center - out.radius, center + out.radius, floor, out.radius,
                           RegionSource::UserSpecified};
    const ModeCatalog cat = find_modes(setup, k, box, so);
    for (const auto& e : cat.roots)
      if (std::abs(e.c - center) <= out.radius + opts.jitter * opts.jitter_retries) {
        out.found = Mode{k, e.c};
        break;
      }
  }
  return out;
}

}  // namespace circstab
