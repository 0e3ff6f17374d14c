#include "doctest.h"

#include <cmath>

#include "circstab/mode_search.hpp"
#include "circstab/semicircle.hpp"
#include "support.hpp"

using namespace circstab;

namespace {

ProblemSetup constant_vortex() {
  return make_setup(1, 0, 0, 0, kInf, AngularProfile::constant(1), AngularProfile::constant(0));
}

}  // namespace

TEST_CASE("constant vortex catalog") {
  const auto setup = constant_vortex();
  for (int k : {2, 5, -3}) {
    const auto region = semicircle_region(setup, k);
    CHECK(region.source == RegionSource::SemicircleBound);
    CHECK(region.im_lo >= 1e-6);
    CHECK(count_roots(setup, k, region) == 1);
    const auto cat = find_modes(setup, k, region);
    REQUIRE(cat.roots.size() == 1);
    CHECK(cat.counted == 1);
    CHECK(std::abs(cat.roots[0].c - testing::constant_vortex_root(k)) < 1e-8);
    CHECK(cat.roots[0].multiplicity == 1);
    REQUIRE(cat.roots[0].identity_defects.has_value());
    CHECK((*cat.roots[0].identity_defects)[0] <= 1e-6);
  }
  const auto five = find_modes(setup, 5, semicircle_region(setup, 5));
  CHECK(std::abs(five.roots.at(0).c - cplx(0.8, 0.4)) < 1e-8);
}

TEST_CASE("capillary stabilisation above the threshold") {
  const auto setup = make_setup(1, 0, 1, 0, kInf, AngularProfile::constant(2), AngularProfile::constant(0));
  for (int k : {2, 3, 10}) CHECK(count_roots(setup, k, semicircle_region(setup, k)) == 0);
  const auto cat = find_modes(setup, 2, semicircle_region(setup, 2));
  CHECK(cat.roots.empty());
  CHECK(cat.counted == 0);
}

TEST_CASE("empty region") {
  SearchRegion r;
  r.re_lo = r.re_hi = 0.5;
  r.im_hi = 1.0;
  CHECK(r.empty());
  CHECK(count_roots(constant_vortex(), 2, r) == 0);
  CHECK(find_modes(constant_vortex(), 2, r).roots.empty());
}

TEST_CASE("bad setups for the semicircle box") {
  const auto heavy_outside =
      make_setup(1, 2, 0, 0, kInf, AngularProfile::constant(1), AngularProfile::constant(0));
  CHECK_THROWS_AS(semicircle_region(heavy_outside, 2), Error);
  const auto equal = make_setup(1, 1, 0, 0, kInf, AngularProfile::constant(1), AngularProfile::constant(0));
  CHECK_THROWS_AS(semicircle_region(equal, 1), Error);
  CHECK_NOTHROW(semicircle_region(equal, 2));
}

TEST_CASE("absence around the unperturbed speeds with a constant wind") {
  const auto water = make_setup(1, 1e-3, 1, 0, kInf, AngularProfile::taylor_couette(0, 1),
                                AngularProfile::constant(5));
  const auto ex = small_density_expansion(water, 2);
  for (double c : {ex.c_plus_k, ex.c_minus_k}) {
    const auto res = verify_no_unstable_near(water, 2, c);
    CHECK(res.confirmed_absent);
    CHECK(res.count == 0);
    CHECK(res.radius == doctest::Approx(0.5 * (5.0 - c)));
  }
  const auto dry = make_setup(1, 0, 1, 0, kInf, AngularProfile::taylor_couette(0, 1),
                              AngularProfile::constant(5));
  CHECK(verify_no_unstable_near(dry, 2, ex.c_plus_k, 0.1).confirmed_absent);
  // inside the wind range without an explicit radius
  CHECK_THROWS_AS(verify_no_unstable_near(water, 2, 5.0), Error);
}

TEST_CASE("property: count is stable under inflation") {
  testing::Gen g(61);
  for (int trial = 0; trial < 6; ++trial) {
    const int k = g.integer(2, 8);
    const auto setup = constant_vortex();
    const cplx root = testing::constant_vortex_root(k);
    SearchRegion r;
    r.re_lo = root.real() - g.uniform(0.05, 0.3);
    r.re_hi = root.real() + g.uniform(0.05, 0.3);
    r.im_lo = 1e-6;
    r.im_hi = root.imag() + g.uniform(0.05, 0.3);
    SearchRegion big = r;
    const double dx = 0.05 * (r.re_hi - r.re_lo), dy = 0.05 * (r.im_hi - r.im_lo);
    big.re_lo -= dx;
    big.re_hi += dx;
    big.im_hi += 2 * dy;
    CHECK(count_roots(setup, k, r) == count_roots(setup, k, big));
  }
}

TEST_CASE("property: unstable roots lie inside the semicircle") {
  testing::Gen g(62);
  int seen = 0;
  for (int trial = 0; trial < 8; ++trial) {
    const double B1 = g.uniform(0.5, 2), B2 = g.uniform(-1, 0.3);
    const auto setup = make_setup(1, g.uniform(0, 0.9), g.uniform(0, 0.05), 0, kInf,
                                  AngularProfile::constant(B1), AngularProfile::constant(B2));
    const int k = g.integer(2, 5);
    const auto rep = bound(setup, k);
    const auto cat = find_modes(setup, k, semicircle_region(setup, k));
    for (const auto& e : cat.roots) {
      ++seen;
      const double d2 = std::norm(e.c - rep.center);
      CHECK(d2 < rep.radius * rep.radius + 1e-10);
    }
  }
  CHECK(seen > 0);
}
