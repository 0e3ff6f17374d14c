#include "circstab/poly_roots.hpp"

#include <algorithm>
#include <cmath>

#include "circstab/error.hpp"

namespace circstab {

using cd = std::complex<double>;

std::vector<cd> poly_mul(const std::vector<cd>& p, const std::vector<cd>& q) {
  std::vector<cd> r(p.size() + q.size() - 1, 0.0);
  for (size_t i = 0; i < p.size(); ++i)
    for (size_t j = 0; j < q.size(); ++j) r[i + j] += p[i] * q[j];
  return r;
}

cd poly_eval(const std::vector<cd>& coeffs, cd z) {
  cd acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * z + *it;
  return acc;
}

std::vector<cd> polynomial_roots(const std::vector<cd>& coeffs_in) {
  std::vector<cd> a = coeffs_in;
  while (!a.empty() && a.back() == 0.0) a.pop_back();
  if (a.size() < 2) return {};
  const size_t n = a.size() - 1;

  // monic, plus derivative coefficients
  const cd lead = a.back();
  for (auto& x : a) x /= lead;
  std::vector<cd> da(n);
  for (size_t j = 1; j <= n; ++j) da[j - 1] = static_cast<double>(j) * a[j];

  // Cauchy bound for the starting circle, offset angle to avoid symmetric stalls
  double radius = 0.0;
  for (size_t j = 0; j < n; ++j) radius = std::max(radius, std::abs(a[j]));
  radius = 1.0 + radius;
  const double r0 = std::pow(std::abs(a[0]) > 0 ? std::abs(a[0]) : 1.0, 1.0 / n);
  radius = std::min(radius, std::max(r0, 1e-3));
  std::vector<cd> z(n);
  const cd centre = -a[n - 1] / static_cast<double>(n);
  for (size_t i = 0; i < n; ++i)
    z[i] = centre + std::polar(radius, 2.0 * M_PI * i / n + 0.4);

  std::vector<bool> done(n, false);
  for (int iter = 0; iter < 500; ++iter) {
    bool all = true;
    for (size_t i = 0; i < n; ++i) {
      if (done[i]) continue;
      const cd p = poly_eval(a, z[i]);
      const cd dp = poly_eval(da, z[i]);
      // rounding floor of Horner's rule
      double floor_p = 0.0;
      for (auto it = a.rbegin(); it != a.rend(); ++it) floor_p = floor_p * std::abs(z[i]) + std::abs(*it);
      if (p == 0.0 || (iter > 0 && std::abs(p) <= 8.0 * n * 2.2e-16 * floor_p)) {
        done[i] = true;
        continue;
      }
      const cd ratio = p / dp;
      cd sum = 0.0;
      for (size_t j = 0; j < n; ++j)
        if (j != i) sum += 1.0 / (z[i] - z[j]);
      const cd step = ratio / (1.0 - ratio * sum);
      z[i] -= step;
      if (std::abs(step) <= 4e-16 * std::max(1.0, std::abs(z[i])))
        done[i] = true;
      else
        all = false;
    }
    if (all) {
      std::sort(z.begin(), z.end(), [](cd u, cd v) {
        return u.real() != v.real() ? u.real() < v.real() : u.imag() < v.imag();
      });
      return z;
    }
  }
  throw Error(ErrorCode::NonConvergence, "Aberth iteration did not converge");
}

}  // namespace circstab
