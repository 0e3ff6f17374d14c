#pragma once

// Independent reference computations and random generators shared by the tests.
// Nothing here calls into the library's numerics.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

namespace testing {

using cplx = std::complex<double>;

// Roots of sum_i coeffs[i] z^i from the eigenvalues of the companion matrix.
inline std::vector<cplx> companion_roots(std::vector<cplx> coeffs) {
  while (coeffs.size() > 1 && coeffs.back() == 0.0) coeffs.pop_back();
  const int n = static_cast<int>(coeffs.size()) - 1;
  if (n < 1) return {};
  Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 1; i < n; ++i) C(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) C(i, n - 1) = -coeffs[i] / coeffs[n];
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(C, false);
  std::vector<cplx> r(es.eigenvalues().data(), es.eigenvalues().data() + n);
  std::sort(r.begin(), r.end(), [](cplx a, cplx b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return r;
}

inline std::vector<cplx> multiply(const std::vector<cplx>& p, const std::vector<cplx>& q) {
  std::vector<cplx> r(p.size() + q.size() - 1, 0.0);
  for (size_t i = 0; i < p.size(); ++i)
    for (size_t j = 0; j < q.size(); ++j) r[i + j] += p[i] * q[j];
  return r;
}

inline std::vector<cplx> add(std::vector<cplx> p, const std::vector<cplx>& q, cplx f = 1.0) {
  if (q.size() > p.size()) p.resize(q.size(), 0.0);
  for (size_t i = 0; i < q.size(); ++i) p[i] += f * q[i];
  return p;
}

// Interface derivative of the decaying solution of zeta'' = k^2 zeta on
// [log r_in, 0] (r_in = 0: the disk) with zeta(0) = 1.
inline double inner_irrotational_slope(double r_in, int k) {
  const double ak = std::abs(k);
  if (r_in == 0.0) return ak;
  const double L = std::log(r_in);
  // zeta = sinh(|k| (s - L)) / sinh(-|k| L)
  return ak * std::cosh(-ak * L) / std::sinh(-ak * L);
}

// Same on [0, log r_out] (r_out = inf: unbounded).
inline double outer_irrotational_slope(double r_out, int k) {
  const double ak = std::abs(k);
  if (std::isinf(r_out)) return -ak;
  const double L = std::log(r_out);
  return -ak * std::cosh(ak * L) / std::sinh(ak * L);
}

// Upper root of (c - (1 - 1/k))^2 + (1/k)(1 - 1/k) = 0.
inline cplx constant_vortex_root(int k) {
  const double ak = std::abs(k);
  return {1.0 - 1.0 / ak, std::sqrt((1.0 / ak) * (1.0 - 1.0 / ak))};
}

// Brute-force crossings of f = value on a fine grid, refined by bisection.
template <typename F>
std::vector<double> scan_crossings(F f, double value, double lo, double hi, int n = 200000) {
  std::vector<double> out;
  double a = lo, fa = f(lo) - value;
  for (int i = 1; i <= n; ++i) {
    const double b = lo + (hi - lo) * i / n, fb = f(b) - value;
    if (fa == 0.0) out.push_back(a);
    else if (fa * fb < 0.0) {
      double x0 = a, x1 = b, f0 = fa;
      for (int it = 0; it < 200 && x1 - x0 > 1e-15; ++it) {
        const double m = 0.5 * (x0 + x1), fm = f(m) - value;
        if (f0 * fm <= 0.0) x1 = m;
        else {
          x0 = m;
          f0 = fm;
        }
      }
      out.push_back(0.5 * (x0 + x1));
    }
    a = b;
    fa = fb;
  }
  return out;
}

// Seeded generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng_); }
  int nonzero(int a, int b) {
    int k = 0;
    while (k == 0) k = integer(a, b);
    return k;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace testing
