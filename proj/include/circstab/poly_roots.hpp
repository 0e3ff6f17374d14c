#pragma once

#include <complex>
#include <vector>

namespace circstab {

/// All roots of sum_j coeffs[j] z^j by simultaneous Aberth–Ehrlich iteration.
/// Leading coefficient must be nonzero. Throws NonConvergence.
std::vector<std::complex<double>> polynomial_roots(const std::vector<std::complex<double>>& coeffs);

/// Coefficients (ascending) of the product of two polynomials.
std::vector<std::complex<double>> poly_mul(const std::vector<std::complex<double>>& p,
                                           const std::vector<std::complex<double>>& q);

std::complex<double> poly_eval(const std::vector<std::complex<double>>& coeffs,
                               std::complex<double> z);

}  // namespace circstab
