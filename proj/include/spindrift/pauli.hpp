#pragma once

#include <functional>
#include <utility>

#include "spindrift/types.hpp"

namespace spindrift {

// Coefficients of a 2x2 complex matrix in the basis (sigma_0, sigma_x, sigma_y,
// sigma_z): M = s*sigma_0 + v . sigma. Hermitian matrices have real s and v;
// products of two Hermitian matrices generally do not, hence complex storage.
struct PauliCoeffs {
    cplx s{0.0, 0.0};
    CVec3 v = CVec3::Zero();
};

// P = sigma_0 + p*(m . sigma) has inverse square root
// p_plus*sigma_0 - p_minus*(m . sigma); only the two scalars depend on p.
struct PInvSqrtCoeffs {
    double p_plus = 1.0;
    double p_minus = 0.0;
};

// Builds the dense matrix s*sigma_0 + v . sigma.
Mat2c assemble(const PauliCoeffs& c);

// Inverse of assemble for Hermitian input. Throws std::invalid_argument when
// the Hermiticity defect max|M - M^H| exceeds tol; the returned coefficients
// are real (zero imaginary parts).
PauliCoeffs expand(const Mat2c& M, double tol = 1e-12);

// Coefficient-space matrix product:
//   s = b.s*c.s + b.v . c.v,   v = b.s*c.v + c.s*b.v + i*(b.v x c.v)
// with unconjugated dot and cross products.
PauliCoeffs pauli_product(const PauliCoeffs& b, const PauliCoeffs& c);

// Eigenvalues of (n0/2)*sigma_0 + n . sigma, returned as {lower, upper}:
// n0/2 -/+ |n|.
std::pair<double, double> eigenvalues(double n0, const Vec3& n);

// sum_j f(lambda_j) over the two eigenvalues of (n0/2)*sigma_0 + n . sigma.
// Throws std::domain_error if f evaluates to a non-finite value, reporting the
// offending eigenvalue.
double trace_fn(const std::function<double(double)>& f, double n0, const Vec3& n);

// Scalars of P^{-1/2} for polarization p in [0, 1) and unit direction m:
//   p_plus  = (sqrt(1+p) + sqrt(1-p)) / (2*sqrt(1-p^2))
//   p_minus = (sqrt(1+p) - sqrt(1-p)) / (2*sqrt(1-p^2))
// Throws std::domain_error at p >= 1 (P becomes singular) and
// std::invalid_argument for p < 0 or non-unit m.
PInvSqrtCoeffs p_inv_sqrt(double p, const Vec3& m);

}  // namespace spindrift
