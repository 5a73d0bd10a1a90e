#include "spindrift/pauli.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace spindrift {

namespace {

const cplx kImag{0.0, 1.0};

cplx dot_unconjugated(const CVec3& a, const CVec3& b) {
    return a(0) * b(0) + a(1) * b(1) + a(2) * b(2);
}

CVec3 cross_unconjugated(const CVec3& a, const CVec3& b) {
    return CVec3(a(1) * b(2) - a(2) * b(1),
                 a(2) * b(0) - a(0) * b(2),
                 a(0) * b(1) - a(1) * b(0));
}

}  // namespace

Mat2c assemble(const PauliCoeffs& c) {
    Mat2c out;
    out(0, 0) = c.s + c.v(2);
    out(0, 1) = c.v(0) - kImag * c.v(1);
    out(1, 0) = c.v(0) + kImag * c.v(1);
    out(1, 1) = c.s - c.v(2);
    return out;
}

PauliCoeffs expand(const Mat2c& M, double tol) {
    const Mat2c defect = M - M.adjoint();
    const double asym = defect.cwiseAbs().maxCoeff();
    if (asym > tol) {
        std::ostringstream msg;
        msg << "expand: matrix is not Hermitian, max|M - M^H| = " << asym
            << " exceeds tolerance " << tol;
        throw std::invalid_argument(msg.str());
    }
    // Coefficients of the Hermitian part; for Hermitian M these are exact.
    const Mat2c H = 0.5 * (M + M.adjoint());
    PauliCoeffs c;
    c.s = cplx(0.5 * (H(0, 0).real() + H(1, 1).real()), 0.0);
    c.v(0) = cplx(H(1, 0).real(), 0.0);
    c.v(1) = cplx(H(1, 0).imag(), 0.0);
    c.v(2) = cplx(0.5 * (H(0, 0).real() - H(1, 1).real()), 0.0);
    return c;
}

PauliCoeffs pauli_product(const PauliCoeffs& b, const PauliCoeffs& c) {
    PauliCoeffs out;
    out.s = b.s * c.s + dot_unconjugated(b.v, c.v);
    out.v = b.s * c.v + c.s * b.v + kImag * cross_unconjugated(b.v, c.v);
    return out;
}

std::pair<double, double> eigenvalues(double n0, const Vec3& n) {
    const double r = n.norm();
    return {0.5 * n0 - r, 0.5 * n0 + r};
}

double trace_fn(const std::function<double(double)>& f, double n0, const Vec3& n) {
    const auto [lo, hi] = eigenvalues(n0, n);
    const double flo = f(lo);
    const double fhi = f(hi);
    if (!std::isfinite(flo) || !std::isfinite(fhi)) {
        std::ostringstream msg;
        msg << "trace_fn: non-finite value at eigenvalue "
            << (!std::isfinite(flo) ? lo : hi);
        throw std::domain_error(msg.str());
    }
    return flo + fhi;
}

PInvSqrtCoeffs p_inv_sqrt(double p, const Vec3& m) {
    if (p < 0.0) {
        std::ostringstream msg;
        msg << "p_inv_sqrt: polarization must be non-negative, got " << p;
        throw std::invalid_argument(msg.str());
    }
    if (p >= 1.0) {
        std::ostringstream msg;
        msg << "p_inv_sqrt: matrix sigma_0 + p*(m.sigma) is singular at p = " << p;
        throw std::domain_error(msg.str());
    }
    if (p > 0.0 && std::abs(m.norm() - 1.0) > 1e-12) {
        std::ostringstream msg;
        msg << "p_inv_sqrt: direction must be a unit vector, |m| = " << m.norm();
        throw std::invalid_argument(msg.str());
    }
    const double sp = std::sqrt(1.0 + p);
    const double sm = std::sqrt(1.0 - p);
    const double denom = 2.0 * std::sqrt(1.0 - p * p);
    return {(sp + sm) / denom, (sp - sm) / denom};
}

}  // namespace spindrift
