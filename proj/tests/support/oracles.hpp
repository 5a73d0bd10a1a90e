#pragma once

// Dense reference implementations used to check the library's closed-form and
// structured-solver code paths. Everything here goes through Eigen's generic
// dense machinery (eigensolvers, LU), deliberately avoiding the component
// formulas under test.

#include <complex>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace oracle {

using cplx = std::complex<double>;
using Mat2c = Eigen::Matrix2cd;
using Vec3 = Eigen::Vector3d;

inline Mat2c sigma(int k) {
    Mat2c s;
    const cplx i{0.0, 1.0};
    switch (k) {
        case 0: s << 1, 0, 0, 1; break;
        case 1: s << 0, 1, 1, 0; break;
        case 2: s << 0, -i, i, 0; break;
        case 3: s << 1, 0, 0, -1; break;
        default: throw std::invalid_argument("sigma index out of range");
    }
    return s;
}

// Builds s*sigma_0 + v.sigma from complex coefficients.
inline Mat2c dense_from_coeffs(cplx s, const Eigen::Vector3cd& v) {
    return s * sigma(0) + v(0) * sigma(1) + v(1) * sigma(2) + v(2) * sigma(3);
}

inline Mat2c dense_from_real_coeffs(double s, const Vec3& v) {
    return dense_from_coeffs(cplx(s, 0.0), v.cast<cplx>());
}

// Ascending eigenvalues of a Hermitian 2x2 via Eigen's self-adjoint solver.
inline std::pair<double, double> hermitian_eigs(const Mat2c& M) {
    Eigen::SelfAdjointEigenSolver<Mat2c> es(M);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
    return {es.eigenvalues()(0), es.eigenvalues()(1)};
}

// sum_j f(lambda_j) evaluated through the dense eigendecomposition.
template <typename F>
double trace_of_function(F f, const Mat2c& M) {
    auto [lo, hi] = hermitian_eigs(M);
    return f(lo) + f(hi);
}

// Dense inverse square root of a Hermitian positive definite 2x2.
inline Mat2c dense_inv_sqrt(const Mat2c& M) {
    Eigen::SelfAdjointEigenSolver<Mat2c> es(M);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
    if (es.eigenvalues()(0) <= 0.0) throw std::domain_error("matrix not positive definite");
    Eigen::Vector2d d = es.eigenvalues().array().rsqrt();
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

// Eigenvalues of a symmetric 2x2 [[a, b], [b, c]], ascending.
inline std::pair<double, double> sym2_eigs(double a, double b, double c) {
    Eigen::Matrix2d M;
    M << a, b, b, c;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(M);
    return {es.eigenvalues()(0), es.eigenvalues()(1)};
}

// Assembles a block tridiagonal system into a dense matrix and solves it with
// partial-pivot LU. Blocks are B x B; rhs holds the stacked right-hand side.
template <int B>
std::vector<Eigen::Matrix<double, B, 1>> dense_block_solve(
    const std::vector<Eigen::Matrix<double, B, B>>& sub,
    const std::vector<Eigen::Matrix<double, B, B>>& diag,
    const std::vector<Eigen::Matrix<double, B, B>>& super,
    const std::vector<Eigen::Matrix<double, B, 1>>& rhs) {
    const int n = static_cast<int>(diag.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(B * n, B * n);
    Eigen::VectorXd b(B * n);
    for (int i = 0; i < n; ++i) {
        A.block(B * i, B * i, B, B) = diag[i];
        if (i > 0) A.block(B * i, B * (i - 1), B, B) = sub[i - 1];
        if (i + 1 < n) A.block(B * i, B * (i + 1), B, B) = super[i];
        b.segment(B * i, B) = rhs[i];
    }
    Eigen::VectorXd x = A.partialPivLu().solve(b);
    std::vector<Eigen::Matrix<double, B, 1>> out(n);
    for (int i = 0; i < n; ++i) out[i] = x.segment(B * i, B);
    return out;
}

// Re tr[N (A P^{-1/2})^2] assembled densely; the quadratic-form identity under
// test re-expresses this through coefficient algebra.
inline double dense_flux_quadratic_form(const Mat2c& N, const Mat2c& A, const Mat2c& Pinvsqrt) {
    Mat2c T = A * Pinvsqrt;
    return (N * T * T).trace().real();
}

// Least-squares fit of y against x; returns {slope, intercept, r_squared}.
struct LinearFit {
    double slope;
    double intercept;
    double r_squared;
};

inline LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: bad sizes");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
    LinearFit out{};
    out.slope = (n * sxy - sx * sy) / denom;
    out.intercept = (sy - out.slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double mean_y = sy / n;
    for (size_t i = 0; i < x.size(); ++i) {
        const double fit = out.slope * x[i] + out.intercept;
        ss_res += (y[i] - fit) * (y[i] - fit);
        ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
    }
    out.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return out;
}

// Deterministic generators shared by the property tests.
inline std::mt19937_64& rng() {
    static std::mt19937_64 gen(0x5eed5eedULL);
    return gen;
}

inline double uniform(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(rng());
}

inline Vec3 random_unit_vector() {
    // Rejection sampling from the cube keeps the distribution isotropic.
    while (true) {
        Vec3 v(uniform(-1, 1), uniform(-1, 1), uniform(-1, 1));
        const double r = v.norm();
        if (r > 1e-3 && r <= 1.0) return v / r;
    }
}

}  // namespace oracle
