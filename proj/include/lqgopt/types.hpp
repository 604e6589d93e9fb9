#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "lqgopt/errors.hpp"

namespace lqgopt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Numerical tolerances used throughout the library. Fields can be
/// overridden individually; the defaults are tuned for desk-scale problems.
struct Tolerances {
    double sym = 1e-10;      ///< relative symmetry slack
    double psd = 1e-8;       ///< PSD slack relative to the spectral norm
    double rank = 1e-10;     ///< rank decisions and transform conditioning
    double lyap = 1e-9;      ///< Lyapunov residual acceptance (relative)
    double ric = 1e-9;       ///< Riccati residual that triggers refinement
    double stab = 1e-9;      ///< stability margin: max Re eig < -stab
    double eig_zero = 1e-6;  ///< eigenvalue matching in escape construction
    double g_zero = 1e-7;    ///< "G identically zero" coefficient threshold
    double gcd = 1e-6;       ///< pole/zero root-matching cancellation
    double cluster = 1e-6;   ///< zero-set clustering and lambda rejection
    double cert = 1e-8;      ///< minimum |quadratic form| to certify a saddle
    double g_th = 1e-6;      ///< default stationarity threshold
};

namespace detail {

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline bool is_symmetric(const Matrix& m, double tol_rel) {
    if (m.rows() != m.cols()) return false;
    if (m.size() == 0) return true;
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol_rel * (1.0 + m.cwiseAbs().maxCoeff());
}

inline double spectral_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    return m.jacobiSvd().singularValues()(0);
}

/// Smallest eigenvalue of a symmetric matrix (0 for empty).
inline double min_eig_sym(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw EigenFailure("symmetric eigensolver failed");
    return es.eigenvalues()(0);
}

/// Symmetric PSD square root; negative eigenvalues (round-off) are clipped.
inline Matrix sqrt_psd(const Matrix& m) {
    if (m.size() == 0) return m;
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
    if (es.info() != Eigen::Success) throw EigenFailure("symmetric eigensolver failed");
    Vector d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

/// Factor L with M = L L^T (same shape as M), for symmetric PSD M.
inline Matrix psd_factor(const Matrix& m) {
    if (m.size() == 0) return m;
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
    if (es.info() != Eigen::Success) throw EigenFailure("symmetric eigensolver failed");
    Vector d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal();
}

inline Eigen::Index numeric_rank(const Matrix& m, double tol_rel) {
    if (m.size() == 0) return 0;
    Vector sv = m.jacobiSvd().singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > tol_rel * sv(0)) ++r;
    return r;
}

/// Kalman controllability matrix [B, AB, ..., A^{n-1}B].
inline Matrix controllability_matrix(const Matrix& a, const Matrix& b) {
    const Eigen::Index n = a.rows();
    Matrix ctrb(n, n * b.cols());
    Matrix akb = b;
    for (Eigen::Index k = 0; k < n; ++k) {
        ctrb.middleCols(k * b.cols(), b.cols()) = akb;
        akb = a * akb;
    }
    return ctrb;
}

inline void require(bool cond, const char* what) {
    if (!cond) throw DimensionMismatch(what);
}

} // namespace detail

/// Continuous-time plant
///   dx = A x dt + B u dt + dw,   dy = C x dt + dv,
/// with process noise intensity W, measurement noise intensity V and
/// quadratic cost weights Q (state) and R (input).
struct Plant {
    Matrix A, B, C, W, V, Q, R;

    [[nodiscard]] Eigen::Index n() const { return A.rows(); }  ///< state dimension
    [[nodiscard]] Eigen::Index m() const { return B.cols(); }  ///< input dimension
    [[nodiscard]] Eigen::Index p() const { return C.rows(); }  ///< output dimension
};

/// Dynamic output-feedback controller
///   dxi = A_K xi dt + B_K dy,   u = C_K xi
/// of order q = A.rows(). Empty matrices (q = 0) denote the static zero
/// controller; B and C keep their nonzero dimension (q x p and m x q) so the
/// input/output sizes remain recoverable.
struct Controller {
    Matrix A, B, C;

    [[nodiscard]] Eigen::Index order() const { return A.rows(); }
    [[nodiscard]] Eigen::Index p() const { return B.cols(); }
    [[nodiscard]] Eigen::Index m() const { return C.rows(); }

    static Controller zero_order(Eigen::Index m, Eigen::Index p) {
        return {Matrix(0, 0), Matrix(0, p), Matrix(m, 0)};
    }
};

/// Tangent direction in controller space, same shapes as the Controller blocks.
struct ControllerDirection {
    Matrix dA, dB, dC;

    [[nodiscard]] double norm() const {
        return std::sqrt(dA.squaredNorm() + dB.squaredNorm() + dC.squaredNorm());
    }
    static ControllerDirection zero(Eigen::Index q, Eigen::Index m, Eigen::Index p) {
        return {Matrix::Zero(q, q), Matrix::Zero(q, p), Matrix::Zero(m, q)};
    }
};

inline void check_dimensions(const Plant& pl) {
    using detail::require;
    const Eigen::Index n = pl.n(), m = pl.m(), p = pl.p();
    require(n > 0, "plant: state dimension must be positive");
    require(pl.A.cols() == n, "plant: A must be square");
    require(pl.B.rows() == n && m > 0, "plant: B must be n x m");
    require(pl.C.cols() == n && p > 0, "plant: C must be p x n");
    require(pl.W.rows() == n && pl.W.cols() == n, "plant: W must be n x n");
    require(pl.V.rows() == p && pl.V.cols() == p, "plant: V must be p x p");
    require(pl.Q.rows() == n && pl.Q.cols() == n, "plant: Q must be n x n");
    require(pl.R.rows() == m && pl.R.cols() == m, "plant: R must be m x m");
}

inline void check_dimensions(const Plant& pl, const Controller& k) {
    using detail::require;
    check_dimensions(pl);
    const Eigen::Index q = k.order();
    require(k.A.cols() == q, "controller: A must be square");
    require(k.B.rows() == q && k.B.cols() == pl.p(), "controller: B must be q x p");
    require(k.C.rows() == pl.m() && k.C.cols() == q, "controller: C must be m x q");
}

/// Validates symmetry/definiteness of the weights and Assumption-1 style
/// controllability/observability of the plant. Throws on violation.
inline void validate_plant(const Plant& pl, const Tolerances& tol = {}) {
    check_dimensions(pl);
    using detail::is_symmetric;
    using detail::min_eig_sym;
    using detail::spectral_norm;

    auto check_sym_psd = [&](const Matrix& m, const char* name, bool strict) {
        if (!is_symmetric(m, tol.sym))
            throw InvalidArgument(std::string("plant: ") + name + " is not symmetric");
        const double slack = tol.psd * std::max(1.0, spectral_norm(m));
        const double lo = min_eig_sym(m);
        if (strict ? (lo <= slack) : (lo < -slack))
            throw InvalidArgument(std::string("plant: ") + name +
                                  (strict ? " is not positive definite" : " is not positive semidefinite"));
    };
    check_sym_psd(pl.W, "W", false);
    check_sym_psd(pl.Q, "Q", false);
    check_sym_psd(pl.V, "V", true);
    check_sym_psd(pl.R, "R", true);

    const Eigen::Index n = pl.n();
    auto ctrb_rank = [&](const Matrix& b) {
        return detail::numeric_rank(detail::controllability_matrix(pl.A, b), tol.rank);
    };
    if (ctrb_rank(pl.B) != n) throw InvalidArgument("plant: (A, B) is not controllable");
    if (ctrb_rank(detail::sqrt_psd(pl.W)) != n)
        throw InvalidArgument("plant: (A, W^{1/2}) is not controllable");
    auto obsv_rank = [&](const Matrix& c) {
        return detail::numeric_rank(
            detail::controllability_matrix(pl.A.transpose(), c.transpose()), tol.rank);
    };
    if (obsv_rank(pl.C) != n) throw InvalidArgument("plant: (C, A) is not observable");
    if (obsv_rank(detail::sqrt_psd(pl.Q)) != n)
        throw InvalidArgument("plant: (Q^{1/2}, A) is not observable");
}

} // namespace lqgopt
