#pragma once

#include <Eigen/Dense>
#include <utility>

#include "lqgopt/errors.hpp"
#include "lqgopt/lyapunov.hpp"
#include "lqgopt/types.hpp"

namespace lqgopt {

/// Closed-loop interconnection of plant and controller with its two Gramians:
///   A_cl X + X A_cl^T + W_cl = 0,   A_cl^T Y + Y A_cl + Q_cl = 0.
struct ClosedLoopData {
    Matrix A_cl, Q_cl, W_cl, X, Y;
};

/// True when every eigenvalue of m has real part < -margin.
inline bool is_stable(const Matrix& m, double margin = 0.0) {
    if (m.rows() != m.cols()) throw DimensionMismatch("is_stable: matrix must be square");
    if (m.rows() == 0) return true;
    return detail::real_schur(m).max_re < -margin;
}

inline ClosedLoopData assemble_closed_loop(const Plant& pl, const Controller& k,
                                           const Tolerances& tol = {}) {
    check_dimensions(pl, k);
    const Eigen::Index n = pl.n(), q = k.order(), nn = n + q;

    ClosedLoopData cl;
    cl.A_cl = Matrix::Zero(nn, nn);
    cl.Q_cl = Matrix::Zero(nn, nn);
    cl.W_cl = Matrix::Zero(nn, nn);
    cl.A_cl.topLeftCorner(n, n) = pl.A;
    cl.Q_cl.topLeftCorner(n, n) = pl.Q;
    cl.W_cl.topLeftCorner(n, n) = pl.W;
    if (q > 0) {
        cl.A_cl.topRightCorner(n, q) = pl.B * k.C;
        cl.A_cl.bottomLeftCorner(q, n) = k.B * pl.C;
        cl.A_cl.bottomRightCorner(q, q) = k.A;
        cl.Q_cl.bottomRightCorner(q, q) = k.C.transpose() * pl.R * k.C;
        cl.W_cl.bottomRightCorner(q, q) = k.B * pl.V * k.B.transpose();
    }

    const detail::SchurPair s = detail::real_schur(cl.A_cl);
    if (s.max_re >= -tol.stab)
        throw UnstableClosedLoop("closed loop is not stable (max Re eig = " +
                                 std::to_string(s.max_re) + ")");
    cl.X = detail::solve_lyapunov_schur(s, cl.W_cl);
    cl.Y = detail::solve_lyapunov_transposed_schur(s, cl.Q_cl);

    const double res_x = (cl.A_cl * cl.X + cl.X * cl.A_cl.transpose() + cl.W_cl).norm();
    const double res_y = (cl.A_cl.transpose() * cl.Y + cl.Y * cl.A_cl + cl.Q_cl).norm();
    if (!(res_x <= tol.lyap * (1.0 + cl.X.norm())) || !(res_y <= tol.lyap * (1.0 + cl.Y.norm())))
        throw LyapSolveFailure("closed-loop Lyapunov residual exceeds tolerance");
    return cl;
}

/// Change of controller coordinates K -> (T A T^-1, T B, C T^-1), which
/// leaves the closed-loop transfer behaviour (and the LQG cost) unchanged.
inline Controller similarity_transform(const Controller& k, const Matrix& t,
                                       const Tolerances& tol = {}) {
    const Eigen::Index q = k.order();
    if (t.rows() != q || t.cols() != q)
        throw DimensionMismatch("similarity_transform: T must be q x q");
    if (q == 0) return k;

    const Vector sv = t.jacobiSvd().singularValues();
    if (!(sv(q - 1) > tol.rank * sv(0)) || sv(q - 1) == 0.0)
        throw SingularTransform("similarity_transform: T is singular or ill-conditioned");

    Eigen::PartialPivLU<Matrix> lu(t);
    const Matrix t_inv = lu.solve(Matrix::Identity(q, q));
    return {t * k.A * t_inv, t * k.B, k.C * t_inv};
}

/// Controllability and observability Gramians of the controller itself
/// (requires A_K stable).
inline std::pair<Matrix, Matrix> controller_gramians(const Controller& k,
                                                     const Tolerances& tol = {}) {
    const Eigen::Index q = k.order();
    if (q == 0) return {Matrix(0, 0), Matrix(0, 0)};
    const detail::SchurPair s = detail::real_schur(k.A);
    if (s.max_re >= -tol.stab)
        throw UnstableControllerState("controller_gramians: A_K is not stable");
    const Matrix wc = detail::solve_lyapunov_schur(s, k.B * k.B.transpose());
    const Matrix wo = detail::solve_lyapunov_transposed_schur(s, k.C.transpose() * k.C);
    return {wc, wo};
}

/// Hankel singular values of the controller, descending, padded with zeros
/// to length q.
inline Vector hankel_singular_values(const Controller& k, const Tolerances& tol = {}) {
    const Eigen::Index q = k.order();
    if (q == 0) return Vector(0);
    auto [wc, wo] = controller_gramians(k, tol);
    const Matrix lc = detail::psd_factor(wc);
    const Matrix lo = detail::psd_factor(wo);
    return (lo.transpose() * lc).jacobiSvd().singularValues();
}

namespace detail {

/// Square-root balanced truncation with the rectangular balancing
/// transforms kept for coordinate completion (t_r s_r = I_r).
struct BalancedTruncation {
    Controller k_hat;
    Eigen::Index r = 0;
    Matrix t_r;  // r x q
    Matrix s_r;  // q x r
};

inline BalancedTruncation balanced_truncate(const Controller& k, double tol,
                                            const Tolerances& tols = {}) {
    const Eigen::Index q = k.order();
    if (q == 0) return {k, 0, Matrix(0, 0), Matrix(0, 0)};
    auto [wc, wo] = controller_gramians(k, tols);
    const Matrix lc = psd_factor(wc);
    const Matrix lo = psd_factor(wo);

    Eigen::JacobiSVD<Matrix> svd(lo.transpose() * lc, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& sigma = svd.singularValues();
    Eigen::Index r = 0;
    while (r < q && sigma(r) > tol) ++r;
    if (r == 0) return {Controller::zero_order(k.m(), k.p()), 0, Matrix(0, q), Matrix(q, 0)};

    const Vector si = sigma.head(r).cwiseSqrt().cwiseInverse();
    const Matrix t_r = si.asDiagonal() * svd.matrixU().leftCols(r).transpose() * lo.transpose();
    const Matrix s_r = lc * svd.matrixV().leftCols(r) * si.asDiagonal();

    auto cond = [](const Matrix& m) {
        const Vector sv = m.jacobiSvd().singularValues();
        return sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1)
                                       : std::numeric_limits<double>::infinity();
    };
    if (cond(t_r) > 1.0 / tols.rank || cond(s_r) > 1.0 / tols.rank)
        throw ReductionFailure("balanced_truncate: balancing transform is ill-conditioned");

    Controller k_hat{t_r * k.A * s_r, t_r * k.B, k.C * s_r};
    return {std::move(k_hat), r, t_r, s_r};
}

} // namespace detail

/// Square-root balanced truncation keeping the Hankel singular values > tol.
/// Returns the reduced controller and its order q_hat.
inline std::pair<Controller, Eigen::Index> minimal_realization(const Controller& k, double tol,
                                                               const Tolerances& tols = {}) {
    detail::BalancedTruncation bt = detail::balanced_truncate(k, tol, tols);
    return {std::move(bt.k_hat), bt.r};
}

/// Appends a decoupled stable block Lambda to the controller:
///   A -> blkdiag(A, Lambda), B -> [B; 0], C -> [C, 0].
inline Controller augment_controller(const Controller& k_hat, const Matrix& lambda,
                                     const Tolerances& tol = {}) {
    if (lambda.rows() != lambda.cols())
        throw DimensionMismatch("augment_controller: Lambda must be square");
    const Eigen::Index q = k_hat.order(), e = lambda.rows();
    if (e == 0) return k_hat;
    if (!is_stable(lambda, tol.stab))
        throw UnstableLambda("augment_controller: Lambda is not stable");

    Controller k;
    k.A = Matrix::Zero(q + e, q + e);
    k.A.topLeftCorner(q, q) = k_hat.A;
    k.A.bottomRightCorner(e, e) = lambda;
    k.B = Matrix::Zero(q + e, k_hat.p());
    k.B.topRows(q) = k_hat.B;
    k.C = Matrix::Zero(k_hat.m(), q + e);
    k.C.leftCols(q) = k_hat.C;
    return k;
}

/// Controller transfer function C_K (sI - A_K)^-1 B_K at a complex point.
inline ComplexMatrix controller_transfer(const Controller& k, Complex s) {
    const Eigen::Index q = k.order();
    if (q == 0) return ComplexMatrix::Zero(k.m(), k.p());
    const ComplexMatrix res = ComplexMatrix::Identity(q, q) * s - k.A.cast<Complex>();
    Eigen::PartialPivLU<ComplexMatrix> lu(res);
    return k.C.cast<Complex>() * lu.solve(k.B.cast<Complex>());
}

/// K + alpha * direction (shapes must match).
inline Controller apply_step(const Controller& k, const ControllerDirection& d, double alpha) {
    if (d.dA.rows() != k.A.rows() || d.dB.rows() != k.B.rows() || d.dB.cols() != k.B.cols() ||
        d.dC.rows() != k.C.rows() || d.dC.cols() != k.C.cols())
        throw DimensionMismatch("apply_step: direction shape does not match controller");
    return {k.A + alpha * d.dA, k.B + alpha * d.dB, k.C + alpha * d.dC};
}

} // namespace lqgopt
