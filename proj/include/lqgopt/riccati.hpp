#pragma once

#include <Eigen/Dense>

#include "lqgopt/errors.hpp"
#include "lqgopt/lyapunov.hpp"
#include "lqgopt/types.hpp"

namespace lqgopt {

/// Stabilizing solutions of the filter and control AREs together with the
/// optimal gains L = P C^T V^-1 and M = R^-1 B^T S.
struct RiccatiSolution {
    Matrix P, S, L, M;
    double res_p = 0.0;  ///< filter ARE residual (Frobenius)
    double res_s = 0.0;  ///< control ARE residual (Frobenius)
};

namespace detail {

/// Reorders a complex Schur form (T upper triangular, U unitary) so that all
/// eigenvalues with negative real part appear first on the diagonal.
/// Adjacent swaps use the explicit 2x2 unitary built from the eigenvector of
/// the trailing eigenvalue.
inline void order_stable_first(ComplexMatrix& t, ComplexMatrix& u) {
    const Eigen::Index n = t.rows();
    auto stable = [&](Eigen::Index i) { return t(i, i).real() < 0.0; };
    bool moved = true;
    while (moved) {
        moved = false;
        for (Eigen::Index i = 0; i + 1 < n; ++i) {
            if (stable(i) || !stable(i + 1)) continue;
            const Complex a = t(i, i), b = t(i, i + 1), c = t(i + 1, i + 1);
            // unit eigenvector of [[a, b],[0, c]] for eigenvalue c
            Eigen::Vector2cd v(b, c - a);
            const double nv = v.norm();
            if (nv == 0.0) continue;  // equal eigenvalues; nothing to swap
            v /= nv;
            Eigen::Matrix2cd g;
            g << v(0), -std::conj(v(1)), v(1), std::conj(v(0));
            t.middleRows(i, 2) = g.adjoint() * t.middleRows(i, 2);
            t.middleCols(i, 2) = t.middleCols(i, 2) * g;
            u.middleCols(i, 2) = u.middleCols(i, 2) * g;
            t(i + 1, i) = Complex(0, 0);
            moved = true;
        }
    }
}

/// Solves A^T S + S A - S G S + Q = 0 (G = B R^-1 B^T PSD) for the
/// stabilizing S: ordered Schur of the Hamiltonian, then Kleinman-Newton
/// refinement until the residual passes the acceptance bound.
inline std::pair<Matrix, double> care_stabilizing(const Matrix& a, const Matrix& g,
                                                  const Matrix& q, const Tolerances& tol) {
    const Eigen::Index n = a.rows();
    Matrix ham(2 * n, 2 * n);
    ham << a, -g, -q, -a.transpose();

    Eigen::ComplexSchur<ComplexMatrix> schur(ham.cast<Complex>());
    if (schur.info() != Eigen::Success)
        throw RiccatiFailure("Hamiltonian Schur decomposition failed");
    ComplexMatrix t = schur.matrixT(), u = schur.matrixU();

    Eigen::Index n_stable = 0;
    for (Eigen::Index i = 0; i < 2 * n; ++i)
        if (t(i, i).real() < 0.0) ++n_stable;
    if (n_stable != n)
        throw RiccatiFailure("Hamiltonian has " + std::to_string(n_stable) +
                             " stable eigenvalues, expected " + std::to_string(n));
    order_stable_first(t, u);

    // The stable invariant subspace is closed under conjugation, so the
    // orthogonal projector onto it is real; a real orthonormal basis comes
    // from its dominant eigenvectors.
    const ComplexMatrix us = u.leftCols(n);
    const ComplexMatrix proj = us * us.adjoint();
    if (proj.imag().cwiseAbs().maxCoeff() > 1e-8)
        throw RiccatiFailure("stable subspace projector is not real");
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(proj.real()));
    if (es.info() != Eigen::Success) throw RiccatiFailure("projector eigensolver failed");
    if (es.eigenvalues()(n) < 0.9 || es.eigenvalues()(n - 1) > 0.1)
        throw RiccatiFailure("stable subspace projector has no clear spectral gap");
    const Matrix z = es.eigenvectors().rightCols(n);
    const Matrix z1 = z.topRows(n), z2 = z.bottomRows(n);

    Eigen::FullPivLU<Matrix> lu(z1.transpose());
    lu.setThreshold(tol.rank);
    if (!lu.isInvertible())
        throw RiccatiFailure("stable subspace has singular leading block");
    Matrix s = symmetrize(lu.solve(z2.transpose()).transpose());

    auto residual = [&](const Matrix& sk) {
        return (a.transpose() * sk + sk * a - sk * g * sk + q).norm();
    };
    double res = residual(s);
    const auto target = [&](const Matrix& sk) {
        return tol.ric * (1.0 + sk.norm()) * (1.0 + sk.norm());
    };
    for (int it = 0; it < 20 && res > target(s); ++it) {
        // Kleinman-Newton step: closed-loop Lyapunov refresh
        const Matrix acl = a - g * s;
        Matrix s_next;
        try {
            s_next = solve_lyapunov(acl.transpose(), q + s * g * s, tol);
        } catch (const Error&) {
            break;  // keep the best iterate we have
        }
        const double res_next = residual(s_next);
        if (!(res_next < res)) break;
        s = s_next;
        res = res_next;
    }
    if (!(res <= target(s)))
        throw RiccatiFailure("ARE residual " + std::to_string(res) + " exceeds tolerance");
    if (min_eig_sym(s) < -tol.psd * std::max(1.0, spectral_norm(s)))
        throw RiccatiFailure("ARE solution is not positive semidefinite");
    if (real_schur(a - g * s).max_re >= -tol.stab)
        throw RiccatiFailure("ARE solution is not stabilizing");
    return {s, res};
}

} // namespace detail

/// Solves both AREs of the LQG problem:
///   filter:  A P + P A^T - P C^T V^-1 C P + W = 0
///   control: A^T S + S A - S B R^-1 B^T S + Q = 0
inline RiccatiSolution solve_riccati_pair(const Plant& pl, const Tolerances& tol = {}) {
    check_dimensions(pl);
    RiccatiSolution rs;

    const Matrix v_inv = pl.V.llt().solve(Matrix::Identity(pl.p(), pl.p()));
    const Matrix r_inv = pl.R.llt().solve(Matrix::Identity(pl.m(), pl.m()));

    // filter ARE is the control ARE for the dual pair (A^T, C^T)
    auto [p, res_p] = detail::care_stabilizing(
        pl.A.transpose(), pl.C.transpose() * v_inv * pl.C, pl.W, tol);
    rs.P = p;
    rs.res_p = res_p;
    auto [s, res_s] = detail::care_stabilizing(pl.A, pl.B * r_inv * pl.B.transpose(), pl.Q, tol);
    rs.S = s;
    rs.res_s = res_s;

    rs.L = rs.P * pl.C.transpose() * v_inv;
    rs.M = r_inv * pl.B.transpose() * rs.S;

    if (detail::real_schur(pl.A - rs.L * pl.C).max_re >= -tol.stab)
        throw RiccatiFailure("estimator closed loop A - LC is not stable");
    if (detail::real_schur(pl.A - pl.B * rs.M).max_re >= -tol.stab)
        throw RiccatiFailure("regulator closed loop A - BM is not stable");
    return rs;
}

} // namespace lqgopt
