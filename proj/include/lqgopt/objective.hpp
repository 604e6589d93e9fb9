#pragma once

#include <Eigen/Dense>

#include "lqgopt/lti.hpp"
#include "lqgopt/riccati.hpp"

namespace lqgopt {

/// LQG cost J = tr(Q_cl X) of an already-assembled closed loop.
inline double cost(const ClosedLoopData& cl) { return (cl.Q_cl * cl.X).trace(); }

inline double cost(const Plant& pl, const Controller& k, const Tolerances& tol = {}) {
    return cost(assemble_closed_loop(pl, k, tol));
}

/// Analytic gradient of J with respect to (A_K, B_K, C_K), from the two
/// closed-loop Gramians partitioned into plant/controller blocks.
inline ControllerDirection gradient(const Plant& pl, const Controller& k,
                                    const ClosedLoopData& cl) {
    const Eigen::Index n = pl.n(), q = k.order();
    ControllerDirection g = ControllerDirection::zero(q, pl.m(), pl.p());
    if (q == 0) return g;

    const auto x11 = cl.X.topLeftCorner(n, n);
    const auto x12 = cl.X.topRightCorner(n, q);
    const auto x22 = cl.X.bottomRightCorner(q, q);
    const auto y11 = cl.Y.topLeftCorner(n, n);
    const auto y12 = cl.Y.topRightCorner(n, q);
    const auto y22 = cl.Y.bottomRightCorner(q, q);

    g.dA = 2.0 * (y12.transpose() * x12 + y22 * x22);
    g.dB = 2.0 * (y22 * k.B * pl.V +
                  (y12.transpose() * x11 + y22 * x12.transpose()) * pl.C.transpose());
    g.dC = 2.0 * (pl.R * k.C * x22 +
                  pl.B.transpose() * (y11 * x12 + y12 * x22));
    return g;
}

inline ControllerDirection gradient(const Plant& pl, const Controller& k,
                                    const Tolerances& tol = {}) {
    return gradient(pl, k, assemble_closed_loop(pl, k, tol));
}

namespace detail {

inline double hessian_quadratic_form_impl(const Plant& pl, const Controller& k,
                                          const ClosedLoopData& cl, const SchurPair& schur,
                                          const ControllerDirection& d) {
    const Eigen::Index n = pl.n(), q = k.order();
    if (q == 0) return 0.0;

    // first-order closed-loop perturbations
    Matrix a1 = Matrix::Zero(n + q, n + q);
    a1.topRightCorner(n, q) = pl.B * d.dC;
    a1.bottomLeftCorner(q, n) = d.dB * pl.C;
    a1.bottomRightCorner(q, q) = d.dA;

    Matrix m1 = a1 * cl.X + cl.X * a1.transpose();
    m1.bottomRightCorner(q, q) +=
        k.B * pl.V * d.dB.transpose() + d.dB * pl.V * k.B.transpose();
    const Matrix x1 = solve_lyapunov_schur(schur, symmetrize(m1));

    // 2 tr(Q_cl X'') folded through the adjoint Y, plus the direct
    // second-order weight terms
    double val = 2.0 * (a1 * x1 * cl.Y).trace();
    val += 2.0 * (k.C.transpose() * pl.R * d.dC * x1.bottomRightCorner(q, q)).trace();
    val += (d.dB * pl.V * d.dB.transpose() * cl.Y.bottomRightCorner(q, q)).trace();
    val += (d.dC.transpose() * pl.R * d.dC * cl.X.bottomRightCorner(q, q)).trace();
    return 2.0 * val;
}

} // namespace detail

/// Hessian quadratic form Hess J(K)[delta, delta]; costs one extra Lyapunov
/// solve on top of the closed-loop data.
inline double hessian_quadratic_form(const Plant& pl, const Controller& k,
                                     const ControllerDirection& d, const Tolerances& tol = {}) {
    const ClosedLoopData cl = assemble_closed_loop(pl, k, tol);
    const detail::SchurPair schur = detail::real_schur(cl.A_cl);
    return detail::hessian_quadratic_form_impl(pl, k, cl, schur, d);
}

/// Basis direction k of the flattened controller tangent space, ordered as
/// C_K row-major (m*q entries), then B_K row-major (q*p), then A_K row-major
/// (q*q); the total dimension is d = m*q + q*p + q*q.
inline ControllerDirection basis_direction(Eigen::Index q, Eigen::Index m, Eigen::Index p,
                                           Eigen::Index idx) {
    ControllerDirection d = ControllerDirection::zero(q, m, p);
    if (idx < 0 || idx >= m * q + q * p + q * q)
        throw InvalidArgument("basis_direction: index out of range");
    if (idx < m * q)
        d.dC(idx / q, idx % q) = 1.0;
    else if (idx < m * q + q * p)
        d.dB((idx - m * q) / p, (idx - m * q) % p) = 1.0;
    else {
        const Eigen::Index r = idx - m * q - q * p;
        d.dA(r / q, r % q) = 1.0;
    }
    return d;
}

struct HessianData {
    Matrix H;      ///< d x d symmetric Hessian in the basis_direction ordering
    Vector eigs;   ///< eigenvalues, nonincreasing
};

/// Full Hessian matrix by polarization of the quadratic form:
///   H_ij = (Q(e_i + e_j) - Q(e_i) - Q(e_j)) / 2.
inline HessianData hessian_matrix(const Plant& pl, const Controller& k,
                                  const Tolerances& tol = {}) {
    const Eigen::Index q = k.order(), m = pl.m(), p = pl.p();
    const Eigen::Index d = m * q + q * p + q * q;
    const ClosedLoopData cl = assemble_closed_loop(pl, k, tol);
    const detail::SchurPair schur = detail::real_schur(cl.A_cl);

    auto qf = [&](const ControllerDirection& dir) {
        return detail::hessian_quadratic_form_impl(pl, k, cl, schur, dir);
    };

    Vector diag(d);
    std::vector<ControllerDirection> basis;
    basis.reserve(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        basis.push_back(basis_direction(q, m, p, i));
        diag(i) = qf(basis.back());
    }

    HessianData h;
    h.H = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        h.H(i, i) = diag(i);
        for (Eigen::Index j = i + 1; j < d; ++j) {
            ControllerDirection sum{basis[i].dA + basis[j].dA, basis[i].dB + basis[j].dB,
                                    basis[i].dC + basis[j].dC};
            const double hij = 0.5 * (qf(sum) - diag(i) - diag(j));
            h.H(i, j) = h.H(j, i) = hij;
        }
    }

    if (d > 0) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(h.H, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) throw EigenFailure("Hessian eigensolver failed");
        h.eigs = es.eigenvalues().reverse();
    } else {
        h.eigs = Vector(0);
    }
    return h;
}

struct OptimalController {
    Controller K;
    double J = 0.0;
    RiccatiSolution riccati;
};

/// The globally optimal LQG controller assembled from the two ARE solutions:
///   K* = (A - BM - LC, L, -M), with its cost.
inline OptimalController optimal_controller(const Plant& pl, const Tolerances& tol = {}) {
    validate_plant(pl, tol);
    OptimalController oc;
    oc.riccati = solve_riccati_pair(pl, tol);
    oc.K = Controller{pl.A - pl.B * oc.riccati.M - oc.riccati.L * pl.C, oc.riccati.L,
                      -oc.riccati.M};
    oc.J = cost(pl, oc.K, tol);
    return oc;
}

} // namespace lqgopt
