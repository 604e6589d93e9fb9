#pragma once

#include <Eigen/Dense>

#include "lqgopt/errors.hpp"
#include "lqgopt/types.hpp"

namespace lqgopt {
namespace detail {

/// Spectrum of a real matrix from its (quasi-triangular) real Schur form.
inline ComplexVector schur_eigenvalues(const Matrix& t) {
    const Eigen::Index n = t.rows();
    ComplexVector ev(n);
    Eigen::Index i = 0;
    while (i < n) {
        if (i + 1 < n && t(i + 1, i) != 0.0) {
            // 2x2 block with complex pair re +- i*im
            const double re = 0.5 * (t(i, i) + t(i + 1, i + 1));
            const double det = t(i, i) * t(i + 1, i + 1) - t(i, i + 1) * t(i + 1, i);
            const double disc = re * re - det;  // negative for a true complex pair
            const double im = disc < 0.0 ? std::sqrt(-disc) : 0.0;
            ev(i) = Complex(re, im);
            ev(i + 1) = Complex(re, -im);
            i += 2;
        } else {
            ev(i) = Complex(t(i, i), 0.0);
            ++i;
        }
    }
    return ev;
}

/// Solves T X + X T^T + Q = 0 for upper quasi-triangular T (real Schur form)
/// by block back-substitution. Q is symmetric; the result is symmetric.
inline Matrix solve_quasi_triangular_lyap(const Matrix& t, const Matrix& q) {
    const Eigen::Index n = t.rows();
    Matrix x = Matrix::Zero(n, n);

    // diagonal block boundaries
    std::vector<Eigen::Index> starts;
    {
        Eigen::Index i = 0;
        while (i < n) {
            starts.push_back(i);
            i += (i + 1 < n && t(i + 1, i) != 0.0) ? 2 : 1;
        }
    }
    const auto nb = static_cast<Eigen::Index>(starts.size());
    auto width = [&](Eigen::Index b) {
        return (b + 1 < nb ? starts[b + 1] : n) - starts[b];
    };

    for (Eigen::Index jb = nb - 1; jb >= 0; --jb) {
        const Eigen::Index j0 = starts[jb], w = width(jb);
        // rhs = -Q(:,J) - sum_{l>jb} X(:,l) T(J,l)^T
        Matrix rhs = -q.middleCols(j0, w);
        for (Eigen::Index lb = jb + 1; lb < nb; ++lb) {
            const Eigen::Index l0 = starts[lb], lw = width(lb);
            rhs.noalias() -= x.middleCols(l0, lw) * t.block(j0, l0, w, lw).transpose();
        }
        // solve T * Xj + Xj * T(J,J)^T = rhs, row blocks bottom-up
        const Matrix tjj = t.block(j0, j0, w, w);
        for (Eigen::Index ib = nb - 1; ib >= 0; --ib) {
            const Eigen::Index i0 = starts[ib], h = width(ib);
            Matrix r = rhs.middleRows(i0, h);
            for (Eigen::Index kb = ib + 1; kb < nb; ++kb) {
                const Eigen::Index k0 = starts[kb], kw = width(kb);
                r.noalias() -= t.block(i0, k0, h, kw) * x.block(k0, j0, kw, w);
            }
            // small Sylvester T_ii W + W T_jj^T = r via Kronecker system
            const Matrix tii = t.block(i0, i0, h, h);
            Matrix sys = Matrix::Zero(h * w, h * w);
            Vector rv(h * w);
            for (Eigen::Index c = 0; c < w; ++c) {
                sys.block(c * h, c * h, h, h) += tii;
                for (Eigen::Index c2 = 0; c2 < w; ++c2)
                    sys.block(c * h, c2 * h, h, h).diagonal().array() += tjj(c, c2);
                rv.segment(c * h, h) = r.col(c);
            }
            Eigen::PartialPivLU<Matrix> lu(sys);
            const Vector wv = lu.solve(rv);
            if (!wv.allFinite())
                throw LyapSolveFailure("singular diagonal system in Lyapunov back-substitution");
            for (Eigen::Index c = 0; c < w; ++c)
                x.block(i0, j0 + c, h, 1) = wv.segment(c * h, h);
        }
    }
    return x;
}

struct SchurPair {
    Matrix u, t;        // A = U T U^T
    ComplexVector eig;  // spectrum of A
    double max_re = 0.0;
};

inline SchurPair real_schur(const Matrix& a) {
    SchurPair s;
    if (a.rows() == 0) {
        s.u = s.t = a;
        s.eig = ComplexVector(0);
        s.max_re = -std::numeric_limits<double>::infinity();
        return s;
    }
    Eigen::RealSchur<Matrix> schur(a);
    if (schur.info() != Eigen::Success) throw EigenFailure("real Schur decomposition failed");
    s.u = schur.matrixU();
    s.t = schur.matrixT();
    s.eig = schur_eigenvalues(s.t);
    s.max_re = s.eig.real().maxCoeff();
    return s;
}

/// Solves A X + X A^T + Q = 0 given a precomputed Schur form of A.
inline Matrix solve_lyapunov_schur(const SchurPair& s, const Matrix& q) {
    if (q.rows() == 0) return q;
    const Matrix qt = s.u.transpose() * q * s.u;
    const Matrix xt = solve_quasi_triangular_lyap(s.t, qt);
    return symmetrize(s.u * xt * s.u.transpose());
}

/// Solves A^T Y + Y A + Q = 0 given the Schur form of A (not of A^T).
/// In the Schur basis the equation reads T^T Z + Z T + Q~ = 0; flipping rows
/// and columns with the reversal permutation turns it back into the upper
/// quasi-triangular form handled above.
inline Matrix solve_lyapunov_transposed_schur(const SchurPair& s, const Matrix& q) {
    if (q.rows() == 0) return q;
    const Matrix qt = s.u.transpose() * q * s.u;
    const Matrix tf = s.t.transpose().rowwise().reverse().colwise().reverse();
    const Matrix qf = qt.rowwise().reverse().colwise().reverse();
    Matrix zf = solve_quasi_triangular_lyap(tf, qf);
    const Matrix z = zf.rowwise().reverse().colwise().reverse();
    return symmetrize(s.u * z * s.u.transpose());
}

} // namespace detail

/// Solves the continuous Lyapunov equation A X + X A^T + Q_rhs = 0 for
/// stable A via the Bartels-Stewart algorithm (real Schur + block
/// back-substitution). Call with A^T for the transposed orientation.
inline Matrix solve_lyapunov(const Matrix& a, const Matrix& q_rhs, const Tolerances& tol = {}) {
    if (a.rows() != a.cols() || q_rhs.rows() != a.rows() || q_rhs.cols() != a.cols())
        throw DimensionMismatch("solve_lyapunov: A and Q_rhs must be square of equal size");
    if (a.rows() == 0) return q_rhs;

    const detail::SchurPair s = detail::real_schur(a);
    if (s.max_re >= -tol.stab)
        throw UnstableCoefficient("solve_lyapunov: coefficient matrix is not stable");
    const Matrix x = detail::solve_lyapunov_schur(s, detail::symmetrize(q_rhs));

    const double res = (a * x + x * a.transpose() + q_rhs).norm();
    if (!(res <= tol.lyap * (1.0 + x.norm())))
        throw LyapSolveFailure("solve_lyapunov: residual " + std::to_string(res) +
                               " exceeds tolerance");
    return x;
}

} // namespace lqgopt
