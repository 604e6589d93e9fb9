#pragma once
// Stationary-point structure theory: standard form at non-minimal stationary
// points, the certificate transfer function G(s) with its zero set, the
// explicit escape direction, and the stationary-point classifier.

#include <algorithm>
#include <complex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lqgopt/objective.hpp"

namespace lqgopt {

namespace detail {

/// Horner evaluation of a polynomial given coefficients highest degree first.
inline Complex poly_eval(const Vector& coeffs, Complex s) {
    Complex acc(0.0, 0.0);
    for (Eigen::Index i = 0; i < coeffs.size(); ++i) acc = acc * s + coeffs(i);
    return acc;
}

/// Roots via the companion matrix after trimming negligible leading
/// coefficients (relative to the largest coefficient magnitude).
inline std::vector<Complex> poly_roots(const Vector& coeffs, double trim_rel = 1e-12) {
    const double scale = coeffs.size() ? coeffs.cwiseAbs().maxCoeff() : 0.0;
    if (scale == 0.0) return {};
    Eigen::Index lead = 0;
    while (lead < coeffs.size() && std::abs(coeffs(lead)) <= trim_rel * scale) ++lead;
    const Eigen::Index deg = coeffs.size() - lead - 1;
    if (deg < 1) return {};

    Matrix comp = Matrix::Zero(deg, deg);
    comp.bottomLeftCorner(deg - 1, deg - 1).setIdentity();
    for (Eigen::Index i = 0; i < deg; ++i) comp(0, i) = -coeffs(lead + 1 + i) / coeffs(lead);
    Eigen::EigenSolver<Matrix> es(comp);
    if (es.info() != Eigen::Success) throw EigenFailure("poly_roots: eigensolver failed");
    std::vector<Complex> roots(es.eigenvalues().begin(), es.eigenvalues().end());
    std::sort(roots.begin(), roots.end(), [](Complex a, Complex b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return roots;
}

/// Haar-distributed random orthogonal matrix (QR of a Gaussian matrix with
/// the sign convention fixed by R's diagonal).
inline Matrix random_orthogonal(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix g(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) g(i, j) = gauss(rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < n; ++i)
        if (r(i, i) < 0.0) q.col(i) = -q.col(i);
    return q;
}

} // namespace detail

/// Decomposition of an (approximately) stationary controller into its minimal
/// part, the retained decoupled block, and the reassembled standard form.
struct StandardForm {
    Controller k_hat;    // minimal part, order q_hat
    Matrix lambda;       // (n - q_hat) x (n - q_hat) decoupled block
    Controller k_tilde;  // blkdiag(k_hat, lambda), order n
};

/// Builds the standard form at a stationary controller of full order n.
/// The non-minimal block Lambda is recovered by completing the balanced
/// truncation coordinates: with T_r S_r = I, pick S_c spanning ker(T_r) and
/// the dual T_c with T_c S_r = 0, T_c S_c = I; then Lambda = T_c A_K S_c.
inline StandardForm standard_form(const Plant& pl, const Controller& k, double redtol,
                                  const Tolerances& tol = {}) {
    check_dimensions(pl, k);
    if (k.order() != pl.n())
        throw InvalidArgument("standard_form: controller order must equal the plant order");
    const double gnorm = gradient(pl, k, tol).norm();
    if (gnorm > tol.g_th)
        throw NotStationary("standard_form: gradient norm " + std::to_string(gnorm) +
                            " exceeds threshold");

    const Eigen::Index q = k.order();
    detail::BalancedTruncation bt = detail::balanced_truncate(k, redtol, tol);

    Matrix lambda;
    if (bt.r == q) {
        lambda.resize(0, 0);
    } else if (bt.r == 0) {
        lambda = k.A;
    } else {
        Eigen::JacobiSVD<Matrix> svd(bt.t_r, Eigen::ComputeFullV);
        const Matrix s_c = svd.matrixV().rightCols(q - bt.r);  // orthonormal ker(T_r)
        const Matrix pi = Matrix::Identity(q, q) - bt.s_r * bt.t_r;
        Eigen::FullPivLU<Matrix> lu(s_c.transpose() * pi * s_c);
        if (!lu.isInvertible())
            throw ReductionFailure("standard_form: coordinate completion is singular");
        const Matrix t_c = lu.solve(s_c.transpose() * pi);
        lambda = t_c * k.A * s_c;
    }

    StandardForm sf{std::move(bt.k_hat), std::move(lambda), Controller{}};
    sf.k_tilde = augment_controller(sf.k_hat, sf.lambda, tol);

    const double j_before = cost(pl, k, tol);
    const double j_after = cost(pl, sf.k_tilde, tol);
    if (std::abs(j_after - j_before) > 1e-6 * (1.0 + std::abs(j_before)))
        throw NotStationary("standard_form: reassembly changed the cost; input is not "
                            "close enough to a stationary point");
    const double gnorm_tilde = gradient(pl, sf.k_tilde, tol).norm();
    if (gnorm_tilde > 10.0 * tol.g_th)
        throw NotStationary("standard_form: reassembled point is not stationary (grad " +
                            std::to_string(gnorm_tilde) + ")");
    return sf;
}

/// Data of the certificate transfer function G(s) = C_cl (sI - A_cl^T)^-1 B_cl
/// built from the minimal part k_hat of a stationary point.
struct AugmentedData {
    Matrix a_cl;           // (n+q) x (n+q) closed loop of (plant, k_hat)
    Matrix x_op, y_op;     // its two Gramians
    Matrix c_bar, ck_bar;  // [C 0] (p x (n+q)),  [0 C_K] (m x (n+q))
    Matrix b_bar, bk_bar;  // [B; 0] ((n+q) x m), [0; B_K] ((n+q) x p)
    Matrix c_cl;           // C_bar X_op + V Bk_bar^T   (p x (n+q))
    Matrix b_cl;           // Y_op B_bar + Ck_bar^T R   ((n+q) x m)

    Eigen::Index order() const { return a_cl.rows(); }
    double scale() const { return c_cl.norm() * b_cl.norm(); }
};

inline AugmentedData build_augmented(const Plant& pl, const Controller& k_hat,
                                     const Tolerances& tol = {}) {
    const ClosedLoopData cl = assemble_closed_loop(pl, k_hat, tol);
    const Eigen::Index n = pl.n(), q = k_hat.order(), nq = n + q;

    AugmentedData d;
    d.a_cl = cl.A_cl;
    d.x_op = cl.X;
    d.y_op = cl.Y;
    d.c_bar = Matrix::Zero(pl.p(), nq);
    d.c_bar.leftCols(n) = pl.C;
    d.b_bar = Matrix::Zero(nq, pl.m());
    d.b_bar.topRows(n) = pl.B;
    d.ck_bar = Matrix::Zero(pl.m(), nq);
    d.ck_bar.rightCols(q) = k_hat.C;
    d.bk_bar = Matrix::Zero(nq, pl.p());
    d.bk_bar.bottomRows(q) = k_hat.B;
    d.c_cl = d.c_bar * d.x_op + pl.V * d.bk_bar.transpose();
    d.b_cl = d.y_op * d.b_bar + d.ck_bar.transpose() * pl.R;
    return d;
}

/// Pointwise evaluation of G(s) by linear solve (never an explicit inverse).
inline ComplexMatrix evaluate_G(const AugmentedData& d, Complex s) {
    const Eigen::Index nq = d.order();
    const ComplexMatrix res =
        ComplexMatrix::Identity(nq, nq) * s - d.a_cl.transpose().cast<Complex>();
    Eigen::FullPivLU<ComplexMatrix> lu(res);
    if (!lu.isInvertible())
        throw ResolventSingular("evaluate_G: s is an eigenvalue of A_cl^T");
    return d.c_cl.cast<Complex>() * lu.solve(d.b_cl.cast<Complex>());
}

/// Largest entry magnitude of G over a fixed logarithmic sample grid on the
/// positive real axis (the certificate's "identically zero" cross-check).
inline double max_abs_G_on_grid(const AugmentedData& d, int npts = 64) {
    double best = 0.0;
    for (int i = 0; i < npts; ++i) {
        const double ex = -2.0 + 4.0 * static_cast<double>(i) / (npts - 1);
        const ComplexMatrix g = evaluate_G(d, Complex(std::pow(10.0, ex), 0.0));
        best = std::max(best, g.cwiseAbs().maxCoeff());
    }
    return best;
}

/// G(s) as per-entry rational functions over the common monic denominator
/// det(sI - A_cl^T). Coefficients are stored highest degree first. Common
/// numerator/denominator factors are deliberately not cancelled here.
struct RationalG {
    std::vector<std::vector<Vector>> num;  // [output i][input j], length N
    Vector den;                            // length N+1, monic
    double scale = 0.0;                    // ||C_cl||_F ||B_cl||_F
};

/// Faddeev-LeVerrier resolvent expansion: (sI - M)^-1 = sum_k D_k s^{N-1-k} / det,
/// D_0 = I, c_k = -tr(M D_{k-1})/k, D_k = M D_{k-1} + c_k I. Validated against
/// evaluate_G on a grid of 2N+1 points.
inline RationalG rationalize_G(const AugmentedData& d, [[maybe_unused]] const Tolerances& tol = {}) {
    const Eigen::Index nq = d.order();
    const Eigen::Index p = d.c_cl.rows(), m = d.b_cl.cols();
    const Matrix mat = d.a_cl.transpose();

    RationalG g;
    g.scale = d.scale();
    g.den.resize(nq + 1);
    g.den(0) = 1.0;
    g.num.assign(p, std::vector<Vector>(m, Vector::Zero(nq)));

    Matrix dk = Matrix::Identity(nq, nq);
    for (Eigen::Index k = 0; k < nq; ++k) {
        const Matrix proj = d.c_cl * dk * d.b_cl;  // coefficient of s^{nq-1-k}
        for (Eigen::Index i = 0; i < p; ++i)
            for (Eigen::Index j = 0; j < m; ++j) g.num[i][j](k) = proj(i, j);
        const Matrix md = mat * dk;
        const double ck = -md.trace() / static_cast<double>(k + 1);
        g.den(k + 1) = ck;
        dk = md + ck * Matrix::Identity(nq, nq);
    }

    for (Eigen::Index pt = 0; pt < 2 * nq + 1; ++pt) {
        const Complex s(0.25 + 0.5 * static_cast<double>(pt), 0.0);
        const ComplexMatrix exact = evaluate_G(d, s);
        const Complex den_v = detail::poly_eval(g.den, s);
        for (Eigen::Index i = 0; i < p; ++i)
            for (Eigen::Index j = 0; j < m; ++j) {
                const Complex fit = detail::poly_eval(g.num[i][j], s) / den_v;
                if (std::abs(fit - exact(i, j)) > 1e-6 * (g.scale + std::abs(exact(i, j))))
                    throw FitFailure("rationalize_G: validation grid mismatch at s = " +
                                     std::to_string(s.real()));
            }
    }
    return g;
}

/// Common zeros of all not-identically-zero entries of G. Numerator roots that
/// match a denominator root to tol.gcd are removed (pole-zero cancellation);
/// the remaining root sets are intersected with clustering tolerance.
inline std::vector<Complex> zero_set(const RationalG& g, const Tolerances& tol = {}) {
    const double coeff_floor = tol.g_zero * (1.0 + g.scale);
    const std::vector<Complex> poles = detail::poly_roots(g.den);

    bool any_nonzero = false;
    std::vector<Complex> common;
    for (const auto& row : g.num)
        for (const Vector& num : row) {
            if (num.size() == 0 || num.cwiseAbs().maxCoeff() <= coeff_floor) continue;

            std::vector<Complex> roots = detail::poly_roots(num);
            std::vector<bool> used(poles.size(), false);
            std::vector<Complex> kept;
            for (const Complex& r : roots) {
                bool cancelled = false;
                for (std::size_t i = 0; i < poles.size(); ++i)
                    if (!used[i] && std::abs(r - poles[i]) <= tol.gcd) {
                        used[i] = true;
                        cancelled = true;
                        break;
                    }
                if (!cancelled) kept.push_back(r);
            }

            if (!any_nonzero) {
                common = std::move(kept);
                any_nonzero = true;
            } else {
                std::vector<Complex> next;
                for (const Complex& z : common)
                    for (const Complex& r : kept)
                        if (std::abs(z - r) <= tol.cluster) {
                            next.push_back(z);
                            break;
                        }
                common = std::move(next);
            }
        }

    if (!any_nonzero)
        throw GIsZero("zero_set: every numerator is identically zero");

    std::sort(common.begin(), common.end(), [](Complex a, Complex b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    std::vector<Complex> dedup;
    for (const Complex& z : common)
        if (dedup.empty() || std::abs(z - dedup.back()) > tol.cluster) dedup.push_back(z);
    return dedup;
}

/// Escape direction at the augmented point K~ = blkdiag(k_hat, Lambda) for an
/// eigenvalue lambda of -Lambda outside the zero set: with v the unit
/// eigenvector of Lambda for -lambda and (i,j) the entry maximizing |G(lambda)|,
///   dC = [0, e_j v^T],  dB = [0; v e_i^T],  dA = 0,
/// so that Hess(delta, delta) = 4 G(lambda)_{ij}.
inline std::pair<ControllerDirection, double> escape_direction(const Plant& pl,
                                                               const Controller& k_hat,
                                                               const Matrix& lambda_blk,
                                                               double lambda,
                                                               const Tolerances& tol = {}) {
    const Eigen::Index q = k_hat.order(), e = lambda_blk.rows();
    if (lambda_blk.cols() != e || q + e != pl.n())
        throw DimensionMismatch("escape_direction: Lambda must be (n-q) x (n-q)");
    if (!detail::is_symmetric(lambda_blk, tol.sym))
        throw NonSymmetricLambda("escape_direction: Lambda must be symmetric");
    if (!is_stable(lambda_blk, tol.stab))
        throw UnstableLambda("escape_direction: Lambda must be stable");

    Eigen::SelfAdjointEigenSolver<Matrix> es(detail::symmetrize(lambda_blk));
    if (es.info() != Eigen::Success)
        throw EigenFailure("escape_direction: eigensolver failed");
    Eigen::Index which = 0;
    (es.eigenvalues().array() + lambda).abs().minCoeff(&which);
    if (std::abs(es.eigenvalues()(which) + lambda) > tol.cluster * (1.0 + std::abs(lambda)))
        throw InvalidArgument("escape_direction: lambda is not an eigenvalue of -Lambda");
    const Vector v = es.eigenvectors().col(which);

    const AugmentedData data = build_augmented(pl, k_hat, tol);
    const ComplexMatrix gl = evaluate_G(data, Complex(lambda, 0.0));
    Eigen::Index gi = 0, gj = 0;
    gl.cwiseAbs().maxCoeff(&gi, &gj);
    if (gl.cwiseAbs().maxCoeff() <= tol.cert)
        throw LambdaInZeroSet("escape_direction: G(lambda) vanishes in every entry");

    ControllerDirection delta = ControllerDirection::zero(pl.n(), pl.m(), pl.p());
    delta.dB.bottomRows(e) = v * Vector::Unit(pl.p(), gi).transpose();
    delta.dC.rightCols(e) = Vector::Unit(pl.m(), gj) * v.transpose();

    const Controller k_tilde = augment_controller(k_hat, lambda_blk, tol);
    const double value = hessian_quadratic_form(pl, k_tilde, delta, tol);
    return {std::move(delta), value};
}

enum class Verdict { MinimalGlobalOptimum, GIdenticallyZero, StrictSaddleCertified, Inconclusive };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::MinimalGlobalOptimum: return "MinimalGlobalOptimum";
        case Verdict::GIdenticallyZero: return "GIdenticallyZero";
        case Verdict::StrictSaddleCertified: return "StrictSaddleCertified";
        case Verdict::Inconclusive: return "Inconclusive";
    }
    return "Inconclusive";
}

struct EscapeInfo {
    double lambda = 0.0;
    ControllerDirection delta;
    double hess_value = 0.0;
};

struct SaddleCertificate {
    Verdict verdict = Verdict::Inconclusive;
    Eigen::Index q_hat = 0;
    AugmentedData data;
    RationalG rational;
    std::vector<Complex> zeros;
    std::optional<EscapeInfo> escape;
    std::string diagnostics;
};

namespace detail {

/// Random stable symmetric Lambda: Haar orthogonal eigenbasis with i.i.d.
/// eigenvalues uniform on lam_range, redrawn (<= 10 times) while any
/// eigenvalue of -Lambda lies within tol.cluster of the zero set.
inline Matrix draw_symmetric_lambda(Eigen::Index e, const std::vector<Complex>& zeros,
                                    std::mt19937_64& rng, double lam_lo, double lam_hi,
                                    const Tolerances& tol) {
    std::uniform_real_distribution<double> unif(lam_lo, lam_hi);
    for (int attempt = 0; attempt < 10; ++attempt) {
        Vector eigs(e);
        for (Eigen::Index i = 0; i < e; ++i) eigs(i) = unif(rng);
        bool clash = false;
        for (Eigen::Index i = 0; i < e && !clash; ++i)
            for (const Complex& z : zeros)
                if (std::abs(Complex(-eigs(i), 0.0) - z) <= tol.cluster) {
                    clash = true;
                    break;
                }
        if (clash) continue;
        const Matrix u = random_orthogonal(e, rng);
        return symmetrize(u * eigs.asDiagonal() * u.transpose());
    }
    throw LambdaInZeroSet("draw_symmetric_lambda: could not avoid the zero set");
}

} // namespace detail

/// Classifies an approximately stationary full-order controller per the
/// standard-form theory: minimal => global optimum; otherwise examine G(s).
/// Numerical failures downgrade the verdict to Inconclusive rather than throw.
inline SaddleCertificate classify_stationary(const Plant& pl, const Controller& k,
                                             std::mt19937_64& rng, const Tolerances& tol = {},
                                             double redtol = 1e-8) {
    check_dimensions(pl, k);
    const double gnorm = gradient(pl, k, tol).norm();
    if (gnorm > tol.g_th)
        throw NotStationary("classify_stationary: gradient norm " + std::to_string(gnorm) +
                            " exceeds threshold");

    SaddleCertificate cert;
    try {
        auto [k_hat, q_hat] = minimal_realization(k, redtol, tol);
        cert.q_hat = q_hat;
        cert.data = build_augmented(pl, k_hat, tol);
        cert.rational = rationalize_G(cert.data, tol);

        if (q_hat == k.order()) {
            cert.verdict = Verdict::MinimalGlobalOptimum;
            return cert;
        }

        try {
            cert.zeros = zero_set(cert.rational, tol);
        } catch (const GIsZero&) {
            const double grid_max = max_abs_G_on_grid(cert.data);
            if (grid_max <= tol.g_zero * (1.0 + cert.rational.scale)) {
                cert.verdict = Verdict::GIdenticallyZero;
            } else {
                cert.verdict = Verdict::Inconclusive;
                cert.diagnostics = "numerators vanish but the grid maximum " +
                                   std::to_string(grid_max) + " does not";
            }
            return cert;
        }

        const Eigen::Index e = k.order() - q_hat;
        std::string last_failure;
        for (int attempt = 0; attempt < 10; ++attempt) {
            const Matrix lam =
                detail::draw_symmetric_lambda(e, cert.zeros, rng, -2.0, -0.1, tol);
            Eigen::SelfAdjointEigenSolver<Matrix> es(lam);
            // Strongest certificate: the eigenvalue of -Lambda maximizing |G|.
            double best_val = 0.0;
            Eigen::Index best = 0;
            for (Eigen::Index i = 0; i < e; ++i) {
                const double cand =
                    evaluate_G(cert.data, Complex(-es.eigenvalues()(i), 0.0)).cwiseAbs().maxCoeff();
                if (cand > best_val) {
                    best_val = cand;
                    best = i;
                }
            }
            try {
                auto [delta, value] =
                    escape_direction(pl, k_hat, lam, -es.eigenvalues()(best), tol);
                if (std::abs(value) > tol.cert) {
                    cert.verdict = Verdict::StrictSaddleCertified;
                    cert.escape = EscapeInfo{-es.eigenvalues()(best), std::move(delta), value};
                    return cert;
                }
                last_failure = "quadratic form below certification threshold";
            } catch (const LambdaInZeroSet& ex) {
                last_failure = ex.what();
            }
        }
        cert.verdict = Verdict::Inconclusive;
        cert.diagnostics = "no certifying direction found: " + last_failure;
    } catch (const Error& ex) {
        cert.verdict = Verdict::Inconclusive;
        cert.diagnostics = ex.what();
    }
    return cert;
}

} // namespace lqgopt
