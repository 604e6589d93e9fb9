#pragma once

#include <random>

#include "lqgopt/builtin.hpp"
#include "lqgopt/lti.hpp"
#include "lqgopt/objective.hpp"
#include "lqgopt/types.hpp"

namespace test {

using namespace lqgopt;

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return 1e300;
    if (a.size() == 0) return 0.0;
    return (a - b).cwiseAbs().maxCoeff();
}

inline Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng,
                            double scale = 1.0) {
    std::normal_distribution<double> n01;
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = scale * n01(rng);
    return m;
}

/// Random stabilizing controller: a scaled Gaussian perturbation of the
/// optimal controller, redrawn until the closed loop is comfortably stable
/// (margin keeps finite-difference checks well-conditioned).
inline Controller random_stabilizing(const Plant& pl, const Controller& k_star,
                                     std::mt19937_64& rng, double scale = 0.3,
                                     double margin = 0.05) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Controller k{k_star.A + random_matrix(k_star.A.rows(), k_star.A.cols(), rng, scale),
                     k_star.B + random_matrix(k_star.B.rows(), k_star.B.cols(), rng, scale),
                     k_star.C + random_matrix(k_star.C.rows(), k_star.C.cols(), rng, scale)};
        try {
            ClosedLoopData cl = assemble_closed_loop(pl, k);
            if (detail::real_schur(cl.A_cl).max_re < -margin) return k;
        } catch (const Error&) {
        }
    }
    throw std::runtime_error("random_stabilizing: no stabilizing draw found");
}

/// Central finite-difference gradient with per-entry relative step and one
/// Richardson extrapolation step (kills the h^2 truncation term, which
/// matters on stiff draws where the third derivative is large).
inline ControllerDirection fd_gradient(const Plant& pl, const Controller& k,
                                       double h_rel = 1e-4) {
    ControllerDirection g = ControllerDirection::zero(k.order(), k.m(), k.p());
    auto diff = [&](Matrix Controller::*block, Matrix ControllerDirection::*out) {
        const Matrix& base = k.*block;
        for (Eigen::Index i = 0; i < base.rows(); ++i)
            for (Eigen::Index j = 0; j < base.cols(); ++j) {
                const double h = h_rel * (1.0 + std::abs(base(i, j)));
                auto central = [&](double step) {
                    Controller kp = k, km = k;
                    (kp.*block)(i, j) += step;
                    (km.*block)(i, j) -= step;
                    return (cost(pl, kp) - cost(pl, km)) / (2.0 * step);
                };
                (g.*out)(i, j) = (4.0 * central(0.5 * h) - central(h)) / 3.0;
            }
    };
    diff(&Controller::A, &ControllerDirection::dA);
    diff(&Controller::B, &ControllerDirection::dB);
    diff(&Controller::C, &ControllerDirection::dC);
    return g;
}

/// Second-order central finite difference of J along a direction, with one
/// Richardson extrapolation step.
inline double fd_quadratic_form(const Plant& pl, const Controller& k,
                                const ControllerDirection& d, double h = 1e-3) {
    const double j0 = cost(pl, k);
    auto stencil = [&](double step) {
        const double jp = cost(pl, apply_step(k, d, step));
        const double jm = cost(pl, apply_step(k, d, -step));
        return (jp - 2.0 * j0 + jm) / (step * step);
    };
    return (4.0 * stencil(0.5 * h) - stencil(h)) / 3.0;
}

} // namespace test
