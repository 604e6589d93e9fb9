#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "lqgopt/lyapunov.hpp"
#include "lqgopt/riccati.hpp"

using namespace lqgopt;
using test::max_abs_diff;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("solve_lyapunov: diagonal case") {
    const Matrix a = -Matrix::Identity(2, 2);
    const Matrix x = solve_lyapunov(a, 2.0 * Matrix::Identity(2, 2));
    CHECK(max_abs_diff(x, Matrix::Identity(2, 2)) < 1e-14);
}

TEST_CASE("solve_lyapunov: openloop plant Gramians") {
    const Matrix a = (Matrix(2, 2) << -0.5, 0, 0.5, -1).finished();
    const Matrix x = solve_lyapunov(a, Matrix::Identity(2, 2));
    const Matrix x_ref = (Matrix(2, 2) << 3, 1, 1, 2).finished() / 3.0;
    CHECK(max_abs_diff(x, x_ref) < 1e-12);

    const Matrix y = solve_lyapunov(a.transpose(), Matrix::Identity(2, 2));
    const Matrix y_ref = (Matrix(2, 2) << 7, 1, 1, 3).finished() / 6.0;
    CHECK(max_abs_diff(y, y_ref) < 1e-12);
}

TEST_CASE("solve_lyapunov: rejects unstable coefficient") {
    CHECK_THROWS_AS(solve_lyapunov(Matrix::Identity(2, 2), Matrix::Identity(2, 2)),
                    UnstableCoefficient);
    const Matrix marginal = (Matrix(2, 2) << 0, 1, 0, 0).finished();
    CHECK_THROWS_AS(solve_lyapunov(marginal, Matrix::Identity(2, 2)), UnstableCoefficient);
}

TEST_CASE("solve_lyapunov: complex spectrum and residuals") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 5);
        const Matrix a = test::random_matrix(n, n, rng) - (3.0 + static_cast<double>(trial) * 0.1) * Matrix::Identity(n, n);
        if (!is_stable(a, 1e-6)) continue;
        const Matrix l = test::random_matrix(n, n, rng);
        const Matrix q = l * l.transpose();  // PSD right-hand side
        const Matrix x = solve_lyapunov(a, q);
        CHECK((a * x + x * a.transpose() + q).norm() <= 1e-9 * (1.0 + x.norm()));
        CHECK(detail::min_eig_sym(x) > -1e-10 * (1.0 + x.norm()));
        CHECK(max_abs_diff(x, x.transpose()) < 1e-14 * (1.0 + x.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("solve_lyapunov: linearity in the right-hand side") {
    std::mt19937_64 rng(11);
    const Matrix a = test::random_matrix(4, 4, rng) - 4.0 * Matrix::Identity(4, 4);
    REQUIRE(is_stable(a));
    const Matrix q1 = detail::symmetrize(test::random_matrix(4, 4, rng));
    const Matrix q2 = detail::symmetrize(test::random_matrix(4, 4, rng));
    const Matrix lhs = solve_lyapunov(a, q1 + q2);
    const Matrix rhs = solve_lyapunov(a, q1) + solve_lyapunov(a, q2);
    CHECK(max_abs_diff(lhs, rhs) < 1e-10 * (1.0 + lhs.cwiseAbs().maxCoeff()));
}

TEST_CASE("solve_lyapunov: empty system") {
    const Matrix x = solve_lyapunov(Matrix(0, 0), Matrix(0, 0));
    CHECK(x.rows() == 0);
}

TEST_CASE("solve_riccati_pair: doyle plant") {
    const Plant pl = builtin::plant("doyle");
    const RiccatiSolution rs = solve_riccati_pair(pl);

    const Matrix p_ref = (Matrix(2, 2) << 5, 5, 5, 10).finished();
    const Matrix s_ref = (Matrix(2, 2) << 10, 5, 5, 5).finished();
    CHECK(max_abs_diff(rs.P, p_ref) < 1e-9);
    CHECK(max_abs_diff(rs.S, s_ref) < 1e-9);

    CHECK(rs.res_p <= 1e-10 * std::pow(1.0 + rs.P.norm(), 2));
    CHECK(rs.res_s <= 1e-10 * std::pow(1.0 + rs.S.norm(), 2));
    CHECK(is_stable(pl.A - rs.L * pl.C));
    CHECK(is_stable(pl.A - pl.B * rs.M));
}

TEST_CASE("optimal_controller: doyle plant matches the known optimum") {
    const Plant pl = builtin::plant("doyle");
    const OptimalController oc = optimal_controller(pl);

    const Matrix ak = (Matrix(2, 2) << -4, 1, -10, -4).finished();
    const Matrix bk = (Matrix(2, 1) << 5, 5).finished();
    const Matrix ck = (Matrix(1, 2) << -5, -5).finished();
    CHECK(max_abs_diff(oc.K.A, ak) < 1e-6);
    CHECK(max_abs_diff(oc.K.B, bk) < 1e-6);
    CHECK(max_abs_diff(oc.K.C, ck) < 1e-6);
    CHECK_THAT(oc.J, WithinAbs(750.0, 1e-7));
}

TEST_CASE("optimal_controller: nonminimal plant") {
    const Plant pl = builtin::plant("nonminimal");
    const OptimalController oc = optimal_controller(pl);

    const Matrix ak = (Matrix(2, 2) << -3, 0, 5, -4).finished();
    const Matrix bk = (Matrix(2, 1) << 1, -4).finished();
    const Matrix ck = (Matrix(1, 2) << -2, 0).finished();
    CHECK(max_abs_diff(oc.K.A, ak) < 1e-6);
    CHECK(max_abs_diff(oc.K.B, bk) < 1e-6);
    CHECK(max_abs_diff(oc.K.C, ck) < 1e-6);
    CHECK_THAT(oc.J, WithinAbs(38.0, 1e-8));
}

TEST_CASE("optimal_controller: openloop plant (two printed decimals)") {
    const Plant pl = builtin::plant("openloop");
    const OptimalController oc = optimal_controller(pl);

    const Matrix ak = (Matrix(2, 2) << -1.10, 0.13, 1.19, -1.64).finished();
    const Matrix bk = (Matrix(2, 1) << 0.11, 0.45).finished();
    const Matrix ck = (Matrix(1, 2) << 0.62, -0.22).finished();
    CHECK(max_abs_diff(oc.K.A, ak) < 5e-3);
    CHECK(max_abs_diff(oc.K.B, bk) < 5e-3);
    CHECK(max_abs_diff(oc.K.C, ck) < 5e-3);
    CHECK_THAT(oc.J, WithinAbs(1.666254675410388, 1e-9));
}

TEST_CASE("optimal_controller: both trace formulas agree") {
    for (const char* id : {"doyle", "nonminimal", "openloop"}) {
        const Plant pl = builtin::plant(id);
        const OptimalController oc = optimal_controller(pl);
        const ClosedLoopData cl = assemble_closed_loop(pl, oc.K);
        const double j_x = (cl.Q_cl * cl.X).trace();
        const double j_y = (cl.W_cl * cl.Y).trace();
        CHECK_THAT(j_x, WithinRel(j_y, 1e-8));
    }
}

TEST_CASE("validate_plant: accepts the builtin plants, rejects bad weights") {
    for (const char* id : {"doyle", "nonminimal", "openloop"})
        CHECK_NOTHROW(validate_plant(builtin::plant(id)));

    Plant bad = builtin::plant("openloop");
    bad.R = -Matrix::Identity(1, 1);
    CHECK_THROWS_AS(validate_plant(bad), InvalidArgument);

    Plant asym = builtin::plant("openloop");
    asym.W(0, 1) = 0.7;  // breaks symmetry
    CHECK_THROWS_AS(validate_plant(asym), InvalidArgument);

    Plant unobs = builtin::plant("openloop");
    unobs.C = (Matrix(1, 2) << 0, 0).finished();
    CHECK_THROWS_AS(validate_plant(unobs), InvalidArgument);
}
