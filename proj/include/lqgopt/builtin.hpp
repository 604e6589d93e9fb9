#pragma once

#include <string>
#include <string_view>

#include "lqgopt/objective.hpp"
#include "lqgopt/types.hpp"

namespace lqgopt::builtin {

/// Built-in benchmark plants. Entries printed as fractions are stored as
/// exact rationals.
inline Plant plant(std::string_view id) {
    Plant pl;
    if (id == "doyle") {
        pl.A = (Matrix(2, 2) << 1, 1, 0, 1).finished();
        pl.B = (Matrix(2, 1) << 0, 1).finished();
        pl.C = (Matrix(1, 2) << 1, 0).finished();
        pl.W = 5.0 * Matrix::Ones(2, 2);
        pl.V = Matrix::Identity(1, 1);
        pl.Q = 5.0 * Matrix::Ones(2, 2);
        pl.R = Matrix::Identity(1, 1);
    } else if (id == "nonminimal") {
        pl.A = (Matrix(2, 2) << 0, -1, 1, 0).finished();
        pl.B = (Matrix(2, 1) << 1, 0).finished();
        pl.C = (Matrix(1, 2) << 1, -1).finished();
        pl.W = (Matrix(2, 2) << 1, -1, -1, 16).finished();
        pl.V = Matrix::Identity(1, 1);
        pl.Q = (Matrix(2, 2) << 4, 0, 0, 0).finished();
        pl.R = Matrix::Identity(1, 1);
    } else if (id == "openloop") {
        pl.A = (Matrix(2, 2) << -0.5, 0, 0.5, -1).finished();
        pl.B = (Matrix(2, 1) << -1, 1).finished();
        pl.C = (Matrix(1, 2) << -1.0 / 6.0, 11.0 / 12.0).finished();
        pl.W = Matrix::Identity(2, 2);
        pl.V = Matrix::Identity(1, 1);
        pl.Q = Matrix::Identity(2, 2);
        pl.R = Matrix::Identity(1, 1);
    } else {
        throw ParseError("unknown builtin plant '" + std::string(id) + "'");
    }
    return pl;
}

/// Named controllers used by the examples and experiments. "riccati" is the
/// optimal controller of the given plant; the remaining names are fixed
/// matrices (members of the stationary families of the builtin plants).
inline Controller controller(std::string_view id, const Plant& pl, const Tolerances& tol = {}) {
    auto fixed = [](std::initializer_list<double> a, std::initializer_list<double> b,
                    std::initializer_list<double> c, Eigen::Index q) {
        Controller k;
        k.A = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                             Eigen::RowMajor>>(a.begin(), q, q);
        k.B = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                             Eigen::RowMajor>>(
            b.begin(), q, static_cast<Eigen::Index>(b.size()) / q);
        k.C = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                             Eigen::RowMajor>>(
            c.begin(), static_cast<Eigen::Index>(c.size()) / q, q);
        return k;
    };

    if (id == "riccati") return optimal_controller(pl, tol).K;
    if (id == "saddle_lambda_half") return fixed({-0.5, 0, 0, -0.5}, {0, 0}, {0, 0}, 2);
    if (id == "saddle_lambda_mixed") return fixed({-0.5, 0, 0, -0.1}, {0, 0}, {0, 0}, 2);
    if (id == "fig1_init") return fixed({-0.5, 0, 0, -0.5}, {0, 0.01}, {0, -0.01}, 2);
    if (id == "augmented_k1") return fixed({-3, 0, 0, -1}, {1, 0}, {-2, 0}, 2);
    if (id == "augmented_k2") return fixed({-3, 0, 0, -1}, {-4, 0}, {0.5, 0}, 2);
    if (id == "k1") return fixed({-3}, {1}, {-2}, 1);
    if (id == "k2") return fixed({-3}, {-4}, {0.5}, 1);
    throw ParseError("unknown builtin controller '" + std::string(id) + "'");
}

} // namespace lqgopt::builtin
