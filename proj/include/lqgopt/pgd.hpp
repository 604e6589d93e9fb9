#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lqgopt/objective.hpp"
#include "lqgopt/saddle.hpp"

namespace lqgopt {

enum class PgdVariant { Full, VanillaGD, GradPerturbOnly, LambdaPerturbOnly };
enum class PgdStatus { ConvergedMinimal, BudgetExhausted, Diverged };
enum class PgdEvent { None, LambdaPerturb, GradPerturb, Output };

inline const char* to_string(PgdVariant v) {
    switch (v) {
        case PgdVariant::Full: return "full";
        case PgdVariant::VanillaGD: return "vanilla";
        case PgdVariant::GradPerturbOnly: return "grad_only";
        case PgdVariant::LambdaPerturbOnly: return "lambda_only";
    }
    return "full";
}

inline PgdVariant parse_variant(const std::string& s) {
    if (s == "full") return PgdVariant::Full;
    if (s == "vanilla") return PgdVariant::VanillaGD;
    if (s == "grad_only") return PgdVariant::GradPerturbOnly;
    if (s == "lambda_only") return PgdVariant::LambdaPerturbOnly;
    throw ParseError("unknown pgd variant '" + s + "'");
}

inline const char* to_string(PgdStatus s) {
    switch (s) {
        case PgdStatus::ConvergedMinimal: return "ConvergedMinimal";
        case PgdStatus::BudgetExhausted: return "BudgetExhausted";
        case PgdStatus::Diverged: return "Diverged";
    }
    return "Diverged";
}

inline const char* to_string(PgdEvent e) {
    switch (e) {
        case PgdEvent::None: return "none";
        case PgdEvent::LambdaPerturb: return "lambda_perturb";
        case PgdEvent::GradPerturb: return "grad_perturb";
        case PgdEvent::Output: return "output";
    }
    return "none";
}

struct PgdConfig {
    double g_th = 1e-6;   ///< gradient-norm threshold
    double iota = 1e-4;   ///< minimality threshold on the smallest Hankel value
    int T = 20000;        ///< iteration budget
    int tau = 100;        ///< cooldown between perturbations
    double eta = 1e-2;    ///< step size
    double r = 0.01;      ///< gradient-perturbation ball radius
    double lam_lo = -2.0; ///< lambda draw range (both negative)
    double lam_hi = -0.1;
    std::uint64_t seed = 0;
    PgdVariant variant = PgdVariant::Full;
    bool avoid_zero_set = true;
};

inline void validate(const PgdConfig& cfg) {
    auto require = [](bool cond, const char* what) {
        if (!cond) throw InvalidArgument(what);
    };
    require(cfg.g_th > 0.0, "pgd config: g_th must be positive");
    require(cfg.iota > 0.0, "pgd config: iota must be positive");
    require(cfg.T >= 1, "pgd config: T must be at least 1");
    require(cfg.tau >= 0, "pgd config: tau must be nonnegative");
    require(cfg.eta > 0.0, "pgd config: eta must be positive");
    require(cfg.r > 0.0, "pgd config: r must be positive");
    require(cfg.lam_lo < cfg.lam_hi && cfg.lam_hi < 0.0,
            "pgd config: lambda range must be negative with lam_lo < lam_hi");
}

struct PgdRecord {
    int iter = 0;
    double cost = 0.0;
    double grad_norm = 0.0;
    double subopt = 0.0;  ///< (J(K_t) - J*) / J*
    PgdEvent event = PgdEvent::None;
    Eigen::Index q_t = 0;  ///< minimal order found at the latest reduction
};

struct PgdTrace {
    std::vector<PgdRecord> records;
    PgdStatus status = PgdStatus::BudgetExhausted;
    Controller k_final;
    double j_star = 0.0;
    int n_perturbations = 0;
    std::string diagnostics;
};

/// K + xi with xi uniform in the Frobenius ball of radius r of the controller
/// tangent space; resampled with the radius halved until the closed loop is
/// stable again (<= 20 attempts).
inline Controller perturb_in_ball(const Plant& pl, const Controller& k, double r,
                                  std::mt19937_64& rng, const Tolerances& tol = {}) {
    if (r <= 0.0) throw InvalidArgument("perturb_in_ball: radius must be positive");
    const Eigen::Index q = k.order(), m = k.m(), p = k.p();
    const double dim = static_cast<double>(q * q + q * p + m * q);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    double radius = r;
    for (int attempt = 0; attempt < 20; ++attempt, radius *= 0.5) {
        ControllerDirection xi = ControllerDirection::zero(q, m, p);
        for (Eigen::Index i = 0; i < xi.dC.size(); ++i) xi.dC(i) = gauss(rng);
        for (Eigen::Index i = 0; i < xi.dB.size(); ++i) xi.dB(i) = gauss(rng);
        for (Eigen::Index i = 0; i < xi.dA.size(); ++i) xi.dA(i) = gauss(rng);
        const double nrm = xi.norm();
        if (nrm == 0.0) continue;
        const double rho = radius * std::pow(unif(rng), 1.0 / dim);
        const Controller cand = apply_step(k, xi, rho / nrm);
        try {
            assemble_closed_loop(pl, cand, tol);
            return cand;
        } catch (const Error&) {
        }
    }
    throw PerturbationFailed("perturb_in_ball: no stabilizing draw in 20 attempts");
}

/// Algorithm 1 lines 6-8: reduce K_t to its minimal part (truncation tolerance
/// iota/10), then reassemble with Lambda = lambda I, lambda drawn uniformly in
/// the configured range. With avoid_zero_set, draws whose -lambda lands within
/// the cluster tolerance of the certificate zero set are redrawn (<= 10 times).
/// On UnstableControllerState the input is returned unchanged.
inline std::pair<Controller, Eigen::Index> lambda_step(const Plant& pl, const Controller& k,
                                                       const PgdConfig& cfg,
                                                       std::mt19937_64& rng,
                                                       const Tolerances& tol = {}) {
    std::pair<Controller, Eigen::Index> reduced;
    try {
        reduced = minimal_realization(k, cfg.iota / 10.0, tol);
    } catch (const UnstableControllerState&) {
        return {k, k.order()};
    }
    auto& [k_hat, q_hat] = reduced;
    const Eigen::Index e = k.order() - q_hat;
    if (e == 0) return {std::move(k_hat), q_hat};

    std::vector<Complex> zeros;
    if (cfg.avoid_zero_set) {
        try {
            zeros = zero_set(rationalize_G(build_augmented(pl, k_hat, tol), tol), tol);
        } catch (const Error&) {
            // no certificate available (e.g. G identically zero): no constraint
        }
    }

    std::uniform_real_distribution<double> unif(cfg.lam_lo, cfg.lam_hi);
    double lam = 0.0;
    for (int attempt = 0; attempt < 10; ++attempt) {
        lam = unif(rng);
        bool clash = false;
        for (const Complex& z : zeros)
            if (std::abs(Complex(-lam, 0.0) - z) <= tol.cluster) {
                clash = true;
                break;
            }
        if (!clash) break;
    }

    Controller k_new =
        augment_controller(k_hat, lam * Matrix::Identity(e, e), tol);
    return {std::move(k_new), q_hat};
}

/// Algorithm 1 (perturbed policy gradient) with the three ablation variants.
/// Records the pre-perturbation state of every iterate; the gradient used by
/// the descent step is recomputed after a perturbation.
inline PgdTrace run(const Plant& pl, const Controller& k0, const PgdConfig& cfg,
                    const Tolerances& tol = {}) {
    validate(cfg);
    check_dimensions(pl, k0);
    if (k0.order() != pl.n())
        throw InvalidArgument("pgd run: K0 must have full order n");

    PgdTrace trace;
    trace.j_star = optimal_controller(pl, tol).J;
    trace.records.reserve(static_cast<std::size_t>(cfg.T) + 1);

    std::mt19937_64 rng(cfg.seed);
    Controller k = k0;
    int t_perturb = -cfg.tau - 1;
    Eigen::Index q_t = k.order();

    for (int t = 0; t <= cfg.T; ++t) {
        const ClosedLoopData cl = assemble_closed_loop(pl, k, tol);
        const double j = cost(cl);
        ControllerDirection g = gradient(pl, k, cl);
        const double gn = g.norm();

        PgdRecord rec{t, j, gn, (j - trace.j_star) / trace.j_star, PgdEvent::None, q_t};

        if (j > 1e12) {
            trace.records.push_back(rec);
            trace.status = PgdStatus::Diverged;
            trace.diagnostics = "cost exceeded the divergence bound";
            trace.k_final = std::move(k);
            return trace;
        }

        double hankel_min = 0.0;
        bool have_hankel = false;
        try {
            const Vector sigma = hankel_singular_values(k, tol);
            hankel_min = sigma.size() ? sigma.minCoeff() : 0.0;
            have_hankel = true;
        } catch (const UnstableControllerState&) {
            // controller state matrix unstable: minimality is undefined here,
            // so neither the output condition nor a perturbation can fire
        }

        if (gn <= cfg.g_th && have_hankel && hankel_min >= cfg.iota) {
            rec.event = PgdEvent::Output;
            trace.records.push_back(rec);
            trace.status = PgdStatus::ConvergedMinimal;
            trace.k_final = std::move(k);
            return trace;
        }
        if (t == cfg.T) {
            trace.records.push_back(rec);
            trace.status = PgdStatus::BudgetExhausted;
            trace.k_final = std::move(k);
            return trace;
        }

        const bool trigger = cfg.variant != PgdVariant::VanillaGD && gn <= cfg.g_th &&
                             have_hankel && hankel_min <= cfg.iota &&
                             t - t_perturb > cfg.tau;
        if (trigger) {
            if (cfg.variant != PgdVariant::GradPerturbOnly) {
                // A_K is stable here (the trigger saw Hankel values), so the
                // UnstableControllerState fallback inside lambda_step cannot fire.
                auto [k_new, q_hat] = lambda_step(pl, k, cfg, rng, tol);
                rec.event = PgdEvent::LambdaPerturb;
                rec.q_t = q_t = q_hat;
                k = std::move(k_new);
            }
            if (cfg.variant != PgdVariant::LambdaPerturbOnly) {
                try {
                    k = perturb_in_ball(pl, k, cfg.r, rng, tol);
                    if (rec.event == PgdEvent::None) rec.event = PgdEvent::GradPerturb;
                } catch (const PerturbationFailed& ex) {
                    trace.records.push_back(rec);
                    trace.status = PgdStatus::Diverged;
                    trace.diagnostics += ex.what();
                    trace.k_final = std::move(k);
                    return trace;
                }
            }
            t_perturb = t;
            ++trace.n_perturbations;
            g = gradient(pl, k, tol);  // line 12 uses the perturbed iterate
        }

        trace.records.push_back(rec);

        // line 12: fixed step, halved only while the candidate destabilizes
        double alpha = cfg.eta;
        bool stepped = false;
        for (int h = 0; h <= 30 && !stepped; ++h, alpha *= 0.5) {
            Controller cand = apply_step(k, g, -alpha);
            try {
                assemble_closed_loop(pl, cand, tol);
                k = std::move(cand);
                stepped = true;
            } catch (const Error&) {
            }
        }
        if (!stepped) {
            trace.status = PgdStatus::Diverged;
            trace.diagnostics += "gradient step failed 30 backtracks at t=" + std::to_string(t);
            trace.k_final = std::move(k);
            return trace;
        }
    }
    trace.k_final = std::move(k);
    return trace;
}

} // namespace lqgopt
