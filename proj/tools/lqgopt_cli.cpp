// lqgopt command-line front end: solve / analyze / pgd / hessian.
// Exit codes: 0 success, 1 parse, 2 solver, 3 precondition, 4 infeasible input.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lqgopt/builtin.hpp"
#include "lqgopt/io.hpp"

namespace {

using namespace lqgopt;

// Relative suboptimality threshold used for the escape-iteration summaries.
constexpr double kEscapeThreshold = 1e-4;

// Configuration for the plateau-escape reproduction. The default PgdConfig
// step size cannot clear the saddle within the iteration budget on the
// plateau example, so the reproduction run pins the measured working values.
PgdConfig fig1_config(PgdVariant variant, std::uint64_t seed) {
    PgdConfig cfg;
    cfg.g_th = 1e-4;
    cfg.iota = 1e-4;
    cfg.T = 20000;
    cfg.tau = 1000;
    cfg.eta = 0.1;
    cfg.r = 0.01;
    cfg.variant = variant;
    cfg.seed = seed;
    return cfg;
}

struct Sources {
    std::string example;
    std::string plant_path;
    std::string controller;
    std::string out_dir = ".";
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

Plant resolve_plant(const Sources& src) {
    if (src.example.empty() == src.plant_path.empty())
        throw ParseError("exactly one of --example or --plant is required");
    Plant pl = src.example.empty() ? plant_from_json(load_json(src.plant_path))
                                   : builtin::plant(src.example);
    validate_plant(pl);
    return pl;
}

Controller resolve_controller(const std::string& spec, const Plant& pl) {
    if (std::filesystem::exists(spec)) return controller_from_json(load_json(spec));
    if (spec.find('/') != std::string::npos || spec.ends_with(".json"))
        throw ParseError("cannot open " + spec);
    return builtin::controller(spec, pl);
}

std::string out_path(const Sources& src, const std::string& name) {
    std::filesystem::create_directories(src.out_dir);
    return (std::filesystem::path(src.out_dir) / name).string();
}

void cmd_solve(const Sources& src) {
    const Plant pl = resolve_plant(src);
    const OptimalController opt = optimal_controller(pl);
    write_json(out_path(src, "optimal_controller.json"), controller_to_json(opt.K));
    write_json(out_path(src, "riccati.json"), riccati_to_json(opt.riccati));
    write_json(out_path(src, "cost.json"), Json{{"J_star", opt.J}});
    std::printf("J* = %s (optimal_controller.json, riccati.json, cost.json in %s)\n",
                format_double(opt.J).c_str(), src.out_dir.c_str());
}

void cmd_analyze(const Sources& src) {
    const Plant pl = resolve_plant(src);
    const std::string spec = src.controller.empty() ? "riccati" : src.controller;
    const Controller k = resolve_controller(spec, pl);
    std::mt19937_64 rng(src.seed);
    const SaddleCertificate cert = classify_stationary(pl, k, rng);
    write_json(out_path(src, "certificate.json"), certificate_to_json(cert));
    write_json(out_path(src, "G_rational.json"), rational_to_json(cert.rational));
    write_json(out_path(src, "hessian.json"), hessian_to_json(hessian_matrix(pl, k)));
    std::printf("verdict = %s (q_hat = %ld)\n", to_string(cert.verdict),
                static_cast<long>(cert.q_hat));
}

void cmd_hessian(const Sources& src) {
    const Plant pl = resolve_plant(src);
    const std::string spec = src.controller.empty() ? "riccati" : src.controller;
    const Controller k = resolve_controller(spec, pl);
    write_json(out_path(src, "hessian.json"), hessian_to_json(hessian_matrix(pl, k)));
    std::printf("hessian.json written to %s\n", src.out_dir.c_str());
}

Json run_one(const Plant& pl, const Controller& k0, const PgdConfig& cfg,
             const Sources& src) {
    const PgdTrace trace = run(pl, k0, cfg);
    const std::string stem = std::string("trace_") + to_string(cfg.variant);
    write_text(out_path(src, stem + ".csv"), trace_to_csv(trace));
    write_json(out_path(src, stem + ".json"), trace_sidecar(trace, cfg));

    Json first = nullptr;
    double min_subopt = std::numeric_limits<double>::infinity();
    for (const PgdRecord& r : trace.records) {
        min_subopt = std::min(min_subopt, r.subopt);
        if (first.is_null() && r.subopt <= kEscapeThreshold) first = r.iter;
    }
    std::printf("%-12s status=%-16s iters=%-6d reach(%.0e)=%s\n", to_string(cfg.variant),
                to_string(trace.status), trace.records.back().iter, kEscapeThreshold,
                first.is_null() ? "censored" : std::to_string(first.get<int>()).c_str());
    return Json{{"variant", to_string(cfg.variant)},
                {"status", to_string(trace.status)},
                {"iterations", trace.records.back().iter},
                {"n_perturbations", trace.n_perturbations},
                {"iterations_to_threshold", first},
                {"min_subopt", min_subopt}};
}

void cmd_pgd(const Sources& src, const std::string& variant_str, bool fig1) {
    const Plant pl = resolve_plant(src);

    Controller k0{Matrix(), Matrix(), Matrix()};
    if (fig1) {
        k0 = builtin::controller("fig1_init", pl);
    } else if (!src.controller.empty()) {
        k0 = resolve_controller(src.controller, pl);
    } else {
        // default start: a tiny stabilizing ball around the Riccati optimum
        std::mt19937_64 rng(src.seed);
        k0 = perturb_in_ball(pl, optimal_controller(pl).K, 1e-12, rng);
    }
    check_dimensions(pl, k0);
    assemble_closed_loop(pl, k0);  // non-stabilizing K0 fails before iterating

    PgdConfig base;
    if (!src.config_path.empty()) base = config_from_json(load_json(src.config_path));
    if (src.seed_given) base.seed = src.seed;
    if (!variant_str.empty()) base.variant = parse_variant(variant_str);

    std::vector<PgdConfig> runs;
    if (fig1) {
        for (PgdVariant v : {PgdVariant::Full, PgdVariant::VanillaGD,
                             PgdVariant::GradPerturbOnly, PgdVariant::LambdaPerturbOnly})
            runs.push_back(fig1_config(v, base.seed));
    } else {
        runs.push_back(base);
    }

    Json summary = Json::array();
    std::vector<std::string> failures;
    for (const PgdConfig& cfg : runs) {
        try {
            summary.push_back(run_one(pl, k0, cfg, src));
        } catch (const Error& ex) {
            failures.emplace_back(ex.what());
            summary.push_back(Json{{"variant", to_string(cfg.variant)}, {"error", ex.what()}});
        }
    }
    write_json(out_path(src, "summary.json"),
               Json{{"threshold", kEscapeThreshold}, {"runs", summary}});
    if (failures.size() == runs.size())
        throw LyapSolveFailure("all pgd runs failed: " + failures.front());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LQG policy optimization: Riccati solve, saddle certificates, perturbed PGD"};
    app.fallthrough();
    app.require_subcommand(1);

    Sources src;
    std::string variant_str;
    bool fig1 = false;
    app.add_option("--example", src.example, "builtin plant: doyle | nonminimal | openloop");
    app.add_option("--plant", src.plant_path, "path to a plant JSON file");
    app.add_option("--controller", src.controller,
                   "controller: JSON path, builtin id, or 'riccati'");
    app.add_option("--out", src.out_dir, "output directory")->capture_default_str();
    auto* seed_opt = app.add_option("--seed", src.seed, "RNG seed");
    app.add_option("--config", src.config_path, "path to a PgdConfig JSON file");

    auto* solve = app.add_subcommand("solve", "compute the optimal controller from the AREs");
    auto* analyze = app.add_subcommand("analyze", "certify a stationary controller");
    auto* pgd_cmd = app.add_subcommand("pgd", "run (perturbed) policy gradient descent");
    auto* hess = app.add_subcommand("hessian", "export the controller-space Hessian");
    pgd_cmd->add_option("--variant", variant_str, "full | vanilla | grad_only | lambda_only");
    pgd_cmd->add_flag("--reproduce-fig1", fig1,
                      "run all four variants from the plateau initializer with a shared seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    src.seed_given = seed_opt->count() > 0;

    try {
        if (solve->parsed()) cmd_solve(src);
        else if (analyze->parsed()) cmd_analyze(src);
        else if (pgd_cmd->parsed()) cmd_pgd(src, variant_str, fig1);
        else if (hess->parsed()) cmd_hessian(src);
        return 0;
    } catch (const ParseError& ex) {
        std::fprintf(stderr, "parse error: %s\n", ex.what());
        return 1;
    } catch (const NotStationary& ex) {
        std::fprintf(stderr, "precondition failed: %s\n", ex.what());
        return 3;
    } catch (const InvalidArgument& ex) {
        std::fprintf(stderr, "infeasible input: %s\n", ex.what());
        return 4;
    } catch (const DimensionMismatch& ex) {
        std::fprintf(stderr, "infeasible input: %s\n", ex.what());
        return 4;
    } catch (const UnstableClosedLoop& ex) {
        std::fprintf(stderr, "infeasible input: %s\n", ex.what());
        return 4;
    } catch (const UnstableControllerState& ex) {
        std::fprintf(stderr, "infeasible input: %s\n", ex.what());
        return 4;
    } catch (const Error& ex) {
        std::fprintf(stderr, "solver error: %s\n", ex.what());
        return 2;
    }
}
