#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "helpers.hpp"
#include "lqgopt/builtin.hpp"
#include "lqgopt/io.hpp"

using namespace lqgopt;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("lqgopt_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(LQGOPT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("cli solve: reproduces the printed optimal controllers") {
    const auto dir = fresh_dir("solve_doyle");
    REQUIRE(run_cli("solve --example doyle --out " + dir.string()) == 0);

    const Controller k = controller_from_json(load_json((dir / "optimal_controller.json").string()));
    Matrix a_ref(2, 2), b_ref(2, 1), c_ref(1, 2);
    a_ref << -4, 1, -10, -4;
    b_ref << 5, 5;
    c_ref << -5, -5;
    CHECK(test::max_abs_diff(k.A, a_ref) <= 1e-6);
    CHECK(test::max_abs_diff(k.B, b_ref) <= 1e-6);
    CHECK(test::max_abs_diff(k.C, c_ref) <= 1e-6);

    const Json cost = load_json((dir / "cost.json").string());
    CHECK_THAT(cost["J_star"].get<double>(), WithinRel(750.0, 1e-9));

    const Json ric = load_json((dir / "riccati.json").string());
    CHECK(ric["residuals"]["filter"].get<double>() <= 1e-6);
    CHECK(ric["residuals"]["control"].get<double>() <= 1e-6);

    const auto dir2 = fresh_dir("solve_nonminimal");
    REQUIRE(run_cli("solve --example nonminimal --out " + dir2.string()) == 0);
    const Json cost2 = load_json((dir2 / "cost.json").string());
    CHECK_THAT(cost2["J_star"].get<double>(), WithinRel(38.0, 1e-9));
}

TEST_CASE("cli solve: parse failures exit 1") {
    const auto dir = fresh_dir("solve_bad");
    const fs::path bad = dir / "bad.json";
    write_text(bad.string(), "{ not json");
    CHECK(run_cli("solve --plant " + bad.string() + " --out " + dir.string()) == 1);
    CHECK(run_cli("solve --example not_a_plant --out " + dir.string()) == 1);
    CHECK(run_cli("solve --out " + dir.string()) == 1);                       // no source
    CHECK(run_cli("solve --example doyle --plant " + bad.string()) == 1);     // two sources
    CHECK(run_cli("dance --example doyle") == 1);                             // bad subcommand
}

TEST_CASE("cli analyze: verdicts and artifacts per example") {
    const auto d1 = fresh_dir("analyze_doyle");
    REQUIRE(run_cli("analyze --example doyle --controller riccati --out " + d1.string()) == 0);
    CHECK(load_json((d1 / "certificate.json").string())["verdict"] == "MinimalGlobalOptimum");
    CHECK(load_json((d1 / "hessian.json").string())["eigs"].size() == 8);
    CHECK(fs::exists(d1 / "G_rational.json"));

    const auto d2 = fresh_dir("analyze_nonminimal");
    REQUIRE(run_cli("analyze --example nonminimal --controller augmented_k1 --out " +
                    d2.string()) == 0);
    CHECK(load_json((d2 / "certificate.json").string())["verdict"] == "GIdenticallyZero");
}

TEST_CASE("cli analyze: certifies the lambda-half saddle after redraw") {
    const auto dir = fresh_dir("analyze_half");
    REQUIRE(run_cli("analyze --example openloop --controller saddle_lambda_half --seed 5 --out " +
                    dir.string()) == 0);
    const Json cert = load_json((dir / "certificate.json").string());
    CHECK(cert["verdict"] == "StrictSaddleCertified");
    REQUIRE(cert["zero_set"].size() == 1);
    CHECK_THAT(cert["zero_set"][0][0].get<double>(), WithinAbs(0.5, 1e-6));

    // normalized rational: num 5(2s-1)/216 over monic den (s+1)(s+0.5)
    const Json rat = load_json((dir / "G_rational.json").string());
    REQUIRE(rat["G_entries"].size() == 1);
    const Json& num = rat["G_entries"][0]["num"];
    const Json& den = rat["G_entries"][0]["den"];
    REQUIRE(num.size() == 2);
    REQUIRE(den.size() == 3);
    CHECK_THAT(num[0].get<double>(), WithinAbs(10.0 / 216.0, 1e-6));
    CHECK_THAT(num[1].get<double>(), WithinAbs(-5.0 / 216.0, 1e-6));
    CHECK_THAT(den[0].get<double>(), WithinAbs(1.0, 1e-9));
    CHECK_THAT(den[1].get<double>(), WithinAbs(1.5, 1e-6));
    CHECK_THAT(den[2].get<double>(), WithinAbs(0.5, 1e-6));
}

TEST_CASE("cli analyze: non-stationary controller exits 3") {
    const auto dir = fresh_dir("analyze_notstat");
    CHECK(run_cli("analyze --example openloop --controller fig1_init --out " + dir.string()) == 3);
    CHECK(!fs::exists(dir / "certificate.json"));
}

TEST_CASE("cli pgd: near-optimal default start converges") {
    const auto dir = fresh_dir("pgd_doyle");
    REQUIRE(run_cli("pgd --example doyle --variant vanilla --out " + dir.string()) == 0);
    const Json summary = load_json((dir / "summary.json").string());
    REQUIRE(summary["runs"].size() == 1);
    CHECK(summary["runs"][0]["status"] == "ConvergedMinimal");
    CHECK(fs::exists(dir / "trace_vanilla.csv"));
    const Json side = load_json((dir / "trace_vanilla.json").string());
    CHECK(side["config"]["variant"] == "vanilla");
}

TEST_CASE("cli pgd: non-stabilizing K0 exits 4 before writing traces") {
    const auto dir = fresh_dir("pgd_unstable");
    write_json((dir / "k0.json").string(),
               Json{{"q", 2},
                    {"A_K", Json::parse("[[1,0],[0,1]]")},
                    {"B_K", Json::parse("[[0],[0]]")},
                    {"C_K", Json::parse("[[0,0]]")}});
    CHECK(run_cli("pgd --example openloop --controller " + (dir / "k0.json").string() +
                  " --out " + dir.string()) == 4);
    CHECK(!fs::exists(dir / "trace_full.csv"));
    CHECK(!fs::exists(dir / "summary.json"));
}

TEST_CASE("cli pgd: seed determines traces byte-for-byte") {
    const auto dir = fresh_dir("pgd_seed");
    write_json((dir / "cfg.json").string(),
               Json{{"T", 400}, {"eta", 0.1}, {"g_th", 1e-4}, {"tau", 1000}, {"r", 0.01}});
    const std::string base = "pgd --example openloop --controller fig1_init --config " +
                             (dir / "cfg.json").string() + " --variant full";
    REQUIRE(run_cli(base + " --seed 7 --out " + (dir / "a").string()) == 0);
    REQUIRE(run_cli(base + " --seed 7 --out " + (dir / "b").string()) == 0);
    REQUIRE(run_cli(base + " --seed 8 --out " + (dir / "c").string()) == 0);
    const std::string a = slurp(dir / "a" / "trace_full.csv");
    CHECK(a == slurp(dir / "b" / "trace_full.csv"));
    CHECK(a != slurp(dir / "c" / "trace_full.csv"));

    std::istringstream head(a);
    std::string first;
    REQUIRE(std::getline(head, first));
    CHECK(first == "iter,cost,grad_norm,subopt,event,q_t");
}

TEST_CASE("cli pgd: config file type errors exit 1") {
    const auto dir = fresh_dir("pgd_cfg");
    write_text((dir / "cfg.json").string(), R"({"eta": "fast"})");
    CHECK(run_cli("pgd --example doyle --config " + (dir / "cfg.json").string() + " --out " +
                  dir.string()) == 1);
    write_text((dir / "cfg.json").string(), R"({"eta": -3.0})");
    CHECK(run_cli("pgd --example doyle --config " + (dir / "cfg.json").string() + " --out " +
                  dir.string()) == 4);
}

TEST_CASE("cli hessian: writes ordering, matrix, and eigenvalues") {
    const auto dir = fresh_dir("hessian");
    REQUIRE(run_cli("hessian --example doyle --controller riccati --out " + dir.string()) == 0);
    const Json h = load_json((dir / "hessian.json").string());
    CHECK(h["H"].size() == 8);
    CHECK(h["eigs"].size() == 8);
    CHECK(h.contains("ordering"));
}

TEST_CASE("cli solve: round trip through a user-supplied plant file") {
    const auto dir = fresh_dir("roundtrip");
    write_json((dir / "plant.json").string(), plant_to_json(builtin::plant("openloop")));
    REQUIRE(run_cli("solve --plant " + (dir / "plant.json").string() + " --out " +
                    dir.string()) == 0);
    const Json cost = load_json((dir / "cost.json").string());
    CHECK_THAT(cost["J_star"].get<double>(), WithinRel(1.666254675410388, 1e-9));
}
