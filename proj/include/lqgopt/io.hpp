#pragma once
// JSON and CSV serialization shared by the CLI and tests. Matrices are
// row-major nested arrays of 64-bit floats; doubles are printed with the
// shortest representation that round-trips bit-exactly.

#include <charconv>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lqgopt/objective.hpp"
#include "lqgopt/pgd.hpp"
#include "lqgopt/riccati.hpp"
#include "lqgopt/saddle.hpp"
#include "lqgopt/types.hpp"

namespace lqgopt {

using Json = nlohmann::json;

inline std::string format_double(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

inline Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const Json& j, const std::string& name) {
    if (!j.is_array()) throw ParseError(name + ": expected an array of rows");
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0) return Matrix(0, 0);
    if (!j[0].is_array()) throw ParseError(name + ": expected nested arrays");
    const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const Json& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw ParseError(name + ": ragged rows");
        for (Eigen::Index c = 0; c < cols; ++c) {
            const Json& el = row[static_cast<std::size_t>(c)];
            if (!el.is_number()) throw ParseError(name + ": entries must be numbers");
            m(i, c) = el.get<double>();
        }
    }
    return m;
}

namespace detail {

inline const Json& field(const Json& j, const char* key) {
    if (!j.contains(key)) throw ParseError(std::string("missing key \"") + key + "\"");
    return j.at(key);
}

}  // namespace detail

inline Json plant_to_json(const Plant& pl) {
    return Json{{"A", matrix_to_json(pl.A)}, {"B", matrix_to_json(pl.B)},
                {"C", matrix_to_json(pl.C)}, {"W", matrix_to_json(pl.W)},
                {"V", matrix_to_json(pl.V)}, {"Q", matrix_to_json(pl.Q)},
                {"R", matrix_to_json(pl.R)}};
}

inline Plant plant_from_json(const Json& j) {
    if (!j.is_object()) throw ParseError("plant: expected a JSON object");
    Plant pl;
    pl.A = matrix_from_json(detail::field(j, "A"), "A");
    pl.B = matrix_from_json(detail::field(j, "B"), "B");
    pl.C = matrix_from_json(detail::field(j, "C"), "C");
    pl.W = matrix_from_json(detail::field(j, "W"), "W");
    pl.V = matrix_from_json(detail::field(j, "V"), "V");
    pl.Q = matrix_from_json(detail::field(j, "Q"), "Q");
    pl.R = matrix_from_json(detail::field(j, "R"), "R");
    return pl;
}

inline Json controller_to_json(const Controller& k) {
    return Json{{"q", k.order()},
                {"A_K", matrix_to_json(k.A)},
                {"B_K", matrix_to_json(k.B)},
                {"C_K", matrix_to_json(k.C)}};
}

inline Controller controller_from_json(const Json& j) {
    if (!j.is_object()) throw ParseError("controller: expected a JSON object");
    Controller k;
    k.A = matrix_from_json(detail::field(j, "A_K"), "A_K");
    k.B = matrix_from_json(detail::field(j, "B_K"), "B_K");
    k.C = matrix_from_json(detail::field(j, "C_K"), "C_K");
    const Json& q = detail::field(j, "q");
    if (!q.is_number_integer() || q.get<Eigen::Index>() != k.A.rows())
        throw ParseError("controller: q must equal the order of A_K");
    if (k.A.rows() != k.A.cols() || k.B.rows() != k.A.rows() || k.C.cols() != k.A.rows())
        throw ParseError("controller: inconsistent block dimensions");
    return k;
}

inline Json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const Json::exception& ex) {
        throw ParseError("parse error in " + path + ": " + ex.what());
    }
}

inline void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open " + path + " for writing");
    out << content;
    if (!out) throw ParseError("failed writing " + path);
}

inline void write_json(const std::string& path, const Json& j) {
    write_text(path, j.dump(2) + "\n");
}

// --- analysis artifacts --------------------------------------------------

inline Json vector_to_json(const Vector& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline Json rational_to_json(const RationalG& g) {
    Json entries = Json::array();
    const Json den = vector_to_json(g.den);
    for (std::size_t i = 0; i < g.num.size(); ++i)
        for (std::size_t j = 0; j < g.num[i].size(); ++j)
            entries.push_back(Json{{"row", i},
                                   {"col", j},
                                   {"num", vector_to_json(g.num[i][j])},
                                   {"den", den}});
    return Json{{"scale", g.scale}, {"G_entries", entries}};
}

inline Json certificate_to_json(const SaddleCertificate& cert) {
    Json zeros = Json::array();
    for (const Complex& z : cert.zeros) zeros.push_back(Json::array({z.real(), z.imag()}));
    Json j{{"verdict", to_string(cert.verdict)},
           {"q_hat", cert.q_hat},
           {"zero_set", std::move(zeros)},
           {"G_entries", rational_to_json(cert.rational)["G_entries"]},
           {"scale", cert.rational.scale},
           {"diagnostics", cert.diagnostics}};
    if (cert.escape) {
        j["escape"] = Json{{"lambda", cert.escape->lambda},
                           {"delta",
                            Json{{"dA", matrix_to_json(cert.escape->delta.dA)},
                                 {"dB", matrix_to_json(cert.escape->delta.dB)},
                                 {"dC", matrix_to_json(cert.escape->delta.dC)}}},
                           {"hess_value", cert.escape->hess_value}};
    } else {
        j["escape"] = nullptr;
    }
    return j;
}

inline Json hessian_to_json(const HessianData& h) {
    return Json{{"ordering", "C_K row-major, then B_K row-major, then A_K row-major"},
                {"H", matrix_to_json(h.H)},
                {"eigs", vector_to_json(h.eigs)}};
}

inline Json riccati_to_json(const RiccatiSolution& ric) {
    return Json{{"P", matrix_to_json(ric.P)},
                {"S", matrix_to_json(ric.S)},
                {"L", matrix_to_json(ric.L)},
                {"M", matrix_to_json(ric.M)},
                {"residuals", Json{{"filter", ric.res_p}, {"control", ric.res_s}}}};
}

// --- pgd config and traces ------------------------------------------------

inline Json config_to_json(const PgdConfig& cfg) {
    return Json{{"g_th", cfg.g_th},
                {"iota", cfg.iota},
                {"T", cfg.T},
                {"tau", cfg.tau},
                {"eta", cfg.eta},
                {"r", cfg.r},
                {"lam_lo", cfg.lam_lo},
                {"lam_hi", cfg.lam_hi},
                {"seed", cfg.seed},
                {"variant", to_string(cfg.variant)},
                {"avoid_zero_set", cfg.avoid_zero_set}};
}

inline PgdConfig config_from_json(const Json& j, PgdConfig cfg = {}) {
    if (!j.is_object()) throw ParseError("config: expected a JSON object");
    try {
        cfg.g_th = j.value("g_th", cfg.g_th);
        cfg.iota = j.value("iota", cfg.iota);
        cfg.T = j.value("T", cfg.T);
        cfg.tau = j.value("tau", cfg.tau);
        cfg.eta = j.value("eta", cfg.eta);
        cfg.r = j.value("r", cfg.r);
        cfg.lam_lo = j.value("lam_lo", cfg.lam_lo);
        cfg.lam_hi = j.value("lam_hi", cfg.lam_hi);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.avoid_zero_set = j.value("avoid_zero_set", cfg.avoid_zero_set);
        if (j.contains("variant")) cfg.variant = parse_variant(j.at("variant").get<std::string>());
    } catch (const Json::exception& ex) {
        throw ParseError(std::string("config: ") + ex.what());
    }
    validate(cfg);
    return cfg;
}

inline std::string trace_to_csv(const PgdTrace& trace) {
    std::string out = "iter,cost,grad_norm,subopt,event,q_t\n";
    for (const PgdRecord& r : trace.records) {
        out += std::to_string(r.iter);
        out += ',';
        out += format_double(r.cost);
        out += ',';
        out += format_double(r.grad_norm);
        out += ',';
        out += format_double(r.subopt);
        out += ',';
        out += to_string(r.event);
        out += ',';
        out += std::to_string(r.q_t);
        out += '\n';
    }
    return out;
}

/// Sidecar written next to each trace CSV: full config plus terminal status.
inline Json trace_sidecar(const PgdTrace& trace, const PgdConfig& cfg) {
    return Json{{"config", config_to_json(cfg)},
                {"status", to_string(trace.status)},
                {"j_star", trace.j_star},
                {"n_perturbations", trace.n_perturbations},
                {"iterations", trace.records.empty() ? 0 : trace.records.back().iter},
                {"k_final", controller_to_json(trace.k_final)},
                {"diagnostics", trace.diagnostics}};
}

}  // namespace lqgopt
