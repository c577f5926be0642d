#pragma once

// JSON documents: error models, tolerances, partitions and validation reports.
// Doubles are written in shortest round-trip form, so a partition that is
// written and read back reproduces its matrices bit for bit.

#include <fstream>
#include <string>

#include "certias/certifier.hpp"
#include "certias/errors.hpp"
#include "certias/json_util.hpp"
#include "certias/lpp.hpp"
#include "certias/solver.hpp"
#include "certias/validation.hpp"

namespace certias {

using json_util::json;

inline json polyhedron_to_json(const Polyhedron& P)
{
    return {{"A", json_util::from_matrix(P.A())}, {"b", json_util::from_vector(P.b())}};
}

inline Polyhedron polyhedron_from_json(const json& j, int dim, const std::string& what)
{
    const Eigen::MatrixXd A = json_util::to_matrix(json_util::require(j, "A"), what + ".A", dim);
    const Eigen::VectorXd b = json_util::to_vector(json_util::require(j, "b"), what + ".b");
    if (A.rows() != b.size()) throw InputError(what + ": row count of A differs from length of b");
    if (dim >= 0 && A.cols() != dim) throw InputError(what + ": wrong dimension");
    return {A, b};
}

inline json error_model_to_json(const ErrorModel& e)
{
    json j;
    j["kind"] = to_string(e.kind);
    switch (e.kind) {
    case ErrorModel::Kind::none: break;
    case ErrorModel::Kind::hypercube:
        j["eps_bar"] = e.eps_bar;
        if (e.has_offset()) {
            j["center"] = json_util::from_vector(e.center);
            j["radii"] = json_util::from_vector(e.radii);
        }
        break;
    case ErrorModel::Kind::polyhedral: j["set"] = polyhedron_to_json(*e.set); break;
    case ErrorModel::Kind::relative: j["rel_bound"] = e.rel_bound; break;
    }
    if (!e.schedule.empty()) {
        json s = json::array();
        for (const auto& x : e.schedule) s.push_back(error_model_to_json(x));
        j["schedule"] = s;
    }
    return j;
}

inline ErrorModel error_model_from_json(const json& j)
{
    if (!j.is_object()) throw InputError("error model must be a JSON object");
    const std::string kind = j.value("kind", std::string("none"));
    ErrorModel e;
    if (kind == "none") {
        e = ErrorModel::none();
    } else if (kind == "hypercube") {
        if (j.contains("center") || j.contains("radii")) {
            e = ErrorModel::box(json_util::to_vector(json_util::require(j, "center"), "center"),
                                json_util::to_vector(json_util::require(j, "radii"), "radii"));
        } else {
            const json& eb = json_util::require(j, "eps_bar");
            if (!eb.is_number()) throw InputError("eps_bar must be a number");
            e.kind = ErrorModel::Kind::hypercube;
            e.eps_bar = eb.get<double>();
        }
    } else if (kind == "polyhedral") {
        e = ErrorModel::polyhedral(polyhedron_from_json(json_util::require(j, "set"), -1, "set"));
    } else if (kind == "relative") {
        const json& rb = json_util::require(j, "rel_bound");
        if (!rb.is_number()) throw InputError("rel_bound must be a number");
        e = ErrorModel::relative(rb.get<double>());
    } else {
        throw InputError("unknown error model kind \"" + kind + "\"");
    }
    if (j.contains("schedule")) {
        if (!j["schedule"].is_array()) throw InputError("schedule must be an array");
        for (const auto& s : j["schedule"]) e.schedule.push_back(error_model_from_json(s));
    }
    return e;
}

inline json tolerances_to_json(const Tolerances& t)
{
    return {{"eps_primal", t.eps_primal},
            {"eps_dual", t.eps_dual},
            {"iter_limit", t.iter_limit},
            {"perturb_multipliers", t.perturb_multipliers}};
}

inline Tolerances tolerances_from_json(const json& j)
{
    Tolerances t;
    t.eps_primal = json_util::require(j, "eps_primal").get<double>();
    t.eps_dual = json_util::require(j, "eps_dual").get<double>();
    t.iter_limit = json_util::require(j, "iter_limit").get<int>();
    t.perturb_multipliers = j.value("perturb_multipliers", false);
    t.validate();
    return t;
}

inline json sequence_to_json(const StateSequence& seq)
{
    json out = json::array();
    for (const auto& s : seq) out.push_back({{"working_set", s.working_set}, {"mode", to_string(s.mode)}});
    return out;
}

inline StateSequence sequence_from_json(const json& j)
{
    if (!j.is_array() || j.empty()) throw InputError("sequence must be a nonempty array");
    StateSequence seq;
    for (const auto& s : j) {
        SolverState st;
        st.working_set = json_util::require(s, "working_set").get<std::vector<int>>();
        st.mode = mode_from_string(json_util::require(s, "mode").get<std::string>());
        seq.push_back(std::move(st));
    }
    return seq;
}

/// Partition document. `extra_settings` is merged into the settings block.
inline json partition_to_json(const CertificationResult& r, const json& extra_settings = json::object())
{
    json settings = extra_settings.is_object() ? extra_settings : json::object();
    settings["problem_digest"] = r.problem_digest;
    settings["tolerances"] = tolerances_to_json(r.tol);
    settings["error_model"] = error_model_to_json(r.model);

    json regions = json::array();
    for (const auto& reg : r.regions) {
        json j = polyhedron_to_json(reg.region);
        j["sequence"] = sequence_to_json(reg.sequence);
        j["status"] = to_string(reg.status);
        j["iterations"] = reg.iterations;
        regions.push_back(std::move(j));
    }
    json stats = {{"regions", r.regions.size()},
                  {"explored", r.stats.explored},
                  {"pruned", r.stats.pruned},
                  {"lp_calls", r.stats.lp_calls},
                  {"worst_iterations", r.worst_iterations() < 0 ? json("INF") : json(r.worst_iterations())}};
    return {{"settings", settings}, {"regions", regions}, {"stats", stats}};
}

inline CertificationResult partition_from_json(const json& doc)
{
    if (!doc.is_object()) throw InputError("partition document must be a JSON object");
    const json& settings = json_util::require(doc, "settings");
    CertificationResult r;
    r.problem_digest = json_util::require(settings, "problem_digest").get<std::string>();
    r.tol = tolerances_from_json(json_util::require(settings, "tolerances"));
    r.model = error_model_from_json(json_util::require(settings, "error_model"));
    for (const auto& j : json_util::require(doc, "regions")) {
        CertifiedRegion reg;
        reg.region = polyhedron_from_json(j, -1, "region");
        reg.sequence = sequence_from_json(json_util::require(j, "sequence"));
        reg.status = region_status_from_string(json_util::require(j, "status").get<std::string>());
        reg.iterations = json_util::require(j, "iterations").get<int>();
        r.regions.push_back(std::move(reg));
    }
    if (doc.contains("stats")) {
        const json& s = doc["stats"];
        r.stats.explored = s.value("explored", std::uint64_t{0});
        r.stats.pruned = s.value("pruned", std::uint64_t{0});
        r.stats.lp_calls = s.value("lp_calls", std::uint64_t{0});
    }
    return r;
}

inline json validation_to_json(const ValidationReport& rep, const json& settings = json::object())
{
    json mism = json::array();
    for (const auto& m : rep.mismatches) {
        mism.push_back({{"theta", json_util::from_vector(m.theta)}, {"realized", m.realized}, {"candidates", m.candidates}});
    }
    json gaps = json::array();
    for (const auto& g : rep.coverage_gaps) gaps.push_back(json_util::from_vector(g));
    json fails = json::array();
    for (const auto& f : rep.realization_failures) {
        fails.push_back({{"region", f.region}, {"theta", json_util::from_vector(f.theta)}});
    }
    return {{"settings", settings},
            {"samples_total", rep.samples_total},
            {"samples_checked", rep.samples_checked},
            {"samples_skipped_boundary", rep.samples_skipped_boundary},
            {"samples_outside", rep.samples_outside},
            {"mismatches", mism},
            {"coverage_gaps", gaps},
            {"realization_failures", fails},
            {"passed", rep.passed()}};
}

inline json read_json_file(const std::string& path, const std::string& what)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + what + " file: " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InputError(what + " file is not valid JSON: " + std::string(e.what()));
    }
}

inline void write_text_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write file: " + path);
    out << text;
    if (!out) throw InputError("failed writing file: " + path);
}

/// Canonical serialization used for every document (stable key order).
inline std::string dump_document(const json& j) { return j.dump(2) + "\n"; }

}  // namespace certias
