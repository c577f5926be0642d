#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <charconv>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "certias/certifier.hpp"
#include "certias/geometry.hpp"
#include "certias/json_util.hpp"
#include "certias/lpp.hpp"
#include "certias/mpqp.hpp"
#include "certias/solver.hpp"

namespace certias {

struct SlackPoint {
    int k = 0;  ///< k-th slack check (1-based)
    double worst_slack = 0.0;
};

struct SlackProfile {
    std::vector<SlackPoint> per_iteration;
    int lp_failures = 0;  ///< region/row LPs excluded from the maxima
};

/// max_{theta in region} max_j (-mu_j(theta)) for the slack map of `working_set`.
inline std::optional<double> worst_slack(const MpQP& prob, const Polyhedron& region, const std::vector<int>& working_set,
                                         MapCache& cache, int* failures = nullptr)
{
    const auto maps = cache.get(working_set);
    if (maps->singular) return std::nullopt;
    std::optional<double> worst;
    for (int j = 0; j < prob.n_constraints(); ++j) {
        const Eigen::VectorXd c = -maps->mu_map.F.row(j).transpose();
        const LpResult r = solve_lp(c, region, Sense::maximize);
        if (r.status != LpStatus::optimal) {
            if (failures) ++*failures;
            continue;
        }
        const double v = r.value - maps->mu_map.g(j);
        worst = worst ? std::max(*worst, v) : v;
    }
    return worst;
}

/// Worst-case primal slack after each slack check, over all parameters.
///
/// The region of a search node at slack check k is covered by the final
/// regions whose sequence shares that prefix, so the maximum over the node
/// equals the maximum over those regions; the profile is therefore
/// reproducible from the stored region set alone. Regions that stopped
/// earlier hold their last iterate and keep contributing its slack.
inline SlackProfile slack_profile(const MpQP& prob, const CertificationResult& result)
{
    MapCache cache(prob);
    SlackProfile out;
    int kmax = 0;
    for (const auto& r : result.regions) kmax = std::max(kmax, r.iterations);
    std::vector<double> worst(static_cast<std::size_t>(kmax), -std::numeric_limits<double>::infinity());
    for (const auto& r : result.regions) {
        std::optional<double> last;
        int k = 0;
        for (const auto& s : r.sequence) {
            if (s.mode != Mode::slack_check) continue;
            if (k == r.iterations) break;  // the check cut off by the iteration limit
            last = worst_slack(prob, r.region, s.working_set, cache, &out.lp_failures);
            if (last) worst[static_cast<std::size_t>(k)] = std::max(worst[static_cast<std::size_t>(k)], *last);
            ++k;
        }
        for (; last && k < kmax; ++k) {
            worst[static_cast<std::size_t>(k)] = std::max(worst[static_cast<std::size_t>(k)], *last);
        }
    }
    for (int k = 0; k < kmax; ++k) out.per_iteration.push_back({k + 1, worst[static_cast<std::size_t>(k)]});
    return out;
}

struct CdfPoint {
    int k = 0;
    double fraction = 0.0;
};

/// Fraction of regions (by count) that terminated optimally within k iterations.
inline std::vector<CdfPoint> iteration_cdf(const CertificationResult& result)
{
    if (result.regions.empty()) throw InputError("iteration_cdf: empty result");
    int kmax = 0;
    for (const auto& r : result.regions) kmax = std::max(kmax, r.iterations);
    std::vector<CdfPoint> out;
    const double total = static_cast<double>(result.regions.size());
    for (int k = 1; k <= kmax; ++k) {
        int done = 0;
        for (const auto& r : result.regions) done += r.status == RegionStatus::optimal && r.iterations <= k ? 1 : 0;
        out.push_back({k, done / total});
    }
    return out;
}

struct SweepRow {
    double eps_primal = 0.0;
    double eps_bar = 0.0;
    int worst_iterations = 0;  ///< -1: iteration limit reached (INF); -2: the cell failed (see note)
    int region_count = 0;
    std::string note;          ///< failure annotation; empty on success
};

struct SweepTable {
    std::vector<SweepRow> rows;
};

/// Certifies every (eps_primal, eps_bar) pair; eps_dual follows eps_primal.
inline SweepTable sweep(const MpQP& prob, std::vector<double> eps_primal_list, std::vector<double> eps_bar_list,
                        const Tolerances& tol_base, const CertifyOptions& opts = {})
{
    if (eps_primal_list.empty() || eps_bar_list.empty()) throw InputError("sweep: tolerance lists must be nonempty");
    for (double e : eps_primal_list) {
        if (!(e > 0.0)) throw InputError("sweep: primal tolerances must be positive");
    }
    for (double e : eps_bar_list) {
        if (!(e >= 0.0)) throw InputError("sweep: error bounds must be nonnegative");
    }
    std::sort(eps_primal_list.begin(), eps_primal_list.end());
    std::sort(eps_bar_list.begin(), eps_bar_list.end());
    SweepTable table;
    for (double ep : eps_primal_list) {
        for (double eb : eps_bar_list) {
            SweepRow row;
            row.eps_primal = ep;
            row.eps_bar = eb;
            Tolerances tol = tol_base;
            tol.eps_primal = ep;
            tol.eps_dual = ep;
            try {
                const CertificationResult res = certify(prob, tol, ErrorModel::hypercube(eb), opts);
                row.worst_iterations = res.worst_iterations();
                row.region_count = static_cast<int>(res.regions.size());
            } catch (const std::exception& e) {
                row.worst_iterations = -2;
                row.region_count = 0;
                row.note = e.what();
            }
            table.rows.push_back(row);
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// CSV and JSON renderings

inline std::string format_number(double v)
{
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string to_csv(const SlackProfile& p)
{
    std::ostringstream os;
    os << "k,worst_slack\n";
    for (const auto& e : p.per_iteration) os << e.k << ',' << format_number(e.worst_slack) << '\n';
    return os.str();
}

inline std::string to_csv(const std::vector<CdfPoint>& cdf)
{
    std::ostringstream os;
    os << "k,fraction\n";
    for (const auto& e : cdf) os << e.k << ',' << format_number(e.fraction) << '\n';
    return os.str();
}

inline std::string worst_to_string(int worst)
{
    if (worst == -1) return "INF";
    if (worst < -1) return "FAIL";
    return std::to_string(worst);
}

inline std::string to_csv(const SweepTable& t)
{
    std::ostringstream os;
    os << "eps_primal,eps_bar,worst_iterations,region_count\n";
    for (const auto& r : t.rows) {
        os << format_number(r.eps_primal) << ',' << format_number(r.eps_bar) << ',' << worst_to_string(r.worst_iterations)
           << ',' << r.region_count << '\n';
    }
    return os.str();
}

inline json_util::json to_json(const SlackProfile& p)
{
    json_util::json rows = json_util::json::array();
    for (const auto& e : p.per_iteration) rows.push_back({{"k", e.k}, {"worst_slack", e.worst_slack}});
    return {{"metric", "slack"}, {"rows", rows}, {"lp_failures", p.lp_failures}};
}

inline json_util::json to_json(const std::vector<CdfPoint>& cdf)
{
    json_util::json rows = json_util::json::array();
    for (const auto& e : cdf) rows.push_back({{"k", e.k}, {"fraction", e.fraction}});
    return {{"metric", "cdf"}, {"rows", rows}};
}

inline json_util::json to_json(const SweepTable& t)
{
    json_util::json rows = json_util::json::array();
    for (const auto& r : t.rows) {
        json_util::json row = {{"eps_primal", r.eps_primal},
                               {"eps_bar", r.eps_bar},
                               {"region_count", r.region_count}};
        if (r.worst_iterations < 0) row["worst_iterations"] = worst_to_string(r.worst_iterations);
        else row["worst_iterations"] = r.worst_iterations;
        if (!r.note.empty()) row["note"] = r.note;
        rows.push_back(std::move(row));
    }
    return {{"metric", "sweep"}, {"rows", rows}};
}

}  // namespace certias
