#pragma once

// Oracles that tie a certification result back to the executable solver:
// Monte-Carlo conformance, witness search for certified sequences, and a
// brute-force KKT enumerator for small problems.

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "certias/certifier.hpp"
#include "certias/errors.hpp"
#include "certias/geometry.hpp"
#include "certias/lpp.hpp"
#include "certias/mpqp.hpp"
#include "certias/solver.hpp"

namespace certias {

struct Mismatch {
    Eigen::VectorXd theta;
    std::string realized;         ///< encoded realized sequence
    std::vector<int> candidates;  ///< indices of the regions containing theta
};

struct RealizationFailure {
    int region = -1;
    Eigen::VectorXd theta;
};

struct ValidationReport {
    int samples_total = 0;
    int samples_skipped_boundary = 0;
    int samples_outside = 0;  ///< bounding-box draws outside the parameter set
    int samples_checked = 0;
    std::vector<Mismatch> mismatches;
    std::vector<Eigen::VectorXd> coverage_gaps;
    std::vector<RealizationFailure> realization_failures;

    bool passed() const { return mismatches.empty() && coverage_gaps.empty(); }
};

struct ValidationOptions {
    double margin = 1e-7;  ///< samples this close to a region boundary are skipped
    int workers = 1;
    /// Overrides the certified model for the injected errors (hypercube or none).
    std::optional<ErrorModel> injected;
};

namespace detail {

inline bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

/// Uniform draw from the hypercube model in force at iteration k.
inline Eigen::VectorXd draw_error(const ErrorModel& model, int k, int m, std::mt19937_64& rng)
{
    const ErrorModel& e = model.at(k);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
    if (e.kind == ErrorModel::Kind::none) return v;
    if (e.kind != ErrorModel::Kind::hypercube) throw InputError("error sampling supports none and hypercube models only");
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int j = 0; j < m; ++j) v(j) = e.box_center(j) + e.box_radius(j) * u(rng);
    return v;
}

template <class Fn>
void parallel_for(int n, int workers, Fn&& fn)
{
    workers = std::max(1, std::min(workers, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (int i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace detail

/// Samples parameters uniformly from the bounding box of the parameter set,
/// runs the solver with errors drawn per iteration from the model, and checks
/// that every realized sequence is certified by a region containing the sample.
inline ValidationReport validate_conformance(const MpQP& prob, const CertificationResult& result, int n_samples,
                                             std::uint64_t seed, const ValidationOptions& opts = {})
{
    if (n_samples < 0) throw InputError("sample count must be nonnegative");
    const ErrorModel& model = opts.injected ? *opts.injected : result.model;
    model.validate(prob.n_constraints());
    if (model.kind != ErrorModel::Kind::none && model.kind != ErrorModel::Kind::hypercube) {
        throw InputError("validation supports none and hypercube error models only");
    }
    const int m = prob.n_constraints();
    const int nt = prob.n_theta();
    const Tolerances& tol = result.tol;
    const auto [lo, hi] = bounding_box(prob.theta_set);

    std::vector<Polyhedron> regions;
    regions.reserve(result.regions.size());
    for (const auto& r : result.regions) regions.push_back(normalized(r.region));

    // Per-sample generators come from one master stream, so the outcome does
    // not depend on how samples are distributed over workers.
    std::mt19937_64 master(seed);
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n_samples));
    for (auto& s : seeds) s = master();

    enum class Outcome { checked, outside, boundary };
    struct Sample {
        Outcome outcome = Outcome::checked;
        Eigen::VectorXd theta;
        std::vector<int> candidates;
        std::string realized;
        bool matched = false;
    };
    std::vector<Sample> samples(static_cast<std::size_t>(n_samples));
    MapCache cache(prob);

    detail::parallel_for(n_samples, opts.workers, [&](int s) {
        Sample& out = samples[static_cast<std::size_t>(s)];
        std::mt19937_64 rng(seeds[static_cast<std::size_t>(s)]);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        Eigen::VectorXd theta(nt);
        for (int i = 0; i < nt; ++i) theta(i) = lo(i) + (hi(i) - lo(i)) * u(rng);
        out.theta = theta;
        if (!contains(prob.theta_set, theta)) {
            out.outcome = Outcome::outside;
            return;
        }
        for (std::size_t r = 0; r < regions.size(); ++r) {
            if (regions[r].rows() == 0) {
                out.candidates.push_back(static_cast<int>(r));
                continue;
            }
            const Eigen::VectorXd g = regions[r].A() * theta - regions[r].b();
            const double worst = g.maxCoeff();
            if (worst > opts.margin) continue;
            if (worst >= -opts.margin) {
                out.outcome = Outcome::boundary;
                return;
            }
            out.candidates.push_back(static_cast<int>(r));
        }
        std::vector<Eigen::VectorXd> slack_err, mult_err;
        for (int k = 0; k < tol.iter_limit; ++k) slack_err.push_back(detail::draw_error(model, k, m, rng));
        if (tol.perturb_multipliers) {
            for (int k = 0; k < tol.iter_limit; ++k) mult_err.push_back(detail::draw_error(model, k, m, rng));
        }
        ErrorInjector inj(
            [&slack_err](int k, int) { return slack_err[static_cast<std::size_t>(k)]; },
            tol.perturb_multipliers ? ErrorInjector::Schedule([&mult_err](int k, int) {
                return mult_err[static_cast<std::size_t>(std::max(k, 0))];
            })
                                    : ErrorInjector::Schedule());
        const RunResult run_result = run(prob, theta, inj, tol, &cache);
        for (int c : out.candidates) {
            if (result.regions[static_cast<std::size_t>(c)].sequence == run_result.sequence) {
                out.matched = true;
                break;
            }
        }
        if (!out.matched) out.realized = encode(run_result.sequence);
    });

    ValidationReport rep;
    rep.samples_total = n_samples;
    for (auto& s : samples) {
        switch (s.outcome) {
        case Outcome::outside: ++rep.samples_outside; break;
        case Outcome::boundary: ++rep.samples_skipped_boundary; break;
        case Outcome::checked:
            ++rep.samples_checked;
            if (s.candidates.empty()) {
                rep.coverage_gaps.push_back(s.theta);
            } else if (!s.matched) {
                rep.mismatches.push_back({s.theta, s.realized, s.candidates});
            }
            break;
        }
    }
    std::sort(rep.coverage_gaps.begin(), rep.coverage_gaps.end(), detail::lex_less);
    std::sort(rep.mismatches.begin(), rep.mismatches.end(),
              [](const Mismatch& a, const Mismatch& b) { return detail::lex_less(a.theta, b.theta); });
    return rep;
}

// ---------------------------------------------------------------------------

struct Realization {
    bool found = false;
    std::string method;                         ///< "zero", "vertex" or "random"
    std::vector<Eigen::VectorXd> slack_errors;  ///< one vector per iteration
    std::vector<Eigen::VectorXd> multiplier_errors;
};

namespace detail {

/// The box vertex most favourable to `target` at a step whose decision
/// variable is z over `coords`: the chosen coordinate is pushed down and all
/// others up (or everything up for terminate/keep). It dominates every other
/// error in the box for that decision.
inline Eigen::VectorXd favourable_vertex(const ErrorModel& e, const std::vector<int>& coords, const Decision& target,
                                         int m)
{
    Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
    for (int j : coords) {
        const bool down = (target.kind == Decision::Kind::add || target.kind == Decision::Kind::drop) &&
                          target.constraint == j;
        v(j) = e.box_center(j) + (down ? -1.0 : 1.0) * e.box_radius(j);
    }
    return v;
}

inline bool replay(const MpQP& prob, const Eigen::VectorXd& theta, const Tolerances& tol,
                   const std::vector<Eigen::VectorXd>& slack, const std::vector<Eigen::VectorXd>& mult,
                   const StateSequence& target)
{
    ErrorInjector inj(
        [&slack](int k, int mm) {
            return k < static_cast<int>(slack.size()) ? slack[static_cast<std::size_t>(k)] : Eigen::VectorXd::Zero(mm);
        },
        [&mult](int k, int mm) {
            return k >= 0 && k < static_cast<int>(mult.size()) ? mult[static_cast<std::size_t>(k)]
                                                               : Eigen::VectorXd::Zero(mm);
        });
    return run(prob, theta, inj, tol).sequence == target;
}

}  // namespace detail

/// Searches for an error sequence under which the solver reproduces the
/// region's certified sequence at theta. Best effort: tries the zero
/// sequence, then the favourable box vertex per step, then random draws.
inline Realization search_realization(const MpQP& prob, const CertifiedRegion& region, const Eigen::VectorXd& theta,
                                      const ErrorModel& model, const Tolerances& tol, int budget,
                                      std::uint64_t seed = 0)
{
    const int m = prob.n_constraints();
    model.validate(m);
    if (model.kind != ErrorModel::Kind::none && model.kind != ErrorModel::Kind::hypercube) {
        throw InputError("realization search supports none and hypercube error models only");
    }
    if (!contains(region.region, theta, 1e-9)) throw InputError("search_realization: theta is not in the region");
    const StateSequence& target = region.sequence;
    Realization out;
    const int iters = std::max(1, count_iterations(target));

    std::vector<Eigen::VectorXd> slack(static_cast<std::size_t>(iters), Eigen::VectorXd::Zero(m));
    std::vector<Eigen::VectorXd> mult(static_cast<std::size_t>(iters), Eigen::VectorXd::Zero(m));
    if (detail::replay(prob, theta, tol, slack, mult, target)) {
        out.found = true;
        out.method = "zero";
        out.slack_errors = slack;
        if (tol.perturb_multipliers) out.multiplier_errors = mult;
        return out;
    }
    if (model.kind == ErrorModel::Kind::none) return out;

    // Per-step favourable vertices along the certified sequence. The states
    // do not carry errors forward, so the per-step choice is globally optimal
    // for slack checks; dual checks sharing an iteration reuse one vector.
    {
        bool ok = true;
        std::vector<char> mult_set(static_cast<std::size_t>(iters), 0);
        int slack_checks = 0;
        for (std::size_t i = 0; i + 1 < target.size() && ok; ++i) {
            const SolverState& s = target[i];
            const SolverState& next = target[i + 1];
            if (next.mode == Mode::terminated_iter_limit || next.mode == Mode::degenerate) break;
            const auto maps = subproblem_maps(prob, s.working_set);
            const DecisionFamily fam = decision_family(maps, s, tol, m);
            std::optional<Decision> want;
            for (const auto& d : fam.decisions) {
                if (transition(s, d) == next) want = d;
            }
            if (!want) {
                ok = false;
                break;
            }
            if (s.mode == Mode::slack_check) {
                slack[static_cast<std::size_t>(slack_checks)] =
                    detail::favourable_vertex(model.at(slack_checks), fam.coords, *want, m);
                ++slack_checks;
            } else if (tol.perturb_multipliers) {
                const auto k = static_cast<std::size_t>(std::max(slack_checks - 1, 0));
                if (!mult_set[k]) {
                    mult[k] = detail::favourable_vertex(model.at(static_cast<int>(k)), fam.coords, *want, m);
                    mult_set[k] = 1;
                }
            }
        }
        if (ok && detail::replay(prob, theta, tol, slack, mult, target)) {
            out.found = true;
            out.method = "vertex";
            out.slack_errors = slack;
            if (tol.perturb_multipliers) out.multiplier_errors = mult;
            return out;
        }
    }

    std::mt19937_64 rng(seed);
    for (int t = 0; t < budget; ++t) {
        for (int k = 0; k < iters; ++k) {
            slack[static_cast<std::size_t>(k)] = detail::draw_error(model, k, m, rng);
            if (tol.perturb_multipliers) mult[static_cast<std::size_t>(k)] = detail::draw_error(model, k, m, rng);
        }
        if (detail::replay(prob, theta, tol, slack, mult, target)) {
            out.found = true;
            out.method = "random";
            out.slack_errors = slack;
            if (tol.perturb_multipliers) out.multiplier_errors = mult;
            return out;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

struct BruteForceSolution {
    Eigen::VectorXd x;
    std::vector<int> active_set;
};

/// Enumerates every active set of size <= n_x with full row rank and returns
/// the KKT point that is primal feasible and dual nonnegative.
inline BruteForceSolution brute_force_solve(const MpQP& prob, const Eigen::VectorXd& theta, double tol = 1e-9)
{
    const int n = prob.n_x();
    const int m = prob.n_constraints();
    if (m > 12) throw InputError("brute_force_solve: at most 12 constraints are supported");
    const Eigen::VectorXd f = prob.f(theta);
    const Eigen::VectorXd d = prob.d(theta);
    const auto& llt = prob.cholesky();

    std::vector<int> subset;
    std::optional<BruteForceSolution> found;
    auto try_subset = [&]() {
        const int w = static_cast<int>(subset.size());
        Eigen::VectorXd x, lambda(w);
        if (w == 0) {
            x = -llt.solve(f);
        } else {
            Eigen::MatrixXd CW(w, n);
            Eigen::VectorXd dW(w);
            for (int i = 0; i < w; ++i) {
                CW.row(i) = prob.C.row(subset[static_cast<std::size_t>(i)]);
                dW(i) = d(subset[static_cast<std::size_t>(i)]);
            }
            Eigen::FullPivLU<Eigen::MatrixXd> rank(CW);
            rank.setThreshold(1e-10);
            if (rank.rank() < w) return;
            // Full KKT system [H CW'; CW 0] [x; lambda] = [-f; dW].
            Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + w, n + w);
            K.topLeftCorner(n, n) = prob.H;
            K.topRightCorner(n, w) = CW.transpose();
            K.bottomLeftCorner(w, n) = CW;
            Eigen::VectorXd rhs(n + w);
            rhs.head(n) = -f;
            rhs.tail(w) = dW;
            const Eigen::VectorXd sol = K.fullPivLu().solve(rhs);
            x = sol.head(n);
            lambda = sol.tail(w);
            if (lambda.minCoeff() < -tol * std::max(1.0, lambda.cwiseAbs().maxCoeff())) return;
        }
        const Eigen::VectorXd viol = prob.C * x - d;
        for (int i = 0; i < m; ++i) {
            if (viol(i) > tol * std::max(1.0, std::abs(d(i)))) return;
        }
        found = BruteForceSolution{x, subset};
    };

    // Subsets in order of size, then lexicographically.
    for (int size = 0; size <= std::min(n, m) && !found; ++size) {
        std::vector<int> idx(static_cast<std::size_t>(size));
        for (int i = 0; i < size; ++i) idx[static_cast<std::size_t>(i)] = i;
        for (;;) {
            subset = idx;
            try_subset();
            if (found) break;
            int i = size - 1;
            while (i >= 0 && idx[static_cast<std::size_t>(i)] == m - size + i) --i;
            if (i < 0) break;
            ++idx[static_cast<std::size_t>(i)];
            for (int j = i + 1; j < size; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
        }
    }
    if (!found) throw InfeasibleError("brute_force_solve: no KKT point found (QP infeasible?)");
    return *found;
}

}  // namespace certias
