#pragma once

// Parametric simulation of the solver: a depth-first work stack of
// (region, state, sequence) nodes. Each node's decision family is intersected
// with its region (or inflated through lift-partition-project when errors are
// modeled); non-empty children are pushed with the transition applied, and
// terminal children are collected. The result is sorted canonically, so it
// does not depend on scheduling or on the number of workers.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "certias/errors.hpp"
#include "certias/geometry.hpp"
#include "certias/lp.hpp"
#include "certias/lpp.hpp"
#include "certias/mpqp.hpp"
#include "certias/solver.hpp"

namespace certias {

enum class RegionStatus { optimal, iter_limit, degenerate };

inline const char* to_string(RegionStatus s)
{
    switch (s) {
    case RegionStatus::optimal: return "optimal";
    case RegionStatus::iter_limit: return "iter_limit";
    case RegionStatus::degenerate: return "degenerate";
    }
    return "?";
}

inline RegionStatus region_status_from_string(const std::string& s)
{
    for (RegionStatus r : {RegionStatus::optimal, RegionStatus::iter_limit, RegionStatus::degenerate}) {
        if (s == to_string(r)) return r;
    }
    throw InputError("unknown region status \"" + s + "\"");
}

inline RegionStatus status_of(Mode terminal)
{
    switch (terminal) {
    case Mode::terminated_optimal: return RegionStatus::optimal;
    case Mode::terminated_iter_limit: return RegionStatus::iter_limit;
    case Mode::degenerate: return RegionStatus::degenerate;
    default: throw std::logic_error("status_of: state is not terminal");
    }
}

struct RegionNode {
    Polyhedron region;
    SolverState state;
    StateSequence sequence;  ///< states visited so far, ending with `state`
    int depth = 0;           ///< slack checks already performed
    bool full_dimensional = true;
};

struct CertifiedRegion {
    Polyhedron region;
    StateSequence sequence;
    RegionStatus status = RegionStatus::optimal;
    int iterations = 0;
};

struct CertificationStats {
    std::uint64_t explored = 0;  ///< nodes expanded
    std::uint64_t pruned = 0;    ///< empty or thin candidates dropped
    std::uint64_t lp_calls = 0;
};

struct CertificationResult {
    std::vector<CertifiedRegion> regions;
    std::string problem_digest;
    Tolerances tol;
    ErrorModel model;
    CertificationStats stats;

    /// Worst-case iteration count; -1 stands for "iteration limit reached".
    int worst_iterations() const
    {
        int worst = 0;
        for (const auto& r : regions) {
            if (r.status == RegionStatus::iter_limit) return -1;
            worst = std::max(worst, r.iterations);
        }
        return worst;
    }
};

/// One expanded node, as reported to a trace observer.
struct PartitionEvent {
    const Polyhedron* region;
    const SolverState* state;
    int depth;
    const DecisionFamily* family;
    const ErrorModel* applied;                  ///< model restricted to the family's coordinates
    const std::vector<Polyhedron>* candidates;  ///< index-aligned with family->decisions, before pruning
};

struct CertifyOptions {
    int workers = 1;
    std::size_t max_live_nodes = 100000;  ///< budget on the work stack size
    std::uint64_t max_nodes = 5000000;    ///< budget on total expansions
    GeometryTolerances geometry{};
    /// Called for every expanded non-singular node; calls are serialized.
    std::function<void(const PartitionEvent&)> observer;
};

/// Error model restricted to one decision family; memoizes the (costly)
/// projections of polyhedral error sets.
class ModelResolver {
public:
    explicit ModelResolver(const ErrorModel& model, int m) : model_(&model), m_(m) {}

    ErrorModel resolve(const DecisionFamily& fam, const Polyhedron& region, int k)
    {
        if (!fam.perturbed) return ErrorModel::none();
        const ErrorModel& e = model_->at(k);
        switch (e.kind) {
        case ErrorModel::Kind::none: return ErrorModel::none();
        case ErrorModel::Kind::relative: return ErrorModel::hypercube(rel_to_abs(fam.z, region, e.rel_bound));
        case ErrorModel::Kind::hypercube:
            return e.has_offset() ? e.restrict_to(fam.coords, m_) : ErrorModel::hypercube(e.eps_bar);
        case ErrorModel::Kind::polyhedral: {
            const int slot = model_->schedule.empty() ? 0 : std::min<int>(k, static_cast<int>(model_->schedule.size()) - 1);
            std::lock_guard lock(mutex_);
            auto key = std::make_pair(slot, fam.coords);
            auto it = cache_.find(key);
            if (it == cache_.end()) it = cache_.emplace(key, e.restrict_to(fam.coords, m_)).first;
            return it->second;
        }
        }
        return ErrorModel::none();
    }

private:
    const ErrorModel* model_;
    int m_;
    std::mutex mutex_;
    std::map<std::pair<int, std::vector<int>>, ErrorModel> cache_;
};

/// Result of expanding one node.
struct PartitionStep {
    DecisionFamily family;
    ErrorModel applied;
    std::vector<Polyhedron> candidates;                 ///< index-aligned, before pruning
    std::vector<std::pair<int, Polyhedron>> children;   ///< surviving (decision index, reduced region)
    std::vector<char> child_full_dimensional;
    std::size_t pruned = 0;
};

/// Candidate emptiness. Children of a full-dimensional parent must contain a
/// ball of radius above the feasibility tolerance (measure-zero slivers are
/// dropped); children of a lower-dimensional parent only need to be nonempty.
inline bool keep_candidate(const Polyhedron& P, bool parent_full_dimensional, const GeometryTolerances& tol,
                           bool* child_full_dimensional)
{
    if (P.trivially_empty()) return false;
    if (P.rows() == 0) {
        *child_full_dimensional = true;
        return true;
    }
    const double r = chebyshev_ball(P, 1.0).radius;
    *child_full_dimensional = r > tol.feasibility;
    return parent_full_dimensional ? r > tol.feasibility : r >= -tol.feasibility;
}

/// Decision-family partition of `region` at `state`; `k` is the iteration
/// index used to pick the error model (the slack check's own index, or the
/// index of the preceding slack check for a dual check).
inline PartitionStep partition_step(const Polyhedron& region, const SolverState& state, const SubproblemMaps& maps,
                                    int n_constraints, const Tolerances& tol, ModelResolver& resolver, int k,
                                    bool parent_full_dimensional = true, const GeometryTolerances& geo = {})
{
    if (state.terminal()) throw std::logic_error("partition_step: state is terminal");
    PartitionStep out;
    out.family = decision_family(maps, state, tol, n_constraints);
    if (out.family.singular) {
        out.candidates.push_back(region);
        out.children.emplace_back(0, region);
        out.child_full_dimensional.push_back(parent_full_dimensional);
        return out;
    }
    out.applied = resolver.resolve(out.family, region, k);
    out.candidates = lift_partition_project(region, out.family.A, out.family.b, out.family.z, out.applied, geo);
    for (std::size_t i = 0; i < out.candidates.size(); ++i) {
        bool full = false;
        if (!keep_candidate(out.candidates[i], parent_full_dimensional, geo, &full)) {
            ++out.pruned;
            continue;
        }
        out.children.emplace_back(static_cast<int>(i), remove_redundant(out.candidates[i], geo));
        out.child_full_dimensional.push_back(full);
    }
    return out;
}

/// Convenience overload computing the subproblem maps directly.
inline PartitionStep partition_step(const Polyhedron& region, const SolverState& state, const MpQP& prob,
                                    const Tolerances& tol, const ErrorModel& model, int k)
{
    ModelResolver resolver(model, prob.n_constraints());
    return partition_step(region, state, subproblem_maps(prob, state.working_set), prob.n_constraints(), tol,
                          resolver, k, is_full_dimensional(region));
}

namespace detail {

inline bool sequence_less(const CertifiedRegion& a, const CertifiedRegion& b)
{
    const std::string ea = encode(a.sequence), eb = encode(b.sequence);
    if (ea != eb) return ea < eb;
    // Identical sequences can only come from distinct branches of a cover;
    // order them by their row data for a stable document.
    const auto& A1 = a.region.A();
    const auto& A2 = b.region.A();
    if (A1.rows() != A2.rows()) return A1.rows() < A2.rows();
    for (Eigen::Index i = 0; i < A1.size(); ++i) {
        if (A1.data()[i] != A2.data()[i]) return A1.data()[i] < A2.data()[i];
    }
    for (Eigen::Index i = 0; i < a.region.b().size(); ++i) {
        if (a.region.b()(i) != b.region.b()(i)) return a.region.b()(i) < b.region.b()(i);
    }
    return false;
}

}  // namespace detail

/// Certifies the solver over prob.theta_set.
inline CertificationResult certify(const MpQP& prob, const Tolerances& tol, const ErrorModel& model,
                                   const CertifyOptions& opts = {})
{
    tol.validate();
    model.validate(prob.n_constraints());
    const int m = prob.n_constraints();
    const GeometryTolerances& geo = opts.geometry;

    CertificationResult result;
    result.problem_digest = problem_digest(prob);
    result.tol = tol;
    result.model = model;

    MapCache cache(prob);
    ModelResolver resolver(model, m);

    std::mutex mutex;  // guards stack, results, counters and the observer
    std::condition_variable cv;
    std::vector<RegionNode> stack;
    std::size_t active = 0;
    bool stop = false;
    std::exception_ptr failure;
    std::uint64_t explored = 0, pruned = 0;
    std::atomic<std::uint64_t> lp_total{0};

    {
        RegionNode root;
        root.region = remove_redundant(prob.theta_set, geo);
        root.sequence.push_back(root.state);
        root.full_dimensional = is_full_dimensional(root.region, geo);
        stack.push_back(std::move(root));
    }

    auto expand = [&](RegionNode node, std::vector<RegionNode>& pushes, std::vector<CertifiedRegion>& done,
                      std::uint64_t& node_pruned) {
        if (node.state.mode == Mode::slack_check && node.depth == tol.iter_limit) {
            StateSequence seq = node.sequence;
            seq.push_back(transition(node.state, Decision::iteration_limit()));
            done.push_back({node.region, seq, RegionStatus::iter_limit, count_iterations(seq)});
            return;
        }
        const auto maps = cache.get(node.state.working_set);
        const int k = node.state.mode == Mode::slack_check ? node.depth : node.depth - 1;
        PartitionStep ps = partition_step(node.region, node.state, *maps, m, tol, resolver, k,
                                          node.full_dimensional, geo);
        node_pruned += ps.pruned;
        if (opts.observer && !ps.family.singular) {
            PartitionEvent ev{&node.region, &node.state, node.depth, &ps.family, &ps.applied, &ps.candidates};
            std::lock_guard lock(mutex);
            opts.observer(ev);
        }
        for (std::size_t c = 0; c < ps.children.size(); ++c) {
            auto& [index, region] = ps.children[c];
            const SolverState next = transition(node.state, ps.family.decisions[static_cast<std::size_t>(index)]);
            StateSequence seq = node.sequence;
            seq.push_back(next);
            if (next.terminal()) {
                CertifiedRegion r;
                r.region = std::move(region);
                r.status = status_of(next.mode);
                r.iterations = count_iterations(seq);
                r.sequence = std::move(seq);
                done.push_back(std::move(r));
                continue;
            }
            RegionNode child;
            child.region = std::move(region);
            child.state = next;
            child.sequence = std::move(seq);
            child.depth = node.depth + (node.state.mode == Mode::slack_check ? 1 : 0);
            child.full_dimensional = ps.child_full_dimensional[c] != 0;
            pushes.push_back(std::move(child));
        }
    };

    auto worker = [&]() {
        const std::uint64_t lp_start = detail::lp_calls;
        std::unique_lock lock(mutex);
        for (;;) {
            cv.wait(lock, [&] { return stop || !stack.empty() || active == 0; });
            if (stop || (stack.empty() && active == 0)) break;
            RegionNode node = std::move(stack.back());
            stack.pop_back();
            ++active;
            ++explored;
            if (explored > opts.max_nodes) {
                stop = true;
                if (!failure) {
                    failure = std::make_exception_ptr(BudgetExceededError(
                        "certify: exploration budget of " + std::to_string(opts.max_nodes) + " expansions exceeded"));
                }
                cv.notify_all();
                break;
            }
            lock.unlock();

            std::vector<RegionNode> pushes;
            std::vector<CertifiedRegion> done;
            std::uint64_t node_pruned = 0;
            std::exception_ptr err;
            try {
                expand(std::move(node), pushes, done, node_pruned);
            } catch (...) {
                err = std::current_exception();
            }

            lock.lock();
            --active;
            if (err) {
                if (!failure) failure = err;
                stop = true;
                cv.notify_all();
                break;
            }
            pruned += node_pruned;
            for (auto& d : done) result.regions.push_back(std::move(d));
            // Reverse so the first decision is expanded first (depth-first, in order).
            for (auto it = pushes.rbegin(); it != pushes.rend(); ++it) stack.push_back(std::move(*it));
            if (stack.size() > opts.max_live_nodes) {
                stop = true;
                if (!failure) {
                    failure = std::make_exception_ptr(BudgetExceededError(
                        "certify: live region count exceeded the cap of " + std::to_string(opts.max_live_nodes)));
                }
            }
            cv.notify_all();
        }
        lp_total += detail::lp_calls - lp_start;
    };

    const int workers = std::max(1, opts.workers);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    std::sort(result.regions.begin(), result.regions.end(), detail::sequence_less);
    result.stats.explored = explored;
    result.stats.pruned = pruned;
    result.stats.lp_calls = lp_total.load();
    return result;
}

}  // namespace certias
