#pragma once

// Full-step dual active-set solver written as a finite automaton over
// solver states (working set + mode). Each non-terminal state owns a
// family of closed polyhedra over an intermediate variable z (the primal
// slack of the non-working constraints, or the working multipliers); the
// polyhedron that contains z selects the transition. The same family is
// used parametrically by the certifier.

#include <Eigen/Dense>

#include <algorithm>
#include <compare>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "certias/errors.hpp"
#include "certias/mpqp.hpp"

namespace certias {

enum class Mode { slack_check, dual_check, terminated_optimal, terminated_iter_limit, degenerate };

inline bool is_terminal(Mode m)
{
    return m == Mode::terminated_optimal || m == Mode::terminated_iter_limit || m == Mode::degenerate;
}

inline const char* to_string(Mode m)
{
    switch (m) {
    case Mode::slack_check: return "slack_check";
    case Mode::dual_check: return "dual_check";
    case Mode::terminated_optimal: return "terminated_optimal";
    case Mode::terminated_iter_limit: return "terminated_iter_limit";
    case Mode::degenerate: return "degenerate";
    }
    return "?";
}

inline Mode mode_from_string(const std::string& s)
{
    for (Mode m : {Mode::slack_check, Mode::dual_check, Mode::terminated_optimal, Mode::terminated_iter_limit,
                   Mode::degenerate}) {
        if (s == to_string(m)) return m;
    }
    throw InputError("unknown solver mode \"" + s + "\"");
}

struct SolverState {
    std::vector<int> working_set;  ///< insertion order
    Mode mode = Mode::slack_check;

    bool terminal() const { return is_terminal(mode); }
    friend bool operator==(const SolverState&, const SolverState&) = default;
    friend auto operator<=>(const SolverState& a, const SolverState& b)
    {
        if (auto c = a.mode <=> b.mode; c != 0) return c;
        return a.working_set <=> b.working_set;
    }
};

using StateSequence = std::vector<SolverState>;

/// Number of slack checks actually performed, i.e. the iteration count. The
/// slack-check state cut off by the iteration limit is not counted.
inline int count_iterations(const StateSequence& seq)
{
    const auto n = static_cast<int>(std::count_if(seq.begin(), seq.end(),
                                                  [](const SolverState& s) { return s.mode == Mode::slack_check; }));
    return !seq.empty() && seq.back().mode == Mode::terminated_iter_limit ? n - 1 : n;
}

/// Compact text form, e.g. "S[] D[0] S[0] T[0]".
inline std::string encode(const StateSequence& seq)
{
    std::string out;
    for (const auto& s : seq) {
        if (!out.empty()) out += ' ';
        switch (s.mode) {
        case Mode::slack_check: out += 'S'; break;
        case Mode::dual_check: out += 'D'; break;
        case Mode::terminated_optimal: out += 'T'; break;
        case Mode::terminated_iter_limit: out += 'L'; break;
        case Mode::degenerate: out += 'X'; break;
        }
        out += '[';
        for (std::size_t i = 0; i < s.working_set.size(); ++i) {
            if (i) out += ',';
            out += std::to_string(s.working_set[i]);
        }
        out += ']';
    }
    return out;
}

/// The index argument of the transition function.
struct Decision {
    enum class Kind { terminate, add, keep, drop, degenerate, iteration_limit };
    Kind kind = Kind::terminate;
    int constraint = -1;

    static Decision terminate() { return {Kind::terminate, -1}; }
    static Decision add(int j) { return {Kind::add, j}; }
    static Decision keep() { return {Kind::keep, -1}; }
    static Decision drop(int j) { return {Kind::drop, j}; }
    static Decision degenerate() { return {Kind::degenerate, -1}; }
    static Decision iteration_limit() { return {Kind::iteration_limit, -1}; }

    friend bool operator==(const Decision&, const Decision&) = default;
};

inline std::string to_string(const Decision& d)
{
    switch (d.kind) {
    case Decision::Kind::terminate: return "terminate";
    case Decision::Kind::add: return "add " + std::to_string(d.constraint);
    case Decision::Kind::keep: return "keep";
    case Decision::Kind::drop: return "drop " + std::to_string(d.constraint);
    case Decision::Kind::degenerate: return "degenerate";
    case Decision::Kind::iteration_limit: return "iteration_limit";
    }
    return "?";
}

/// State update shared by the solver and the certifier.
inline SolverState transition(const SolverState& state, const Decision& d)
{
    if (state.terminal()) throw std::logic_error("transition: state is terminal");
    SolverState next = state;
    using K = Decision::Kind;
    switch (d.kind) {
    case K::degenerate: next.mode = Mode::degenerate; return next;
    case K::terminate:
        if (state.mode != Mode::slack_check) break;
        next.mode = Mode::terminated_optimal;
        return next;
    case K::iteration_limit:
        if (state.mode != Mode::slack_check) break;
        next.mode = Mode::terminated_iter_limit;
        return next;
    case K::add:
        if (state.mode != Mode::slack_check) break;
        if (std::find(state.working_set.begin(), state.working_set.end(), d.constraint) != state.working_set.end()) {
            throw std::logic_error("transition: constraint already in the working set");
        }
        next.working_set.push_back(d.constraint);
        next.mode = Mode::dual_check;
        return next;
    case K::keep:
        if (state.mode != Mode::dual_check) break;
        next.mode = Mode::slack_check;
        return next;
    case K::drop: {
        if (state.mode != Mode::dual_check) break;
        auto it = std::find(next.working_set.begin(), next.working_set.end(), d.constraint);
        if (it == next.working_set.end()) throw std::logic_error("transition: dropped constraint not in working set");
        next.working_set.erase(it);
        next.mode = Mode::dual_check;
        return next;
    }
    }
    throw std::logic_error("transition: decision " + to_string(d) + " invalid in mode " + to_string(state.mode));
}

struct Tolerances {
    double eps_primal = 1e-6;
    double eps_dual = 1e-6;
    int iter_limit = 15;
    bool perturb_multipliers = false;  ///< apply the error model to multipliers as well as slacks

    static Tolerances with_primal(double eps, int iter_limit = 15)
    {
        Tolerances t;
        t.eps_primal = eps;
        t.eps_dual = eps;
        t.iter_limit = iter_limit;
        return t;
    }

    void validate() const
    {
        if (!(eps_primal > 0.0)) throw InputError("primal tolerance must be positive");
        if (!(eps_dual > 0.0)) throw InputError("dual tolerance must be positive");
        if (iter_limit < 1) throw InputError("iteration limit must be at least 1");
    }
};

/// Closed polyhedra {z : A z <= b}, one per decision, over the state's
/// intermediate variable z(theta).
struct DecisionFamily {
    bool singular = false;
    AffineMap z;
    std::vector<int> coords;  ///< constraint index carried by each row of z
    std::vector<Decision> decisions;
    std::vector<Eigen::MatrixXd> A;
    std::vector<Eigen::VectorXd> b;
    bool perturbed = false;  ///< whether the error model acts on z in this mode

    std::size_t size() const { return decisions.size(); }
};

namespace detail {

// "j most negative and below -tol": z_j <= -tol, z_j - z_k <= 0 for k != j;
// plus the "all above -tol" set -z <= tol.
inline void argmin_family(DecisionFamily& fam, double tol, Decision (*pick)(int), Decision none)
{
    const int nz = fam.z.rows();
    for (int p = 0; p < nz; ++p) {
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nz, nz);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(nz);
        A(0, p) = 1.0;
        b(0) = -tol;
        for (int q = 0, r = 1; q < nz; ++q) {
            if (q == p) continue;
            A(r, p) = 1.0;
            A(r, q) = -1.0;
            ++r;
        }
        fam.decisions.push_back(pick(fam.coords[p]));
        fam.A.push_back(std::move(A));
        fam.b.push_back(std::move(b));
    }
    fam.decisions.push_back(none);
    fam.A.push_back(-Eigen::MatrixXd::Identity(nz, nz));
    fam.b.push_back(Eigen::VectorXd::Constant(nz, tol));
}

}  // namespace detail

inline DecisionFamily decision_family(const SubproblemMaps& maps, const SolverState& state, const Tolerances& tol,
                                      int n_constraints)
{
    DecisionFamily fam;
    if (state.mode == Mode::slack_check) {
        for (int j = 0; j < n_constraints; ++j) {
            if (std::find(state.working_set.begin(), state.working_set.end(), j) == state.working_set.end()) {
                fam.coords.push_back(j);
            }
        }
        fam.z = maps.mu_map.select(fam.coords);
        fam.perturbed = true;
        detail::argmin_family(fam, tol.eps_primal, &Decision::add, Decision::terminate());
    } else if (state.mode == Mode::dual_check) {
        if (maps.singular) {
            fam.singular = true;
            fam.decisions.push_back(Decision::degenerate());
            fam.A.emplace_back(0, 0);
            fam.b.emplace_back(0);
            return fam;
        }
        fam.coords = state.working_set;
        fam.z = maps.lambda_map;
        fam.perturbed = tol.perturb_multipliers;
        detail::argmin_family(fam, tol.eps_dual, &Decision::drop, Decision::keep());
    } else {
        throw std::logic_error("decision_family: terminal state");
    }
    return fam;
}

/// Additive error source for one solver run. Vectors are indexed by
/// constraint (length m); `iteration` is the slack-check index the step
/// belongs to.
class ErrorInjector {
public:
    using Schedule = std::function<Eigen::VectorXd(int iteration, int m)>;

    ErrorInjector() = default;
    explicit ErrorInjector(Schedule slack, Schedule multipliers = nullptr)
        : slack_(std::move(slack)), multipliers_(std::move(multipliers))
    {
    }

    static ErrorInjector constant(const Eigen::VectorXd& eps)
    {
        return ErrorInjector([eps](int, int) { return eps; });
    }

    Eigen::VectorXd slack_error(int iteration, int m) const
    {
        return slack_ ? checked(slack_(iteration, m), m) : Eigen::VectorXd::Zero(m);
    }

    Eigen::VectorXd multiplier_error(int iteration, int m) const
    {
        return multipliers_ ? checked(multipliers_(iteration, m), m) : Eigen::VectorXd::Zero(m);
    }

private:
    static Eigen::VectorXd checked(Eigen::VectorXd v, int m)
    {
        if (v.size() != m) throw InputError("error injector returned a vector of the wrong length");
        return v;
    }

    Schedule slack_;
    Schedule multipliers_;
};

struct StepResult {
    SolverState next;
    Decision decision;
    Eigen::VectorXd snapshot;  ///< perturbed intermediate variable the decision was taken on
};

/// Lowest-index argmin over entries strictly below -tol; -1 if none.
inline int most_negative_below(const Eigen::VectorXd& z, const std::vector<int>& coords, double tol)
{
    int best = -1;
    for (int p = 0; p < z.size(); ++p) {
        if (!(z(p) < -tol)) continue;
        if (best < 0 || z(p) < z(best) || (z(p) == z(best) && coords[p] < coords[best])) best = p;
    }
    return best;
}

inline StepResult step(const SubproblemMaps& maps, const SolverState& state, const Eigen::VectorXd& theta,
                       const Eigen::VectorXd& epsilon, const Tolerances& tol, int n_constraints)
{
    if (state.terminal()) throw std::logic_error("step: state is terminal");
    const DecisionFamily fam = decision_family(maps, state, tol, n_constraints);
    StepResult out;
    if (fam.singular) {
        out.decision = Decision::degenerate();
        out.next = transition(state, out.decision);
        return out;
    }
    Eigen::VectorXd z = fam.z(theta);
    if (fam.perturbed) {
        for (int p = 0; p < z.size(); ++p) z(p) += epsilon(fam.coords[p]);
    }
    const double t = state.mode == Mode::slack_check ? tol.eps_primal : tol.eps_dual;
    const int p = most_negative_below(z, fam.coords, t);
    if (state.mode == Mode::slack_check) {
        out.decision = p < 0 ? Decision::terminate() : Decision::add(fam.coords[p]);
    } else {
        out.decision = p < 0 ? Decision::keep() : Decision::drop(fam.coords[p]);
    }
    out.snapshot = std::move(z);
    out.next = transition(state, out.decision);
    return out;
}

inline StepResult step(const MpQP& prob, const SolverState& state, const Eigen::VectorXd& theta,
                       const Eigen::VectorXd& epsilon, const Tolerances& tol)
{
    return step(subproblem_maps(prob, state.working_set), state, theta, epsilon, tol, prob.n_constraints());
}

struct RunResult {
    StateSequence sequence;
    Eigen::VectorXd x;
    Mode status = Mode::terminated_optimal;
    int iterations = 0;  ///< slack checks performed
};

/// Runs the solver at a fixed parameter from the empty working set.
inline RunResult run(const MpQP& prob, const Eigen::VectorXd& theta, const ErrorInjector& injector,
                     const Tolerances& tol, MapCache* cache = nullptr)
{
    const int m = prob.n_constraints();
    auto maps_for = [&](const std::vector<int>& w) {
        return cache ? cache->get(w) : std::make_shared<const SubproblemMaps>(subproblem_maps(prob, w));
    };

    RunResult out;
    SolverState state;
    out.sequence.push_back(state);
    int slack_checks = 0;
    auto maps = maps_for(state.working_set);
    out.x = maps->x_map(theta);

    while (!state.terminal()) {
        Eigen::VectorXd eps;
        if (state.mode == Mode::slack_check) {
            if (slack_checks == tol.iter_limit) {
                state = transition(state, Decision::iteration_limit());
                out.sequence.push_back(state);
                break;
            }
            eps = injector.slack_error(slack_checks, m);
            ++slack_checks;
        } else {
            eps = tol.perturb_multipliers ? injector.multiplier_error(slack_checks - 1, m) : Eigen::VectorXd::Zero(m);
        }
        const StepResult r = step(*maps, state, theta, eps, tol, m);
        state = r.next;
        out.sequence.push_back(state);
        if (state.mode == Mode::dual_check) {
            maps = maps_for(state.working_set);
            if (!maps->singular) out.x = maps->x_map(theta);
        }
    }
    out.status = state.mode;
    out.iterations = slack_checks;
    return out;
}

}  // namespace certias
