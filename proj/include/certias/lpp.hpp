#pragma once

// Lift-partition-project: regions of parameters for which *some* admissible
// error makes the solver take a given decision.
//
//   Psi_i     = {(theta, eps) : theta in region, eps in E, A_i (z(theta) + eps) <= b_i}
//   Theta~_i  = {theta : exists eps in E with (theta, eps) in Psi_i}
//
// General polyhedral E is projected with Fourier-Motzkin; boxes have the
// closed form A_i z(theta) <= b_i - A_i c + |A_i| r (row-wise), which for the
// centered cube of radius eps_bar is b_i + ||A_i||_1 eps_bar.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "certias/errors.hpp"
#include "certias/geometry.hpp"
#include "certias/mpqp.hpp"

namespace certias {

struct ErrorModel {
    enum class Kind { none, hypercube, polyhedral, relative };

    Kind kind = Kind::none;
    double eps_bar = 0.0;     ///< hypercube half-width
    Eigen::VectorXd center;   ///< optional box center (empty: origin)
    Eigen::VectorXd radii;    ///< optional per-coordinate half-widths (empty: eps_bar everywhere)
    std::optional<Polyhedron> set;  ///< polyhedral error set
    double rel_bound = 0.0;   ///< relative error box half-width
    std::vector<ErrorModel> schedule;  ///< per-iteration overrides; the last entry persists

    static ErrorModel none() { return {}; }
    static ErrorModel hypercube(double eps_bar)
    {
        ErrorModel e;
        e.kind = eps_bar > 0.0 ? Kind::hypercube : Kind::none;
        e.eps_bar = eps_bar;
        return e;
    }
    static ErrorModel box(Eigen::VectorXd center, Eigen::VectorXd radii)
    {
        ErrorModel e;
        e.kind = Kind::hypercube;
        e.center = std::move(center);
        e.radii = std::move(radii);
        e.eps_bar = e.radii.size() ? e.radii.maxCoeff() : 0.0;
        return e;
    }
    static ErrorModel polyhedral(Polyhedron set)
    {
        ErrorModel e;
        e.kind = Kind::polyhedral;
        e.set = std::move(set);
        return e;
    }
    static ErrorModel relative(double rel_bound)
    {
        ErrorModel e;
        e.kind = Kind::relative;
        e.rel_bound = rel_bound;
        return e;
    }

    /// Model in force at slack-check iteration k.
    const ErrorModel& at(int k) const
    {
        if (schedule.empty()) return *this;
        return schedule[static_cast<std::size_t>(std::min<int>(k, static_cast<int>(schedule.size()) - 1))];
    }

    bool is_box() const { return kind == Kind::hypercube; }
    bool has_offset() const { return center.size() > 0 || radii.size() > 0; }

    double box_center(int j) const { return center.size() ? center(j) : 0.0; }
    double box_radius(int j) const { return radii.size() ? radii(j) : eps_bar; }

    /// Largest |eps_j| any admissible error can reach (boxes and none only).
    double sup_norm() const
    {
        double s = 0.0;
        auto one = [&s](const ErrorModel& e) {
            if (e.kind == Kind::hypercube) {
                if (e.has_offset()) {
                    s = std::max(s, (e.center.cwiseAbs() + e.radii).maxCoeff());
                } else {
                    s = std::max(s, e.eps_bar);
                }
            }
        };
        one(*this);
        for (const auto& e : schedule) one(e);
        return s;
    }

    /// Checks well-formedness for errors over R^m; sets must contain the origin.
    void validate(int m) const
    {
        switch (kind) {
        case Kind::none: break;
        case Kind::hypercube:
            if (!(eps_bar >= 0.0)) throw InputError("error model: eps_bar must be nonnegative");
            if (has_offset()) {
                if (center.size() != m || radii.size() != m) {
                    throw InputError("error model: box center/radii must have one entry per constraint");
                }
                if ((radii.array() < 0.0).any()) throw InputError("error model: negative box radius");
                if ((center.cwiseAbs().array() > radii.array()).any()) {
                    throw InputError("error model: box does not contain the origin");
                }
            }
            break;
        case Kind::polyhedral:
            if (!set) throw InputError("error model: polyhedral kind requires a set");
            if (set->dim() != m) throw InputError("error model: error set dimension must equal the constraint count");
            if (!contains(*set, Eigen::VectorXd::Zero(m), 1e-12)) {
                throw InputError("error model: error set does not contain the origin");
            }
            break;
        case Kind::relative:
            if (!(rel_bound >= 0.0)) throw InputError("error model: rel_bound must be nonnegative");
            break;
        }
        for (const auto& e : schedule) {
            if (!e.schedule.empty()) throw InputError("error model: nested schedules are not allowed");
            e.validate(m);
        }
    }

    /// The model acting on the listed error coordinates only.
    ErrorModel restrict_to(std::span<const int> coords, int m) const
    {
        ErrorModel out;
        out.kind = kind;
        out.eps_bar = eps_bar;
        out.rel_bound = rel_bound;
        const auto k = static_cast<Eigen::Index>(coords.size());
        if (kind == Kind::hypercube && has_offset()) {
            out.center.resize(k);
            out.radii.resize(k);
            for (Eigen::Index i = 0; i < k; ++i) {
                out.center(i) = center(coords[static_cast<std::size_t>(i)]);
                out.radii(i) = radii(coords[static_cast<std::size_t>(i)]);
            }
        }
        if (kind == Kind::polyhedral) {
            if (k == 0) {
                out.kind = Kind::none;
                return out;
            }
            // Move the kept coordinates to the front, then project the rest away.
            std::vector<int> order(coords.begin(), coords.end());
            for (int j = 0; j < m; ++j) {
                if (std::find(coords.begin(), coords.end(), j) == coords.end()) order.push_back(j);
            }
            Eigen::MatrixXd A(set->rows(), m);
            for (int c = 0; c < m; ++c) A.col(c) = set->A().col(order[static_cast<std::size_t>(c)]);
            Polyhedron permuted(A, set->b());
            out.set = k == m ? permuted : project_fm(permuted, static_cast<int>(k));
        }
        return out;
    }
};

inline const char* to_string(ErrorModel::Kind k)
{
    switch (k) {
    case ErrorModel::Kind::none: return "none";
    case ErrorModel::Kind::hypercube: return "hypercube";
    case ErrorModel::Kind::polyhedral: return "polyhedral";
    case ErrorModel::Kind::relative: return "relative";
    }
    return "?";
}

/// {theta in region : A (F theta + g) <= b + ||A||_1 eps_bar}, rows of A taken one at a time.
inline Polyhedron hypercube_inflate(const Polyhedron& region, const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                    const AffineMap& zmap, double eps_bar)
{
    if (eps_bar < 0.0) throw InputError("hypercube_inflate: eps_bar must be nonnegative");
    const Eigen::VectorXd rhs = b - A * zmap.g + A.cwiseAbs().rowwise().sum() * eps_bar;
    return region.with_rows(A * zmap.F, rhs);
}

/// Axis-aligned box eps = c + D eps', |eps'|_inf <= 1, reduced to the cube case.
inline Polyhedron box_inflate(const Polyhedron& region, const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                              const AffineMap& zmap, const Eigen::VectorXd& center, const Eigen::VectorXd& radii)
{
    const Eigen::VectorXd rhs = b - A * zmap.g - A * center + A.cwiseAbs() * radii;
    return region.with_rows(A * zmap.F, rhs);
}

/// One output per half-plane set, index-aligned; empty outputs are kept.
inline std::vector<Polyhedron> lift_partition_project(const Polyhedron& region,
                                                      const std::vector<Eigen::MatrixXd>& A,
                                                      const std::vector<Eigen::VectorXd>& b, const AffineMap& zmap,
                                                      const ErrorModel& model, const GeometryTolerances& tol = {})
{
    if (zmap.cols() != region.dim()) throw InputError("lift_partition_project: z map does not act on the region space");
    if (A.size() != b.size()) throw InputError("lift_partition_project: half-plane list lengths differ");
    const int nt = region.dim();
    const int nz = zmap.rows();
    std::vector<Polyhedron> out;
    out.reserve(A.size());
    for (std::size_t i = 0; i < A.size(); ++i) {
        if (A[i].rows() == 0) {
            out.push_back(region);
            continue;
        }
        switch (model.kind) {
        case ErrorModel::Kind::none: out.push_back(hypercube_inflate(region, A[i], b[i], zmap, 0.0)); break;
        case ErrorModel::Kind::hypercube:
            if (model.has_offset()) {
                out.push_back(box_inflate(region, A[i], b[i], zmap, model.center, model.radii));
            } else {
                out.push_back(hypercube_inflate(region, A[i], b[i], zmap, model.eps_bar));
            }
            break;
        case ErrorModel::Kind::polyhedral: {
            if (!model.set || model.set->dim() != nz) {
                throw InputError("lift_partition_project: error set dimension differs from z");
            }
            const Polyhedron& E = *model.set;
            const Eigen::Index rows = region.rows() + E.rows() + A[i].rows();
            Eigen::MatrixXd L = Eigen::MatrixXd::Zero(rows, nt + nz);
            Eigen::VectorXd l(rows);
            Eigen::Index r = 0;
            L.block(r, 0, region.rows(), nt) = region.A();
            l.segment(r, region.rows()) = region.b();
            r += region.rows();
            L.block(r, nt, E.rows(), nz) = E.A();
            l.segment(r, E.rows()) = E.b();
            r += E.rows();
            L.block(r, 0, A[i].rows(), nt) = A[i] * zmap.F;
            L.block(r, nt, A[i].rows(), nz) = A[i];
            l.segment(r, A[i].rows()) = b[i] - A[i] * zmap.g;
            out.push_back(project_fm(Polyhedron(L, l), nt, tol));
            break;
        }
        case ErrorModel::Kind::relative:
            throw InputError("lift_partition_project: convert relative errors with rel_to_abs first");
        }
    }
    return out;
}

/// Absolute bound eps_bar = rel_bound * max_i max_{theta in region} |z_i(theta)|.
inline double rel_to_abs(const AffineMap& zmap, const Polyhedron& region, double rel_bound)
{
    if (rel_bound < 0.0) throw InputError("rel_to_abs: rel_bound must be nonnegative");
    if (rel_bound == 0.0) return 0.0;
    double worst = 0.0;
    for (int i = 0; i < zmap.rows(); ++i) {
        const Eigen::VectorXd c = zmap.F.row(i).transpose();
        for (Sense s : {Sense::maximize, Sense::minimize}) {
            const LpResult r = solve_lp(c, region, s);
            if (r.status == LpStatus::unbounded) throw InputError("rel_to_abs: region is unbounded along z");
            if (r.status == LpStatus::infeasible) throw InfeasibleError("rel_to_abs: region is empty");
            worst = std::max(worst, std::abs(r.value + zmap.g(i)));
        }
    }
    return rel_bound * worst;
}

}  // namespace certias
