#pragma once

// Half-space polyhedra {x : A x <= b} and the LP-based services built on
// them: emptiness, redundancy removal, Fourier-Motzkin projection,
// Chebyshev centers and bounding boxes.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "certias/errors.hpp"
#include "certias/lp.hpp"

namespace certias {

struct GeometryTolerances {
    double feasibility = 1e-9;    ///< emptiness threshold on the inscribed radius
    double redundancy = 1e-9;     ///< slack allowed when declaring a row redundant
    double optimality = 1e-9;
    std::size_t fm_row_cap = 10000;
};

class Polyhedron {
public:
    Polyhedron() = default;

    /// The whole space R^dim.
    explicit Polyhedron(int dim) : A_(0, dim), b_(0), dim_(dim) {}

    Polyhedron(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) : dim_(static_cast<int>(A.cols()))
    {
        if (A.rows() != b.size()) throw InputError("polyhedron: row count of A differs from length of b");
        if (!A.allFinite() || !b.allFinite()) throw InputError("polyhedron: non-finite coefficient");
        std::vector<Eigen::Index> kept;
        kept.reserve(A.rows());
        for (Eigen::Index i = 0; i < A.rows(); ++i) {
            if (A.row(i).cwiseAbs().maxCoeff() == 0.0) {
                // 0 <= b with b negative beyond the feasibility tolerance.
                if (b(i) < -1e-9) empty_ = true;
                continue;
            }
            kept.push_back(i);
        }
        if (empty_) {
            A_ = Eigen::MatrixXd::Zero(1, dim_);
            b_ = Eigen::VectorXd::Constant(1, -1.0);
            return;
        }
        A_.resize(static_cast<Eigen::Index>(kept.size()), dim_);
        b_.resize(static_cast<Eigen::Index>(kept.size()));
        for (std::size_t r = 0; r < kept.size(); ++r) {
            A_.row(static_cast<Eigen::Index>(r)) = A.row(kept[r]);
            b_(static_cast<Eigen::Index>(r)) = b(kept[r]);
        }
    }

    static Polyhedron box(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper)
    {
        const auto n = lower.size();
        Eigen::MatrixXd A(2 * n, n);
        A << Eigen::MatrixXd::Identity(n, n), -Eigen::MatrixXd::Identity(n, n);
        Eigen::VectorXd b(2 * n);
        b << upper, -lower;
        return {A, b};
    }

    static Polyhedron empty(int dim)
    {
        return {Eigen::MatrixXd::Zero(1, dim), Eigen::VectorXd::Constant(1, -1.0)};
    }

    int dim() const { return dim_; }
    int rows() const { return static_cast<int>(A_.rows()); }
    const Eigen::MatrixXd& A() const { return A_; }
    const Eigen::VectorXd& b() const { return b_; }

    /// True when a contradictory all-zero row was supplied.
    bool trivially_empty() const { return empty_; }

    Polyhedron with_rows(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) const
    {
        if (A.cols() != dim_) throw InputError("polyhedron: appended rows have wrong dimension");
        Eigen::MatrixXd AA(A_.rows() + A.rows(), dim_);
        Eigen::VectorXd bb(b_.size() + b.size());
        AA << A_, A;
        bb << b_, b;
        return {AA, bb};
    }

    Polyhedron intersect(const Polyhedron& other) const { return with_rows(other.A(), other.b()); }

    bool operator==(const Polyhedron& other) const
    {
        return dim_ == other.dim_ && A_.rows() == other.A_.rows() && A_ == other.A_ && b_ == other.b_;
    }

private:
    Eigen::MatrixXd A_{0, 0};
    Eigen::VectorXd b_{0};
    int dim_ = 0;
    bool empty_ = false;
};

inline LpResult solve_lp(const Eigen::VectorXd& c, const Polyhedron& P, Sense sense, const GeometryTolerances& tol = {})
{
    if (c.size() != P.dim()) throw InputError("solve_lp: objective length differs from polyhedron dimension");
    LpTolerances lt;
    lt.feasibility = tol.feasibility;
    return solve_lp(c, P.A(), P.b(), sense, lt);
}

inline bool contains(const Polyhedron& P, const Eigen::VectorXd& point, double slack = 0.0)
{
    if (point.size() != P.dim()) throw InputError("contains: point dimension differs from polyhedron dimension");
    if (P.rows() == 0) return true;
    return ((P.A() * point - P.b()).array() <= slack).all();
}

/// Rows rescaled to unit Euclidean norm.
inline Polyhedron normalized(const Polyhedron& P)
{
    if (P.trivially_empty()) return P;
    const Eigen::VectorXd norms = P.A().rowwise().norm();
    return {norms.asDiagonal().inverse() * P.A(), P.b().cwiseQuotient(norms)};
}

struct Ball {
    Eigen::VectorXd center;
    double radius = 0.0;  ///< +inf when the set contains balls of any size; negative when empty
};

/// Largest inscribed ball. With a finite `radius_cap` the LP is always
/// bounded; the radius is negative (an infeasibility measure) for empty sets.
inline Ball chebyshev_ball(const Polyhedron& P, double radius_cap = std::numeric_limits<double>::infinity())
{
    const int n = P.dim();
    Ball ball;
    if (P.trivially_empty()) {
        ball.center = Eigen::VectorXd::Zero(n);
        ball.radius = -1.0;
        return ball;
    }
    const bool capped = std::isfinite(radius_cap);
    const Eigen::Index m = P.rows();
    Eigen::MatrixXd A(m + (capped ? 1 : 0), n + 1);
    Eigen::VectorXd b(A.rows());
    for (Eigen::Index i = 0; i < m; ++i) {
        const double nrm = P.A().row(i).norm();
        A.row(i).head(n) = P.A().row(i) / nrm;
        A(i, n) = 1.0;
        b(i) = P.b()(i) / nrm;
    }
    if (capped) {
        A.row(m).setZero();
        A(m, n) = 1.0;
        b(m) = radius_cap;
    }
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n + 1);
    c(n) = 1.0;
    const LpResult r = solve_lp(c, A, b, Sense::maximize);
    if (r.status == LpStatus::unbounded) {
        ball = chebyshev_ball(P, 1.0);
        ball.radius = std::numeric_limits<double>::infinity();
        return ball;
    }
    if (r.status != LpStatus::optimal) throw NumericalError("chebyshev_ball: LP reported infeasible");
    ball.center = r.point.head(n);
    ball.radius = r.point(n);
    return ball;
}

inline bool is_empty(const Polyhedron& P, const GeometryTolerances& tol = {})
{
    if (P.trivially_empty()) return true;
    if (P.rows() == 0) return false;
    return chebyshev_ball(P, 1.0).radius < -tol.feasibility;
}

/// True when P contains a ball of radius larger than the feasibility tolerance.
inline bool is_full_dimensional(const Polyhedron& P, const GeometryTolerances& tol = {})
{
    if (P.trivially_empty()) return false;
    if (P.rows() == 0) return true;
    return chebyshev_ball(P, 1.0).radius > tol.feasibility;
}

/// Chebyshev center of a nonempty polyhedron.
inline Ball interior_point(const Polyhedron& P)
{
    Ball ball = chebyshev_ball(P);
    if (ball.radius < -GeometryTolerances{}.feasibility) throw InfeasibleError("interior_point: polyhedron is empty");
    return ball;
}

/// Per-coordinate LP bounds; entries are +-inf where unbounded.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> bounding_box(const Polyhedron& P, const GeometryTolerances& tol = {})
{
    const int n = P.dim();
    Eigen::VectorXd lo(n), hi(n);
    for (int j = 0; j < n; ++j) {
        Eigen::VectorXd c = Eigen::VectorXd::Unit(n, j);
        const LpResult up = solve_lp(c, P, Sense::maximize, tol);
        const LpResult dn = solve_lp(c, P, Sense::minimize, tol);
        if (up.status == LpStatus::infeasible || dn.status == LpStatus::infeasible) {
            throw InfeasibleError("bounding_box: polyhedron is empty");
        }
        hi(j) = up.status == LpStatus::optimal ? up.value : std::numeric_limits<double>::infinity();
        lo(j) = dn.status == LpStatus::optimal ? dn.value : -std::numeric_limits<double>::infinity();
    }
    return {lo, hi};
}

/// Drops rows that are implied by the others. Rows are tested in order, each
/// against the rows still retained; exact duplicates keep their first
/// occurrence. A row whose LP fails is retained.
inline Polyhedron remove_redundant(const Polyhedron& P, const GeometryTolerances& tol = {})
{
    if (P.trivially_empty() || P.rows() <= 1) return P;
    const int m = P.rows();
    const int n = P.dim();
    const Polyhedron N = normalized(P);
    std::vector<char> keep(m, 1);

    // Parallel duplicates: keep the tighter (first on ties).
    for (int i = 0; i < m; ++i) {
        if (!keep[i]) continue;
        for (int j = i + 1; j < m; ++j) {
            if (!keep[j]) continue;
            if ((N.A().row(i) - N.A().row(j)).cwiseAbs().maxCoeff() > 1e-12) continue;
            if (N.b()(j) < N.b()(i) - 1e-12) {
                keep[i] = 0;
                break;
            }
            keep[j] = 0;
        }
    }

    // Cheap pass: rows implied by the bounding box of the set.
    if (m > 2 * n + 1) {
        try {
            const auto [lo, hi] = bounding_box(P, tol);
            for (int i = 0; i < m; ++i) {
                if (!keep[i]) continue;
                double sup = 0.0;
                for (int j = 0; j < n; ++j) {
                    const double a = N.A()(i, j);
                    if (a > 0.0) sup += a * hi(j);
                    else if (a < 0.0) sup += a * lo(j);
                }
                // The box is looser than the set; a row below the box support
                // by a margin is safely redundant. Box faces themselves are not
                // dropped here (they may be facets).
                if (sup < N.b()(i) - 1e-7) keep[i] = 0;
            }
        } catch (const NumericalError&) {
        } catch (const InfeasibleError&) {
        }
    }

    for (int i = 0; i < m; ++i) {
        if (!keep[i]) continue;
        int others = 0;
        for (int j = 0; j < m; ++j) others += (keep[j] && j != i) ? 1 : 0;
        if (others == 0) continue;
        Eigen::MatrixXd A(others, n);
        Eigen::VectorXd b(others);
        for (int j = 0, r = 0; j < m; ++j) {
            if (!keep[j] || j == i) continue;
            A.row(r) = N.A().row(j);
            b(r) = N.b()(j);
            ++r;
        }
        try {
            const LpResult res = solve_lp(N.A().row(i).transpose(), A, b, Sense::maximize);
            if (res.status == LpStatus::optimal && res.value <= N.b()(i) + tol.redundancy) keep[i] = 0;
        } catch (const NumericalError&) {
        }
    }

    int count = 0;
    for (char k : keep) count += k;
    Eigen::MatrixXd A(count, n);
    Eigen::VectorXd b(count);
    for (int i = 0, r = 0; i < m; ++i) {
        if (!keep[i]) continue;
        A.row(r) = P.A().row(i);
        b(r) = P.b()(i);
        ++r;
    }
    return {A, b};
}

/// Orthogonal projection onto the first `keep` coordinates by Fourier-Motzkin
/// elimination, trailing coordinate first, with redundancy removal after
/// every eliminated coordinate.
inline Polyhedron project_fm(const Polyhedron& P, int keep, const GeometryTolerances& tol = {})
{
    if (keep <= 0 || keep >= P.dim()) throw InputError("project_fm: keep must lie strictly between 0 and the dimension");
    if (is_empty(P, tol)) return Polyhedron::empty(keep);

    Polyhedron current = remove_redundant(P, tol);
    for (int col = P.dim() - 1; col >= keep; --col) {
        const Eigen::MatrixXd& A = current.A();
        const Eigen::VectorXd& b = current.b();
        std::vector<int> pos, neg, zero;
        for (int i = 0; i < current.rows(); ++i) {
            const double a = A(i, col);
            const double scale = A.row(i).cwiseAbs().maxCoeff();
            if (std::abs(a) <= 1e-12 * scale) zero.push_back(i);
            else if (a > 0.0) pos.push_back(i);
            else neg.push_back(i);
        }
        const std::size_t count = zero.size() + pos.size() * neg.size();
        if (count > tol.fm_row_cap) {
            throw RowExplosionError("project_fm: " + std::to_string(count) + " intermediate rows exceed the cap of " +
                                    std::to_string(tol.fm_row_cap));
        }
        Eigen::MatrixXd NA(static_cast<Eigen::Index>(count), col);
        Eigen::VectorXd nb(static_cast<Eigen::Index>(count));
        Eigen::Index r = 0;
        for (int i : zero) {
            NA.row(r) = A.row(i).head(col);
            nb(r) = b(i);
            ++r;
        }
        for (int p : pos) {
            const double ap = A(p, col);
            for (int q : neg) {
                const double aq = -A(q, col);
                NA.row(r) = A.row(p).head(col) / ap + A.row(q).head(col) / aq;
                nb(r) = b(p) / ap + b(q) / aq;
                ++r;
            }
        }
        current = remove_redundant(Polyhedron(NA, nb), tol);
    }
    return current;
}

}  // namespace certias
