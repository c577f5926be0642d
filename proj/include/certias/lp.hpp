#pragma once

// Dense two-phase tableau simplex for small LPs of the form
//   min/max c'x  s.t.  A x <= b,  x free.
// Free variables are split as x = x+ - x-. Dantzig pricing switches to
// Bland's rule after a streak of degenerate pivots.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "certias/errors.hpp"

namespace certias {

enum class LpStatus { optimal, infeasible, unbounded };
enum class Sense { minimize, maximize };

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    double value = 0.0;
    Eigen::VectorXd point;
};

struct LpTolerances {
    double feasibility = 1e-9;  ///< phase-1 infeasibility threshold (scaled by max(1, |b|_inf))
    double optimality = 1e-10;  ///< reduced-cost threshold
    double pivot = 1e-11;       ///< smallest admissible pivot element
    int degenerate_streak = 20; ///< degenerate pivots tolerated before Bland's rule
    int pivot_cap_factor = 50;  ///< pivot cap per phase = factor * (rows + dim)
};

namespace detail {

/// Number of LPs solved on the calling thread. Used for statistics only.
inline thread_local std::uint64_t lp_calls = 0;

class Tableau {
public:
    Tableau(int rows, int cols) : rows_(rows), cols_(cols), t_((rows + 1) * (cols + 1), 0.0), basis_(rows, -1) {}

    double& at(int i, int j) { return t_[static_cast<std::size_t>(i) * (cols_ + 1) + j]; }
    double at(int i, int j) const { return t_[static_cast<std::size_t>(i) * (cols_ + 1) + j]; }
    double& rhs(int i) { return at(i, cols_); }
    double& obj(int j) { return at(rows_, j); }
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::vector<int>& basis() { return basis_; }

    void pivot(int r, int c)
    {
        const int width = cols_ + 1;
        double* pr = &t_[static_cast<std::size_t>(r) * width];
        const double inv = 1.0 / pr[c];
        for (int j = 0; j < width; ++j) pr[j] *= inv;
        pr[c] = 1.0;
        for (int i = 0; i <= rows_; ++i) {
            if (i == r) continue;
            double* pi = &t_[static_cast<std::size_t>(i) * width];
            const double f = pi[c];
            if (f == 0.0) continue;
            for (int j = 0; j < width; ++j) pi[j] -= f * pr[j];
            pi[c] = 0.0;
        }
        basis_[r] = c;
    }

    enum class Outcome { optimal, unbounded };

    // Only columns [0, allowed) may enter the basis.
    Outcome optimize(int allowed, int pivot_cap, const LpTolerances& tol)
    {
        int degenerate = 0;
        bool bland = false;
        for (int iter = 0;; ++iter) {
            if (iter >= pivot_cap) {
                throw NumericalError("LP kernel exceeded its pivot limit (" + std::to_string(pivot_cap) + ")");
            }
            int enter = -1;
            double best = -tol.optimality;
            for (int j = 0; j < allowed; ++j) {
                const double d = obj(j);
                if (bland) {
                    if (d < -tol.optimality) {
                        enter = j;
                        break;
                    }
                } else if (d < best) {
                    best = d;
                    enter = j;
                }
            }
            if (enter < 0) return Outcome::optimal;

            int leave = -1;
            double ratio = std::numeric_limits<double>::infinity();
            double leave_pivot = 0.0;
            for (int i = 0; i < rows_; ++i) {
                const double a = at(i, enter);
                if (a <= tol.pivot) continue;
                const double q = std::max(0.0, at(i, cols_)) / a;
                if (leave < 0 || q < ratio - 1e-12) {
                    leave = i;
                    ratio = q;
                    leave_pivot = a;
                } else if (q <= ratio + 1e-12) {
                    const bool better = bland ? basis_[i] < basis_[leave] : a > leave_pivot;
                    if (better) {
                        leave = i;
                        ratio = std::min(ratio, q);
                        leave_pivot = a;
                    }
                }
            }
            if (leave < 0) return Outcome::unbounded;

            if (ratio <= 1e-12) {
                if (++degenerate >= tol.degenerate_streak) bland = true;
            } else {
                degenerate = 0;
            }
            pivot(leave, enter);
        }
    }

private:
    int rows_;
    int cols_;
    std::vector<double> t_;
    std::vector<int> basis_;
};

}  // namespace detail

/// Solves min/max c'x subject to A x <= b with x free.
/// Throws NumericalError when the pivot cap is hit.
inline LpResult solve_lp(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& b, Sense sense,
                         const LpTolerances& tol = {})
{
    ++detail::lp_calls;
    const int n = static_cast<int>(A.cols());
    const int m = static_cast<int>(A.rows());
    if (c.size() != n || b.size() != m) throw InputError("solve_lp: dimension mismatch");

    const Eigen::VectorXd cmin = sense == Sense::maximize ? Eigen::VectorXd(-c) : c;
    LpResult result;

    if (m == 0) {
        if (cmin.cwiseAbs().maxCoeff() > 0.0) {
            result.status = LpStatus::unbounded;
            return result;
        }
        result.status = LpStatus::optimal;
        result.point = Eigen::VectorXd::Zero(n);
        return result;
    }

    int n_art = 0;
    for (int i = 0; i < m; ++i) n_art += b(i) < 0.0 ? 1 : 0;

    const int n_struct = 2 * n + m;
    detail::Tableau tab(m, n_struct + n_art);
    auto& basis = tab.basis();
    int art = 0;
    for (int i = 0; i < m; ++i) {
        const double s = b(i) < 0.0 ? -1.0 : 1.0;
        for (int j = 0; j < n; ++j) {
            tab.at(i, j) = s * A(i, j);
            tab.at(i, n + j) = -s * A(i, j);
        }
        tab.at(i, 2 * n + i) = s;
        tab.rhs(i) = s * b(i);
        if (s < 0.0) {
            tab.at(i, n_struct + art) = 1.0;
            basis[i] = n_struct + art;
            ++art;
        } else {
            basis[i] = 2 * n + i;
        }
    }

    const int pivot_cap = tol.pivot_cap_factor * (m + n);

    if (n_art > 0) {
        for (int i = 0; i < m; ++i) {
            if (basis[i] < n_struct) continue;
            for (int j = 0; j < n_struct; ++j) tab.obj(j) -= tab.at(i, j);
            tab.obj(tab.cols()) -= tab.rhs(i);
        }
        tab.optimize(tab.cols(), pivot_cap, tol);
        const double infeasibility = -tab.obj(tab.cols());
        const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
        if (infeasibility > tol.feasibility * scale) {
            result.status = LpStatus::infeasible;
            return result;
        }
        for (int i = 0; i < m; ++i) {
            if (basis[i] < n_struct) continue;
            int best = -1;
            double mag = 1e-9;
            for (int j = 0; j < n_struct; ++j) {
                if (std::abs(tab.at(i, j)) > mag) {
                    mag = std::abs(tab.at(i, j));
                    best = j;
                }
            }
            if (best >= 0) tab.pivot(i, best);
        }
    }

    // Phase 2 objective row.
    auto cost = [&](int j) -> double {
        if (j < n) return cmin(j);
        if (j < 2 * n) return -cmin(j - n);
        return 0.0;
    };
    for (int j = 0; j <= tab.cols(); ++j) tab.obj(j) = 0.0;
    for (int j = 0; j < n_struct; ++j) tab.obj(j) = cost(j);
    for (int i = 0; i < m; ++i) {
        const double cb = cost(basis[i]);
        if (cb == 0.0) continue;
        for (int j = 0; j <= tab.cols(); ++j) tab.obj(j) -= cb * tab.at(i, j);
    }

    if (tab.optimize(n_struct, pivot_cap, tol) == detail::Tableau::Outcome::unbounded) {
        result.status = LpStatus::unbounded;
        return result;
    }

    Eigen::VectorXd y = Eigen::VectorXd::Zero(n_struct + n_art);
    for (int i = 0; i < m; ++i) y(basis[i]) = tab.rhs(i);
    result.point = y.head(n) - y.segment(n, n);
    result.value = c.dot(result.point);
    result.status = LpStatus::optimal;
    return result;
}

}  // namespace certias
