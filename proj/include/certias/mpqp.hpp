#pragma once

// Parametric QP family
//     min_x 0.5 x'Hx + f(theta)'x   s.t.  C x <= d(theta),  theta in Theta0
// with f and d affine, and the affine KKT maps of its equality-constrained
// subproblems.

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "certias/errors.hpp"
#include "certias/geometry.hpp"
#include "certias/json_util.hpp"

namespace certias {

/// z(theta) = F theta + g.
struct AffineMap {
    Eigen::MatrixXd F;
    Eigen::VectorXd g;

    AffineMap() = default;
    AffineMap(Eigen::MatrixXd F_, Eigen::VectorXd g_) : F(std::move(F_)), g(std::move(g_))
    {
        if (F.rows() != g.size()) throw InputError("affine map: row counts of F and g differ");
    }

    int rows() const { return static_cast<int>(g.size()); }
    int cols() const { return static_cast<int>(F.cols()); }
    Eigen::VectorXd operator()(const Eigen::VectorXd& theta) const { return F * theta + g; }

    AffineMap select(std::span<const int> rows_to_keep) const
    {
        AffineMap out;
        out.F.resize(static_cast<Eigen::Index>(rows_to_keep.size()), F.cols());
        out.g.resize(static_cast<Eigen::Index>(rows_to_keep.size()));
        for (std::size_t r = 0; r < rows_to_keep.size(); ++r) {
            out.F.row(static_cast<Eigen::Index>(r)) = F.row(rows_to_keep[r]);
            out.g(static_cast<Eigen::Index>(r)) = g(rows_to_keep[r]);
        }
        return out;
    }
};

struct MpQP {
    Eigen::MatrixXd H;
    Eigen::MatrixXd C;
    Eigen::MatrixXd f_lin;
    Eigen::VectorXd f_const;
    Eigen::MatrixXd d_lin;
    Eigen::VectorXd d_const;
    Polyhedron theta_set;

    int n_x() const { return static_cast<int>(H.rows()); }
    int n_constraints() const { return static_cast<int>(C.rows()); }
    int n_theta() const { return static_cast<int>(f_lin.cols()); }

    Eigen::VectorXd f(const Eigen::VectorXd& theta) const { return f_lin * theta + f_const; }
    Eigen::VectorXd d(const Eigen::VectorXd& theta) const { return d_lin * theta + d_const; }

    /// Checks every invariant eagerly and caches the Cholesky factor of H.
    void validate()
    {
        const auto n = H.rows();
        if (n == 0 || H.cols() != n) throw InputError("H must be a nonempty square matrix");
        if (C.cols() != n) throw InputError("C must have as many columns as H");
        const auto m = C.rows();
        const auto nt = f_lin.cols();
        if (nt == 0) throw InputError("parameter dimension must be positive");
        if (f_lin.rows() != n || f_const.size() != n) throw InputError("f_lin/f_const dimensions do not match H");
        if (d_lin.rows() != m || d_lin.cols() != nt || d_const.size() != m) {
            throw InputError("d_lin/d_const dimensions do not match C and f_lin");
        }
        if (theta_set.dim() != nt) throw InputError("theta_set dimension does not match f_lin columns");
        if (!H.allFinite() || !C.allFinite() || !f_lin.allFinite() || !f_const.allFinite() || !d_lin.allFinite() ||
            !d_const.allFinite()) {
            throw InputError("problem data contains non-finite entries");
        }
        if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw InputError("H not symmetric");
        chol_ = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(H);
        if (chol_->info() != Eigen::Success) throw InputError("H not positive definite");
        if (is_empty(theta_set)) throw InputError("parameter set empty");
        const auto [lo, hi] = bounding_box(theta_set);
        if (!lo.allFinite() || !hi.allFinite()) throw InputError("parameter set unbounded");
    }

    const Eigen::LLT<Eigen::MatrixXd>& cholesky() const
    {
        if (!chol_) throw InputError("MpQP used before validate()");
        return *chol_;
    }

private:
    std::shared_ptr<const Eigen::LLT<Eigen::MatrixXd>> chol_;
};

struct SubproblemMaps {
    AffineMap x_map;       ///< minimizer of the equality-constrained QP
    AffineMap mu_map;      ///< primal slack d(theta) - C x(theta), all m rows
    AffineMap lambda_map;  ///< multipliers of the working constraints, in working-set order
    bool singular = false;
};

inline constexpr double kRankTolerance = 1e-10;

/// Solves min 0.5x'Hx + f(theta)'x s.t. C_W x = d_W(theta) symbolically in theta
/// through the Schur complement C_W H^-1 C_W'. Rank-deficient C_W sets `singular`.
inline SubproblemMaps subproblem_maps(const MpQP& prob, std::span<const int> working_set)
{
    const int n = prob.n_x();
    const int m = prob.n_constraints();
    const int nt = prob.n_theta();
    const int w = static_cast<int>(working_set.size());
    for (int i = 0; i < w; ++i) {
        if (working_set[i] < 0 || working_set[i] >= m) throw InputError("working set index out of range");
        for (int j = 0; j < i; ++j) {
            if (working_set[i] == working_set[j]) throw InputError("working set has duplicate indices");
        }
    }

    const auto& llt = prob.cholesky();
    SubproblemMaps maps;
    // Unconstrained minimizer x0 = -H^-1 f(theta).
    const Eigen::MatrixXd Fx0 = -llt.solve(prob.f_lin);
    const Eigen::VectorXd gx0 = -llt.solve(prob.f_const);

    if (w == 0) {
        maps.x_map = AffineMap(Fx0, gx0);
        maps.lambda_map = AffineMap(Eigen::MatrixXd(0, nt), Eigen::VectorXd(0));
    } else {
        Eigen::MatrixXd CW(w, n), DW(w, nt);
        Eigen::VectorXd dW(w);
        for (int i = 0; i < w; ++i) {
            CW.row(i) = prob.C.row(working_set[i]);
            DW.row(i) = prob.d_lin.row(working_set[i]);
            dW(i) = prob.d_const(working_set[i]);
        }
        const Eigen::MatrixXd HinvCt = llt.solve(CW.transpose());
        const Eigen::MatrixXd M = CW * HinvCt;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
        const Eigen::VectorXd D = ldlt.vectorD();
        const double scale = std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
        if (ldlt.info() != Eigen::Success || D.minCoeff() <= kRankTolerance * scale) {
            maps.singular = true;
            return maps;
        }
        // lambda = M^-1 (C_W x0 - d_W)
        const Eigen::MatrixXd Fl = ldlt.solve(CW * Fx0 - DW);
        const Eigen::VectorXd gl = ldlt.solve(CW * gx0 - dW);
        maps.lambda_map = AffineMap(Fl, gl);
        maps.x_map = AffineMap(Fx0 - HinvCt * Fl, gx0 - HinvCt * gl);
    }
    Eigen::MatrixXd Fmu = prob.d_lin - prob.C * maps.x_map.F;
    Eigen::VectorXd gmu = prob.d_const - prob.C * maps.x_map.g;
    for (int i : working_set) {
        Fmu.row(i).setZero();
        gmu(i) = 0.0;
    }
    maps.mu_map = AffineMap(Fmu, gmu);
    return maps;
}

/// Working-set keyed memo of subproblem maps; safe under concurrent lookups
/// and insertions (identical keys resolve to a single stored entry).
class MapCache {
public:
    explicit MapCache(const MpQP& prob) : prob_(&prob) {}

    std::shared_ptr<const SubproblemMaps> get(const std::vector<int>& working_set)
    {
        {
            std::shared_lock lock(mutex_);
            auto it = cache_.find(working_set);
            if (it != cache_.end()) return it->second;
        }
        auto fresh = std::make_shared<const SubproblemMaps>(subproblem_maps(*prob_, working_set));
        std::unique_lock lock(mutex_);
        auto [it, inserted] = cache_.emplace(working_set, std::move(fresh));
        return it->second;
    }

    std::size_t size() const
    {
        std::shared_lock lock(mutex_);
        return cache_.size();
    }

private:
    const MpQP* prob_;
    mutable std::shared_mutex mutex_;
    std::map<std::vector<int>, std::shared_ptr<const SubproblemMaps>> cache_;
};

// ---------------------------------------------------------------------------
// Problem documents

inline MpQP problem_from_json(const json_util::json& doc)
{
    using namespace json_util;
    if (!doc.is_object()) throw InputError("problem document must be a JSON object");
    MpQP p;
    p.H = to_matrix(require(doc, "H"), "H");
    p.C = to_matrix(require(doc, "C"), "C", p.H.cols());
    p.f_lin = to_matrix(require(doc, "f_lin"), "f_lin");
    p.f_const = to_vector(require(doc, "f_const"), "f_const");
    p.d_lin = to_matrix(require(doc, "d_lin"), "d_lin", p.f_lin.cols());
    p.d_const = to_vector(require(doc, "d_const"), "d_const");
    const auto& ts = require(doc, "theta_set");
    const Eigen::MatrixXd TA = to_matrix(require(ts, "A"), "theta_set.A", p.f_lin.cols());
    const Eigen::VectorXd Tb = to_vector(require(ts, "b"), "theta_set.b");
    if (TA.rows() != Tb.size()) throw InputError("theta_set: row count of A differs from length of b");
    p.theta_set = Polyhedron(TA, Tb);
    p.validate();
    return p;
}

inline json_util::json problem_to_json(const MpQP& p)
{
    using namespace json_util;
    json j;
    j["H"] = from_matrix(p.H);
    j["C"] = from_matrix(p.C);
    j["f_lin"] = from_matrix(p.f_lin);
    j["f_const"] = from_vector(p.f_const);
    j["d_lin"] = from_matrix(p.d_lin);
    j["d_const"] = from_vector(p.d_const);
    j["theta_set"] = {{"A", from_matrix(p.theta_set.A())}, {"b", from_vector(p.theta_set.b())}};
    return j;
}

inline MpQP load_problem(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open problem file: " + path);
    json_util::json doc;
    try {
        in >> doc;
    } catch (const json_util::json::exception& e) {
        throw InputError("problem file is not valid JSON: " + std::string(e.what()));
    }
    return problem_from_json(doc);
}

/// FNV-1a over the raw problem data, rendered as 16 hex digits.
inline std::string problem_digest(const MpQP& p)
{
    std::uint64_t h = 1469598103934665603ULL;
    auto mix_bytes = [&h](const void* data, std::size_t len) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= bytes[i];
            h *= 1099511628211ULL;
        }
    };
    auto mix = [&](const Eigen::MatrixXd& M) {
        const std::int64_t dims[2] = {M.rows(), M.cols()};
        mix_bytes(dims, sizeof(dims));
        for (Eigen::Index r = 0; r < M.rows(); ++r) {
            for (Eigen::Index c = 0; c < M.cols(); ++c) {
                const double v = M(r, c);
                mix_bytes(&v, sizeof(v));
            }
        }
    };
    mix(p.H);
    mix(p.C);
    mix(p.f_lin);
    mix(p.f_const);
    mix(p.d_lin);
    mix(p.d_const);
    mix(p.theta_set.A());
    mix(p.theta_set.b());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace certias
