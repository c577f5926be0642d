#include <gtest/gtest.h>

#include <random>
#include <string>

#include "certias/mpqp.hpp"
#include "oracles.hpp"

using certias::MpQP;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

const std::string kToy = std::string(CERTIAS_PROBLEM_DIR) + "/toy.json";

certias::json_util::json toy_doc()
{
    return certias::json_util::json::parse(R"({
        "H": [[1.0]], "C": [[1.0]], "f_lin": [[1.0]], "f_const": [0.0],
        "d_lin": [[0.0]], "d_const": [1.0],
        "theta_set": {"A": [[1.0], [-1.0]], "b": [3.0, 3.0]}})");
}

std::string diagnostic(const certias::json_util::json& doc)
{
    try {
        certias::problem_from_json(doc);
    } catch (const certias::InputError& e) {
        return e.what();
    }
    return "";
}

MpQP random_problem(std::mt19937_64& rng, int n, int m, int nt)
{
    std::normal_distribution<double> g(0.0, 1.0);
    MpQP p;
    p.H = oracle::random_spd(rng, n);
    p.C = MatrixXd::NullaryExpr(m, n, [&] { return g(rng); });
    p.f_lin = MatrixXd::NullaryExpr(n, nt, [&] { return g(rng); });
    p.f_const = VectorXd::NullaryExpr(n, [&] { return g(rng); });
    p.d_lin = MatrixXd::NullaryExpr(m, nt, [&] { return g(rng); });
    p.d_const = VectorXd::NullaryExpr(m, [&] { return 1.0 + std::abs(g(rng)); });
    p.theta_set = certias::Polyhedron::box(VectorXd::Constant(nt, -1.0), VectorXd::Constant(nt, 1.0));
    p.validate();
    return p;
}

}  // namespace

TEST(LoadProblem, ToyIsValid)
{
    const MpQP p = certias::load_problem(kToy);
    EXPECT_EQ(p.n_x(), 1);
    EXPECT_EQ(p.n_constraints(), 1);
    EXPECT_EQ(p.n_theta(), 1);
}

TEST(LoadProblem, DistinctDiagnostics)
{
    auto doc = toy_doc();
    doc["H"] = {{0.0}};
    EXPECT_EQ(diagnostic(doc), "H not positive definite");

    doc = toy_doc();
    doc["theta_set"] = {{"A", {{1.0}, {-1.0}}}, {"b", {-1.0, -1.0}}};
    EXPECT_EQ(diagnostic(doc), "parameter set empty");

    doc = toy_doc();
    doc["theta_set"] = {{"A", {{1.0}}}, {"b", {1.0}}};
    EXPECT_EQ(diagnostic(doc), "parameter set unbounded");

    doc = toy_doc();
    doc["H"] = {{1.0, 0.5}, {0.4, 1.0}};
    doc["C"] = {{1.0, 0.0}};
    doc["f_lin"] = {{1.0}, {0.0}};
    doc["f_const"] = {0.0, 0.0};
    EXPECT_EQ(diagnostic(doc), "H not symmetric");

    doc = toy_doc();
    doc.erase("C");
    EXPECT_NE(diagnostic(doc).find("missing field"), std::string::npos);

    doc = toy_doc();
    doc["d_const"] = {1.0, 2.0};
    EXPECT_FALSE(diagnostic(doc).empty());

    EXPECT_THROW(certias::load_problem("/nonexistent/problem.json"), certias::InputError);
}

TEST(SubproblemMaps, ToyEmptyWorkingSet)
{
    const MpQP p = certias::load_problem(kToy);
    const auto maps = certias::subproblem_maps(p, std::vector<int>{});
    ASSERT_FALSE(maps.singular);
    EXPECT_DOUBLE_EQ(maps.x_map.F(0, 0), -1.0);
    EXPECT_DOUBLE_EQ(maps.x_map.g(0), 0.0);
    EXPECT_DOUBLE_EQ(maps.mu_map.F(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(maps.mu_map.g(0), 1.0);
    EXPECT_EQ(maps.lambda_map.rows(), 0);
}

TEST(SubproblemMaps, ToyActiveConstraint)
{
    const MpQP p = certias::load_problem(kToy);
    const auto maps = certias::subproblem_maps(p, std::vector<int>{0});
    ASSERT_FALSE(maps.singular);
    EXPECT_NEAR(maps.x_map.F(0, 0), 0.0, 1e-15);
    EXPECT_NEAR(maps.x_map.g(0), 1.0, 1e-15);
    EXPECT_NEAR(maps.lambda_map.F(0, 0), -1.0, 1e-15);
    EXPECT_NEAR(maps.lambda_map.g(0), -1.0, 1e-15);
    EXPECT_EQ(maps.mu_map.F(0, 0), 0.0);
    EXPECT_EQ(maps.mu_map.g(0), 0.0);
}

TEST(SubproblemMaps, DuplicateRowsAreSingular)
{
    MpQP p;
    p.H = MatrixXd::Identity(2, 2);
    p.C = (MatrixXd(2, 2) << 1, 1, 1, 1).finished();
    p.f_lin = MatrixXd::Identity(2, 2);
    p.f_const = VectorXd::Zero(2);
    p.d_lin = MatrixXd::Zero(2, 2);
    p.d_const = VectorXd::Ones(2);
    p.theta_set = certias::Polyhedron::box(VectorXd::Constant(2, -1), VectorXd::Constant(2, 1));
    p.validate();
    EXPECT_TRUE(certias::subproblem_maps(p, std::vector<int>{0, 1}).singular);
    EXPECT_FALSE(certias::subproblem_maps(p, std::vector<int>{1}).singular);
    EXPECT_THROW(certias::subproblem_maps(p, std::vector<int>{0, 0}), certias::InputError);
    EXPECT_THROW(certias::subproblem_maps(p, std::vector<int>{2}), certias::InputError);
}

TEST(SubproblemMaps, RandomMatchesDenseKktSolve)
{
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> nd(1, 4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        const int n = nd(rng);
        const int m = n + 2;
        const int nt = 2;
        const MpQP p = random_problem(rng, n, m, nt);
        std::vector<int> all(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) all[static_cast<std::size_t>(i)] = i;
        std::shuffle(all.begin(), all.end(), rng);
        std::uniform_int_distribution<int> wd(0, n);
        const std::vector<int> W(all.begin(), all.begin() + wd(rng));
        const auto maps = certias::subproblem_maps(p, W);
        ASSERT_FALSE(maps.singular);

        MatrixXd CW(static_cast<Eigen::Index>(W.size()), n);
        for (std::size_t i = 0; i < W.size(); ++i) CW.row(static_cast<Eigen::Index>(i)) = p.C.row(W[i]);
        for (int s = 0; s < 100; ++s) {
            const VectorXd theta = (VectorXd(nt) << u(rng), u(rng)).finished();
            VectorXd dW(static_cast<Eigen::Index>(W.size()));
            for (std::size_t i = 0; i < W.size(); ++i) dW(static_cast<Eigen::Index>(i)) = p.d(theta)(W[i]);
            const auto [x, lambda] = oracle::kkt_solve(p.H, p.f(theta), CW, dW);
            EXPECT_LE((maps.x_map(theta) - x).cwiseAbs().maxCoeff(), 1e-8);
            if (!W.empty()) {
                EXPECT_LE((maps.lambda_map(theta) - lambda).cwiseAbs().maxCoeff(), 1e-8);
            }
        }
        // Slack identity and zero working rows as matrix identities.
        MatrixXd Fmu = p.d_lin - p.C * maps.x_map.F;
        VectorXd gmu = p.d_const - p.C * maps.x_map.g;
        for (int i : W) {
            EXPECT_LE(Fmu.row(i).cwiseAbs().maxCoeff(), 1e-8);
            EXPECT_LE(std::abs(gmu(i)), 1e-8);
            Fmu.row(i).setZero();
            gmu(i) = 0.0;
        }
        EXPECT_LE((Fmu - maps.mu_map.F).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_LE((gmu - maps.mu_map.g).cwiseAbs().maxCoeff(), 1e-10);

        // Affinity along a segment.
        const VectorXd t1 = (VectorXd(nt) << u(rng), u(rng)).finished();
        const VectorXd t2 = (VectorXd(nt) << u(rng), u(rng)).finished();
        const double a = 0.3;
        EXPECT_LE((maps.mu_map(a * t1 + (1 - a) * t2) - (a * maps.mu_map(t1) + (1 - a) * maps.mu_map(t2)))
                      .cwiseAbs()
                      .maxCoeff(),
                  1e-10);
    }
}

TEST(MapCache, ReturnsOneEntryPerWorkingSet)
{
    const MpQP p = certias::load_problem(kToy);
    certias::MapCache cache(p);
    const auto a = cache.get({0});
    const auto b = cache.get({0});
    EXPECT_EQ(a.get(), b.get());
    cache.get({});
    EXPECT_EQ(cache.size(), 2u);
}

TEST(ProblemDigest, ChangesWithData)
{
    MpQP p = certias::load_problem(kToy);
    const std::string d1 = certias::problem_digest(p);
    EXPECT_EQ(d1.size(), 16u);
    p.d_const(0) = 1.5;
    EXPECT_NE(d1, certias::problem_digest(p));
}

TEST(ProblemJson, RoundTrip)
{
    const MpQP p = certias::load_problem(std::string(CERTIAS_PROBLEM_DIR) + "/double_integrator.json");
    const MpQP q = certias::problem_from_json(certias::problem_to_json(p));
    EXPECT_EQ(certias::problem_digest(p), certias::problem_digest(q));
}
