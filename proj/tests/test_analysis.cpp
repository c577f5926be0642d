#include <gtest/gtest.h>

#include <random>
#include <string>

#include "certias/analysis.hpp"
#include "oracles.hpp"

using certias::CertificationResult;
using certias::CertifiedRegion;
using certias::ErrorModel;
using certias::Mode;
using certias::MpQP;
using certias::Polyhedron;
using certias::RegionStatus;
using certias::Tolerances;
using Eigen::VectorXd;

namespace {

MpQP load(const std::string& name) { return certias::load_problem(std::string(CERTIAS_PROBLEM_DIR) + "/" + name); }

/// -min_j mu_j after every slack check of a nominal run.
std::vector<double> run_slacks(const MpQP& p, const VectorXd& theta, const Tolerances& tol)
{
    const auto r = certias::run(p, theta, {}, tol);
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < r.sequence.size(); ++i) {
        const auto& s = r.sequence[i];
        if (s.mode != Mode::slack_check) continue;
        const auto maps = certias::subproblem_maps(p, s.working_set);
        out.push_back(-maps.mu_map(theta).minCoeff());
    }
    return out;
}

CertifiedRegion fake_region(RegionStatus status, int iterations)
{
    CertifiedRegion r;
    r.region = Polyhedron::box(VectorXd::Constant(1, 0.0), VectorXd::Constant(1, 1.0));
    r.status = status;
    r.iterations = iterations;
    return r;
}

}  // namespace

TEST(SlackProfile, ToyNominal)
{
    const MpQP p = load("toy.json");
    const auto prof = certias::slack_profile(p, certias::certify(p, Tolerances{}, ErrorModel::none()));
    ASSERT_EQ(prof.per_iteration.size(), 2u);
    EXPECT_EQ(prof.per_iteration[0].k, 1);
    EXPECT_NEAR(prof.per_iteration[0].worst_slack, 2.0, 1e-12);
    EXPECT_EQ(prof.per_iteration[1].k, 2);
    EXPECT_LE(prof.per_iteration[1].worst_slack, 1e-6 + 1e-12);
    EXPECT_EQ(prof.lp_failures, 0);
}

TEST(SlackProfile, SinglePointFollowsSolverRun)
{
    MpQP p = load("double_integrator.json");
    const VectorXd theta = (VectorXd(2) << 4.0, -1.5).finished();
    p.theta_set = Polyhedron::box(theta, theta);
    const auto prof = certias::slack_profile(p, certias::certify(p, Tolerances{}, ErrorModel::none()));
    const auto ref = run_slacks(p, theta, Tolerances{});
    ASSERT_EQ(prof.per_iteration.size(), ref.size());
    for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(prof.per_iteration[k].worst_slack, ref[k], 1e-9);
}

TEST(SlackProfile, BoundsSampledRunsOnMpc)
{
    const MpQP p = load("double_integrator.json");
    const auto res = certias::certify(p, Tolerances{}, ErrorModel::none());
    const auto prof = certias::slack_profile(p, res);
    ASSERT_EQ(static_cast<int>(prof.per_iteration.size()), res.worst_iterations());

    std::mt19937_64 rng(71);
    std::vector<double> sampled(prof.per_iteration.size(), -1e300);
    for (const auto& theta : oracle::sample_polytope(rng, p.theta_set.A(), p.theta_set.b(), 4000)) {
        auto s = run_slacks(p, theta, Tolerances{});
        for (std::size_t k = 0; k < sampled.size(); ++k) {
            const double v = s[std::min(k, s.size() - 1)];
            EXPECT_LE(v, prof.per_iteration[k].worst_slack + 1e-9);
            sampled[k] = std::max(sampled[k], v);
        }
    }
    // The LP maxima are attained at region vertices; dense sampling gets close.
    for (std::size_t k = 0; k < sampled.size(); ++k) {
        EXPECT_GE(sampled[k], prof.per_iteration[k].worst_slack - 0.05 * (1.0 + std::abs(sampled[k]))) << k;
    }
}

TEST(IterationCdf, Examples)
{
    const MpQP p = load("toy.json");
    const auto cdf = certias::iteration_cdf(certias::certify(p, Tolerances{}, ErrorModel::none()));
    ASSERT_EQ(cdf.size(), 2u);
    EXPECT_EQ(cdf[0].k, 1);
    EXPECT_DOUBLE_EQ(cdf[0].fraction, 0.5);
    EXPECT_DOUBLE_EQ(cdf[1].fraction, 1.0);

    CertificationResult stuck;
    stuck.regions = {fake_region(RegionStatus::iter_limit, 4), fake_region(RegionStatus::iter_limit, 4)};
    for (const auto& c : certias::iteration_cdf(stuck)) EXPECT_EQ(c.fraction, 0.0);

    CertificationResult three;
    three.regions = {fake_region(RegionStatus::optimal, 3)};
    const auto c3 = certias::iteration_cdf(three);
    ASSERT_EQ(c3.size(), 3u);
    EXPECT_EQ(c3[0].fraction, 0.0);
    EXPECT_EQ(c3[1].fraction, 0.0);
    EXPECT_EQ(c3[2].fraction, 1.0);

    EXPECT_THROW(certias::iteration_cdf(CertificationResult{}), certias::InputError);
}

TEST(IterationCdf, MonotoneAndReachesOneAtWorstCase)
{
    const MpQP p = load("double_integrator.json");
    const auto res = certias::certify(p, Tolerances{}, ErrorModel::none());
    const auto cdf = certias::iteration_cdf(res);
    for (std::size_t i = 1; i < cdf.size(); ++i) EXPECT_GE(cdf[i].fraction, cdf[i - 1].fraction);
    EXPECT_EQ(cdf.back().k, res.worst_iterations());
    EXPECT_DOUBLE_EQ(cdf.back().fraction, 1.0);
}

TEST(Sweep, ToyTable)
{
    const MpQP p = load("toy.json");
    const auto t = certias::sweep(p, {1e-6}, {0.1, 0.0}, Tolerances{});
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.rows[0].eps_bar, 0.0);
    EXPECT_EQ(t.rows[0].worst_iterations, 2);
    EXPECT_EQ(t.rows[0].region_count, 2);
    EXPECT_EQ(t.rows[1].eps_bar, 0.1);
    EXPECT_EQ(t.rows[1].worst_iterations, -1);
    EXPECT_GE(t.rows[1].region_count, 3);

    const auto big = certias::sweep(p, {1e-6}, {2.5}, Tolerances{});
    EXPECT_EQ(big.rows[0].worst_iterations, -1);
}

TEST(Sweep, FailedCellsAreAnnotated)
{
    const MpQP p = load("double_integrator.json");
    certias::CertifyOptions opts;
    opts.max_live_nodes = 1;
    const auto t = certias::sweep(p, {1e-6}, {0.0}, Tolerances{}, opts);
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_EQ(t.rows[0].worst_iterations, -2);
    EXPECT_FALSE(t.rows[0].note.empty());
    EXPECT_NE(certias::to_csv(t).find("FAIL"), std::string::npos);
    EXPECT_THROW(certias::sweep(p, {}, {0.0}, Tolerances{}), certias::InputError);
    EXPECT_THROW(certias::sweep(p, {0.0}, {0.0}, Tolerances{}), certias::InputError);
}

TEST(Sweep, MpcNominalColumnIsMonotone)
{
    const MpQP p = load("double_integrator.json");
    const auto t = certias::sweep(p, {1e-3, 1e-6, 1e-4}, {0.0}, Tolerances{});
    ASSERT_EQ(t.rows.size(), 3u);
    EXPECT_EQ(t.rows[0].eps_primal, 1e-6);
    for (std::size_t i = 1; i < t.rows.size(); ++i) {
        ASSERT_GE(t.rows[i].worst_iterations, 0);
        EXPECT_LE(t.rows[i].worst_iterations, t.rows[i - 1].worst_iterations);
    }
}

TEST(Csv, FixedHeaders)
{
    EXPECT_EQ(certias::to_csv(certias::SlackProfile{}), "k,worst_slack\n");
    EXPECT_EQ(certias::to_csv(std::vector<certias::CdfPoint>{}), "k,fraction\n");
    EXPECT_EQ(certias::to_csv(certias::SweepTable{}), "eps_primal,eps_bar,worst_iterations,region_count\n");

    certias::SweepTable t;
    t.rows.push_back({1e-6, 0.001, -1, 149, ""});
    t.rows.push_back({1e-4, 0.0, 5, 11, ""});
    EXPECT_EQ(certias::to_csv(t), "eps_primal,eps_bar,worst_iterations,region_count\n1e-06,0.001,INF,149\n1e-04,0,5,11\n");
    EXPECT_EQ(certias::format_number(0.1), "0.1");
    EXPECT_EQ(certias::format_number(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(Json, MirrorsCsv)
{
    certias::SweepTable t;
    t.rows.push_back({1e-6, 0.001, -1, 149, ""});
    const auto j = certias::to_json(t);
    EXPECT_EQ(j["metric"], "sweep");
    EXPECT_EQ(j["rows"][0]["worst_iterations"], "INF");
    EXPECT_EQ(j["rows"][0]["region_count"], 149);
}
