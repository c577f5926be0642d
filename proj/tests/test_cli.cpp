#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "certias/json_util.hpp"

using certias::json_util::json;

namespace {

const std::string kCli = CERTIAS_CLI;
const std::string kToy = std::string(CERTIAS_PROBLEM_DIR) + "/toy.json";
const std::string kMpc = std::string(CERTIAS_PROBLEM_DIR) + "/double_integrator.json";

std::string tmp(const std::string& name) { return ::testing::TempDir() + "certias_cli_" + name; }

int run(const std::string& args)
{
    const std::string cmd = kCli + " " + args + " 2>" + tmp("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST(Cli, CertifyAndValidateToy)
{
    const std::string part = tmp("toy_part.json");
    ASSERT_EQ(run("certify --problem " + kToy + " --eps-bar 0 --primal-tol 1e-6 --out " + part), 0);
    const json doc = json::parse(slurp(part));
    EXPECT_EQ(doc["regions"].size(), 2u);
    EXPECT_EQ(doc["settings"]["command"], "certify");

    const std::string rep = tmp("toy_report.json");
    ASSERT_EQ(run("validate --problem " + kToy + " --partition " + part + " --samples 1000 --seed 7 --out " + rep), 0);
    const json r = json::parse(slurp(rep));
    EXPECT_EQ(r["mismatches"].size(), 0u);
    EXPECT_EQ(r["passed"], true);
}

TEST(Cli, MissingProblemIsAnInputError)
{
    EXPECT_EQ(run("certify --problem " + tmp("missing.json")), 2);
    EXPECT_NE(slurp(tmp("stderr.txt")).find("cannot open"), std::string::npos);
    EXPECT_EQ(run("certify"), 2);
    EXPECT_EQ(run("frobnicate --problem " + kToy), 2);
    EXPECT_EQ(run("report --problem " + kToy + " --metric volume"), 2);
}

TEST(Cli, ValidationFailureExitsWithOne)
{
    // A nominal partition relabelled as if it covered errors of 0.1.
    const std::string part = tmp("relabelled.json");
    ASSERT_EQ(run("certify --problem " + kToy + " --out " + part), 0);
    json doc = json::parse(slurp(part));
    doc["settings"]["error_model"] = {{"kind", "hypercube"}, {"eps_bar", 0.1}};
    std::ofstream(part) << doc.dump();
    EXPECT_EQ(run("validate --problem " + kToy + " --partition " + part + " --samples 2000 --seed 3 --out " +
                  tmp("bad_report.json")),
              1);
}

TEST(Cli, PartitionForAnotherProblemIsRejected)
{
    const std::string part = tmp("toy_for_mpc.json");
    ASSERT_EQ(run("certify --problem " + kToy + " --out " + part), 0);
    EXPECT_EQ(run("validate --problem " + kMpc + " --partition " + part), 2);
}

TEST(Cli, OutputIndependentOfWorkerCount)
{
    const std::string a = tmp("w1.json"), b = tmp("w4.json");
    ASSERT_EQ(run("certify --problem " + kMpc + " --eps-bar 1e-4 --workers 1 --out " + a), 0);
    ASSERT_EQ(run("certify --problem " + kMpc + " --eps-bar 1e-4 --workers 4 --out " + b), 0);
    EXPECT_EQ(slurp(a), slurp(b));

    const std::string va = tmp("v1.json"), vb = tmp("v4.json");
    ASSERT_EQ(run("validate --problem " + kMpc + " --partition " + a + " --samples 500 --seed 5 --workers 1 --out " + va), 0);
    ASSERT_EQ(run("validate --problem " + kMpc + " --partition " + a + " --samples 500 --seed 5 --workers 4 --out " + vb), 0);
    EXPECT_EQ(slurp(va), slurp(vb));
}

TEST(Cli, ReportsAndSweep)
{
    const std::string part = tmp("report_part.json");
    ASSERT_EQ(run("certify --problem " + kToy + " --out " + part), 0);

    ASSERT_EQ(run("report --problem " + kToy + " --partition " + part + " --metric cdf --format csv --out " + tmp("cdf.csv")), 0);
    EXPECT_EQ(slurp(tmp("cdf.csv")), "k,fraction\n1,0.5\n2,1\n");

    ASSERT_EQ(run("report --problem " + kToy + " --partition " + part + " --metric slack --out " + tmp("slack.json")), 0);
    const json s = json::parse(slurp(tmp("slack.json")));
    EXPECT_EQ(s["metric"], "slack");
    EXPECT_EQ(s["rows"][0]["worst_slack"], 2.0);

    ASSERT_EQ(run("sweep --problem " + kToy + " --primal-tols 1e-6 --eps-bars 0,0.1 --format csv --out " + tmp("sweep.csv")), 0);
    EXPECT_TRUE(slurp(tmp("sweep.csv"))
                    .starts_with("eps_primal,eps_bar,worst_iterations,region_count\n1e-06,0,2,2\n1e-06,0.1,INF,"));
    EXPECT_EQ(run("sweep --problem " + kToy + " --primal-tols abc --eps-bars 0"), 2);
}
