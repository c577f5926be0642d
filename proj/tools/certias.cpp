// certias: certify, validate, sweep and report on parametric QP problems.
//
// Exit codes: 0 success, 1 validation mismatches, 2 input errors, 3 internal failures.

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "certias/certias.hpp"

namespace {

using certias::json;

struct RunConfig {
    std::string problem;
    std::string out = "-";
    std::string partition;
    double primal_tol = 1e-6;
    double dual_tol = -1.0;  // negative: follow the primal tolerance
    int iter_limit = 15;
    double eps_bar = 0.0;
    std::string error_model;
    double rel_bound = -1.0;
    int samples = 10000;
    std::uint64_t seed = 0;
    int workers = 0;  // 0: available parallelism
    std::string metric = "slack";
    std::string format = "json";
    std::string primal_tols = "1e-6,1e-4,1e-3";
    std::string eps_bars = "0,1e-4,1e-3";
    std::size_t max_live = 100000;
};

std::vector<double> parse_list(const std::string& text, const char* what)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw certias::InputError(std::string("--") + what + ": cannot parse \"" + item + "\"");
        }
    }
    if (out.empty()) throw certias::InputError(std::string("--") + what + ": empty list");
    return out;
}

certias::Tolerances tolerances(const RunConfig& c)
{
    certias::Tolerances t;
    t.eps_primal = c.primal_tol;
    t.eps_dual = c.dual_tol < 0.0 ? c.primal_tol : c.dual_tol;
    t.iter_limit = c.iter_limit;
    t.validate();
    return t;
}

certias::ErrorModel error_model(const RunConfig& c)
{
    if (!c.error_model.empty()) return certias::error_model_from_json(certias::read_json_file(c.error_model, "error model"));
    if (c.rel_bound >= 0.0) return certias::ErrorModel::relative(c.rel_bound);
    if (c.eps_bar < 0.0) throw certias::InputError("--eps-bar must be nonnegative");
    return certias::ErrorModel::hypercube(c.eps_bar);
}

int workers(const RunConfig& c)
{
    if (c.workers > 0) return c.workers;
    return std::max(1u, std::thread::hardware_concurrency());
}

void emit(const RunConfig& c, const std::string& text)
{
    if (c.out == "-") std::cout << text;
    else certias::write_text_file(c.out, text);
}

/// Settings echoed into documents. The worker count is left out on purpose:
/// documents must not depend on it.
json echo(const RunConfig& c, const std::string& command)
{
    json j = {{"command", command}, {"problem", c.problem}};
    if (command == "validate") {
        j["partition"] = c.partition;
        j["samples"] = c.samples;
        j["seed"] = c.seed;
    }
    return j;
}

certias::CertificationResult load_partition(const RunConfig& c, const certias::MpQP& prob)
{
    if (c.partition.empty()) throw certias::InputError("--partition is required");
    auto res = certias::partition_from_json(certias::read_json_file(c.partition, "partition"));
    if (res.problem_digest != certias::problem_digest(prob)) {
        throw certias::InputError("partition was certified for a different problem (digest mismatch)");
    }
    return res;
}

int cmd_certify(const RunConfig& c)
{
    const certias::MpQP prob = certias::load_problem(c.problem);
    certias::CertifyOptions opts;
    opts.workers = workers(c);
    opts.max_live_nodes = c.max_live;
    spdlog::info("certifying {} with {} worker(s)", c.problem, opts.workers);
    const auto res = certias::certify(prob, tolerances(c), error_model(c), opts);
    spdlog::info("{} regions, worst case {}", res.regions.size(), certias::worst_to_string(res.worst_iterations()));
    emit(c, certias::dump_document(certias::partition_to_json(res, echo(c, "certify"))));
    return 0;
}

int cmd_validate(const RunConfig& c)
{
    const certias::MpQP prob = certias::load_problem(c.problem);
    const auto res = load_partition(c, prob);
    certias::ValidationOptions opts;
    opts.workers = workers(c);
    const auto rep = certias::validate_conformance(prob, res, c.samples, c.seed, opts);
    spdlog::info("{} samples: {} checked, {} boundary skips, {} mismatches, {} coverage gaps", rep.samples_total,
                 rep.samples_checked, rep.samples_skipped_boundary, rep.mismatches.size(), rep.coverage_gaps.size());
    emit(c, certias::dump_document(certias::validation_to_json(rep, echo(c, "validate"))));
    return rep.passed() ? 0 : 1;
}

std::string render(const RunConfig& c, const json& j, const std::string& csv)
{
    if (c.format == "csv") return csv;
    json doc = j;
    doc["settings"] = echo(c, "report");
    return certias::dump_document(doc);
}

int cmd_sweep(const RunConfig& c)
{
    const certias::MpQP prob = certias::load_problem(c.problem);
    certias::CertifyOptions opts;
    opts.workers = workers(c);
    opts.max_live_nodes = c.max_live;
    const auto table = certias::sweep(prob, parse_list(c.primal_tols, "primal-tols"), parse_list(c.eps_bars, "eps-bars"),
                                      tolerances(c), opts);
    emit(c, render(c, certias::to_json(table), certias::to_csv(table)));
    return 0;
}

int cmd_report(const RunConfig& c)
{
    const certias::MpQP prob = certias::load_problem(c.problem);
    if (c.metric == "sweep") return cmd_sweep(c);
    const auto res = load_partition(c, prob);
    if (c.metric == "slack") {
        const auto p = certias::slack_profile(prob, res);
        if (p.lp_failures > 0) spdlog::warn("{} slack LPs failed and were excluded", p.lp_failures);
        emit(c, render(c, certias::to_json(p), certias::to_csv(p)));
    } else if (c.metric == "cdf") {
        const auto cdf = certias::iteration_cdf(res);
        emit(c, render(c, certias::to_json(cdf), certias::to_csv(cdf)));
    } else {
        throw certias::InputError("unknown metric \"" + c.metric + "\"");
    }
    return 0;
}

void configure_logging()
{
    auto logger = spdlog::stderr_color_mt("certias");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("CERTIAS_LOG")) {
        const std::string level = env;
        if (level == "error") spdlog::set_level(spdlog::level::err);
        else if (level == "warn") spdlog::set_level(spdlog::level::warn);
        else if (level == "info") spdlog::set_level(spdlog::level::info);
        else if (level == "debug") spdlog::set_level(spdlog::level::debug);
        else spdlog::warn("ignoring unknown CERTIAS_LOG level \"{}\"", level);
    }
}

}  // namespace

int main(int argc, char** argv)
{
    configure_logging();
    RunConfig cfg;
    CLI::App app{"Iteration-complexity certification of a dual active-set QP solver"};
    app.require_subcommand(1);

    auto common = [&cfg](CLI::App* sub) {
        sub->add_option("--problem", cfg.problem, "problem document (JSON)")->required();
        sub->add_option("--out", cfg.out, "output path, '-' for stdout");
        sub->add_option("--primal-tol", cfg.primal_tol, "primal feasibility tolerance");
        sub->add_option("--dual-tol", cfg.dual_tol, "dual feasibility tolerance (default: primal)");
        sub->add_option("--iter-limit", cfg.iter_limit, "iteration limit");
        sub->add_option("--workers", cfg.workers, "worker threads (default: available parallelism)");
        sub->add_option("--max-live", cfg.max_live, "cap on live search nodes");
    };
    auto models = [&cfg](CLI::App* sub) {
        sub->add_option("--eps-bar", cfg.eps_bar, "hypercube error bound");
        sub->add_option("--error-model", cfg.error_model, "error model document (JSON)");
        sub->add_option("--rel-bound", cfg.rel_bound, "relative error bound");
    };

    auto* certify = app.add_subcommand("certify", "certify the solver over the parameter set");
    common(certify);
    models(certify);

    auto* validate = app.add_subcommand("validate", "Monte-Carlo conformance check of a partition");
    common(validate);
    validate->add_option("--partition", cfg.partition, "partition document")->required();
    validate->add_option("--samples", cfg.samples, "number of parameter samples");
    validate->add_option("--seed", cfg.seed, "random seed");

    auto* sweep = app.add_subcommand("sweep", "worst-case iterations over tolerance/error grids");
    common(sweep);
    sweep->add_option("--primal-tols", cfg.primal_tols, "comma-separated primal tolerances");
    sweep->add_option("--eps-bars", cfg.eps_bars, "comma-separated error bounds");
    sweep->add_option("--format", cfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

    auto* report = app.add_subcommand("report", "slack profile, iteration CDF or sweep table");
    common(report);
    report->add_option("--partition", cfg.partition, "partition document");
    report->add_option("--metric", cfg.metric, "slack, cdf or sweep")->check(CLI::IsMember({"slack", "cdf", "sweep"}));
    report->add_option("--primal-tols", cfg.primal_tols, "comma-separated primal tolerances (sweep)");
    report->add_option("--eps-bars", cfg.eps_bars, "comma-separated error bounds (sweep)");
    report->add_option("--format", cfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (certify->parsed()) return cmd_certify(cfg);
        if (validate->parsed()) return cmd_validate(cfg);
        if (sweep->parsed()) return cmd_sweep(cfg);
        if (report->parsed()) return cmd_report(cfg);
    } catch (const certias::InputError& e) {
        spdlog::error("{}", e.what());
        return 2;
    } catch (const std::exception& e) {
        spdlog::error("internal failure: {}", e.what());
        return 3;
    }
    return 3;
}
