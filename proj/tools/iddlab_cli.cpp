// Command-line harness: build gridworlds, train experts, collect
// demonstrations, run imitation learners and sweeps, verify the
// divergence identities, and emit machine-readable results.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "iddlab/experiment.hpp"
#include "iddlab/gridworld.hpp"
#include "iddlab/learners.hpp"
#include "iddlab/theorems.hpp"
#include "iddlab/verify.hpp"

namespace fs = std::filesystem;
using namespace iddlab;

namespace {

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw validation_error("config '" + path + "': " + e.what());
    }
    return ExperimentConfig::from_json(j);
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error("cannot write " + path.string());
    out << content;
}

std::string eval_json(const RunRecord& record) {
    nlohmann::json j;
    j["mean"] = record.eval_mean;
    j["std"] = record.eval_std;
    return j.dump(2) + "\n";
}

std::string sanitize(const std::string& label) {
    std::string out = label;
    for (char& c : out)
        if (c == ',' || c == '=' || c == '/') c = '_';
    return out;
}

int cmd_verify(const ExperimentConfig& config, std::uint64_t seed) {
    auto reports = verify_all(seed, config.grid);
    bool all_passed = true;
    for (const auto& r : reports) {
        std::cout << r.to_json().dump() << "\n";
        all_passed = all_passed && r.passed;
    }
    return all_passed ? 0 : 2;
}

int cmd_expert(const ExperimentConfig& config, const fs::path& out_dir) {
    Gridworld world(config.grid);
    auto expert = train_expert(world.mdp(), config.expert_temperature);
    write_file(out_dir / "mdp.json", world.mdp().to_json().dump(2) + "\n");
    write_file(out_dir / "expert.json", expert.to_json().dump(2) + "\n");
    std::cerr << "wrote " << (out_dir / "expert.json").string() << "\n";
    return 0;
}

int cmd_demos(const ExperimentConfig& config, const fs::path& out_dir, std::uint64_t seed,
              const std::optional<std::string>& algo_name) {
    Gridworld world(config.grid);
    auto expert = train_expert(world.mdp(), config.expert_temperature);
    bool with_actions =
        algo_name && algorithm_from_name(*algo_name) == Algorithm::GAIL;
    auto demos = collect_demos(world.mdp(), expert, config.demo_pairs, with_actions, seed,
                               config.grid.max_steps, config.grid.fingerprint());
    write_file(out_dir / "demos.jsonl", demos.to_jsonl());
    std::cerr << "wrote " << (out_dir / "demos.jsonl").string() << " (" << demos.pair_count
              << " pairs)\n";
    return 0;
}

int cmd_run(const ExperimentConfig& config, const fs::path& out_dir, Algorithm algo,
            std::uint64_t seed) {
    SweepCell cell;
    cell.k_choices = config.grid.k_choices;
    RunOutput out = run_single(config, algo, cell, seed);
    write_file(out_dir / "run.csv", out.result.record.to_csv());
    write_file(out_dir / "policy.json", out.result.policy.to_json().dump(2) + "\n");
    write_file(out_dir / "eval.json", eval_json(out.result.record));
    std::cerr << algorithm_name(algo) << " seed " << seed
              << ": eval mean " << out.result.record.eval_mean << " std "
              << out.result.record.eval_std << "\n";
    return 0;
}

int cmd_sweep(const ExperimentConfig& config, const fs::path& out_dir, int jobs) {
    SweepResult result = run_sweep(config, jobs);
    write_file(out_dir / "summary.csv", summary_csv(result.summary));
    write_file(out_dir / "gaps.csv", gaps_csv(result.gaps));
    for (const auto& run : result.runs) {
        fs::path p = out_dir / "runs" /
                     (sanitize(run.cell) + "_" + algorithm_name(run.algorithm) + "_seed" +
                      std::to_string(run.seed) + ".csv");
        write_file(p, run.result.record.to_csv());
    }
    std::cerr << "wrote " << (out_dir / "summary.csv").string() << " (" << result.summary.size()
              << " rows)\n";
    return 0;
}

int cmd_curve(const ExperimentConfig& config, const fs::path& out_dir, std::uint64_t seed) {
    auto curve = approx_idd_curve(config.curve_k_values, config.curve_samples, seed);
    std::string csv = "k,estimate,stderr\n";
    char buf[128];
    for (const auto& p : curve) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", p.k, p.estimate, p.std_error);
        csv += buf;
        std::cout << buf;
    }
    write_file(out_dir / "curve.csv", csv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tabular imitation-learning laboratory"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed_override;
    int jobs = static_cast<int>(std::thread::hardware_concurrency());
    std::optional<std::string> algo_name;

    app.add_option("--config", config_path, "JSON experiment config")->required();
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed_override, "seed override");
    app.add_option("--jobs", jobs, "parallel sweep tasks");
    app.add_option("--algo", algo_name, "algorithm: GAIL, GAIfO, GAIfO-s, BCO, IDDM");

    auto* verify = app.add_subcommand("verify", "run the identity certificates");
    auto* expert = app.add_subcommand("expert", "train and save the expert policy");
    auto* demos = app.add_subcommand("demos", "collect expert demonstrations");
    auto* run = app.add_subcommand("run", "single training run");
    auto* sweep = app.add_subcommand("sweep", "cross-product sweep over cells x algorithms x seeds");
    auto* curve = app.add_subcommand("curve", "equivalent-choice disagreement growth curve");

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig config = load_config(config_path);
        if (seed_override) {
            config.train.seed = *seed_override;
            config.seeds = {*seed_override};
        }
        std::uint64_t seed = seed_override.value_or(config.train.seed);
        fs::path out(out_dir);

        if (verify->parsed()) return cmd_verify(config, seed);
        if (expert->parsed()) return cmd_expert(config, out);
        if (demos->parsed()) return cmd_demos(config, out, seed, algo_name);
        if (run->parsed()) {
            Algorithm algo = algo_name ? algorithm_from_name(*algo_name)
                                       : config.train.algorithm;
            return cmd_run(config, out, algo, seed);
        }
        if (sweep->parsed()) return cmd_sweep(config, out, jobs);
        if (curve->parsed()) return cmd_curve(config, out, seed);
    } catch (const validation_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
