#pragma once

#include <atomic>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "iddlab/common.hpp"
#include "iddlab/gridworld.hpp"
#include "iddlab/learners.hpp"

namespace iddlab {

/// Optional sweep axes; empty lists mean "use the base config value".
struct SweepAxes {
    std::vector<int> k_choices;
    std::vector<real> lambda_p;
    std::vector<real> lambda_s;
    std::vector<int> demo_pairs;
    std::vector<Algorithm> algorithms;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["k_choices"] = k_choices;
        j["lambda_p"] = lambda_p;
        j["lambda_s"] = lambda_s;
        j["demo_pairs"] = demo_pairs;
        auto algos = nlohmann::json::array();
        for (auto a : algorithms) algos.push_back(algorithm_name(a));
        j["algorithms"] = std::move(algos);
        return j;
    }

    static SweepAxes from_json(const nlohmann::json& j) {
        SweepAxes s;
        if (j.contains("k_choices")) s.k_choices = j.at("k_choices").get<std::vector<int>>();
        if (j.contains("lambda_p")) s.lambda_p = j.at("lambda_p").get<std::vector<real>>();
        if (j.contains("lambda_s")) s.lambda_s = j.at("lambda_s").get<std::vector<real>>();
        if (j.contains("demo_pairs")) s.demo_pairs = j.at("demo_pairs").get<std::vector<int>>();
        if (j.contains("algorithms"))
            for (const auto& name : j.at("algorithms"))
                s.algorithms.push_back(algorithm_from_name(name.get<std::string>()));
        return s;
    }
};

struct ExperimentConfig {
    GridSpec grid;
    TrainConfig train;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    int eval_rollouts = 50;
    real expert_temperature = 0.1;
    int demo_pairs = 2000;
    SweepAxes sweep;
    std::vector<int> curve_k_values = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
    int curve_samples = 10000;

    void validate() const {
        grid.validate();
        train.validate();
        if (seeds.empty()) throw validation_error("config.seeds: must be non-empty");
        if (eval_rollouts < 1) throw validation_error("config.eval_rollouts: must be >= 1");
        if (demo_pairs < 1) throw validation_error("config.demo_pairs: must be >= 1");
        if (expert_temperature <= 0.0)
            throw validation_error("config.expert_temperature: must be > 0");
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["grid"] = grid.to_json();
        j["train"] = train.to_json();
        j["seeds"] = seeds;
        j["eval_rollouts"] = eval_rollouts;
        j["expert_temperature"] = expert_temperature;
        j["demo_pairs"] = demo_pairs;
        j["sweep"] = sweep.to_json();
        j["curve_k_values"] = curve_k_values;
        j["curve_samples"] = curve_samples;
        return j;
    }

    static ExperimentConfig from_json(const nlohmann::json& j) {
        ExperimentConfig c;
        try {
            if (j.contains("grid")) c.grid = GridSpec::from_json(j.at("grid"));
            if (j.contains("train")) c.train = TrainConfig::from_json(j.at("train"));
            if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
            if (j.contains("eval_rollouts")) c.eval_rollouts = j.at("eval_rollouts").get<int>();
            if (j.contains("expert_temperature"))
                c.expert_temperature = j.at("expert_temperature").get<real>();
            if (j.contains("demo_pairs")) c.demo_pairs = j.at("demo_pairs").get<int>();
            if (j.contains("sweep")) c.sweep = SweepAxes::from_json(j.at("sweep"));
            if (j.contains("curve_k_values"))
                c.curve_k_values = j.at("curve_k_values").get<std::vector<int>>();
            if (j.contains("curve_samples")) c.curve_samples = j.at("curve_samples").get<int>();
        } catch (const nlohmann::json::exception& e) {
            throw validation_error(std::string("config: malformed json: ") + e.what());
        }
        c.validate();
        return c;
    }
};

/// One point of the sweep cross product (excluding algorithm and seed).
struct SweepCell {
    int k_choices = 1;
    std::optional<real> lambda_p;
    std::optional<real> lambda_s;
    std::optional<int> demo_pairs;

    std::string label() const {
        char buf[64];
        std::string out = "k=" + std::to_string(k_choices);
        if (lambda_p) {
            std::snprintf(buf, sizeof(buf), ",lp=%g", *lambda_p);
            out += buf;
        }
        if (lambda_s) {
            std::snprintf(buf, sizeof(buf), ",ls=%g", *lambda_s);
            out += buf;
        }
        if (demo_pairs) out += ",pairs=" + std::to_string(*demo_pairs);
        return out;
    }
};

inline std::vector<SweepCell> sweep_cells(const ExperimentConfig& config) {
    std::vector<int> ks = config.sweep.k_choices.empty()
                              ? std::vector<int>{config.grid.k_choices}
                              : config.sweep.k_choices;
    std::vector<SweepCell> cells;
    for (int k : ks) {
        SweepCell base;
        base.k_choices = k;
        std::vector<SweepCell> layer{base};
        if (!config.sweep.lambda_p.empty()) {
            std::vector<SweepCell> next;
            for (const auto& c : layer)
                for (real lp : config.sweep.lambda_p) {
                    SweepCell c2 = c;
                    c2.lambda_p = lp;
                    next.push_back(c2);
                }
            layer = std::move(next);
        }
        if (!config.sweep.lambda_s.empty()) {
            std::vector<SweepCell> next;
            for (const auto& c : layer)
                for (real ls : config.sweep.lambda_s) {
                    SweepCell c2 = c;
                    c2.lambda_s = ls;
                    next.push_back(c2);
                }
            layer = std::move(next);
        }
        if (!config.sweep.demo_pairs.empty()) {
            std::vector<SweepCell> next;
            for (const auto& c : layer)
                for (int p : config.sweep.demo_pairs) {
                    SweepCell c2 = c;
                    c2.demo_pairs = p;
                    next.push_back(c2);
                }
            layer = std::move(next);
        }
        cells.insert(cells.end(), layer.begin(), layer.end());
    }
    return cells;
}

struct RunOutput {
    TrainResult result;
    std::string cell;
    Algorithm algorithm = Algorithm::IDDM;
    std::uint64_t seed = 0;
};

/// Builds the environment for a cell, trains the expert, collects demos
/// and runs one training; fully deterministic in (config, algo, cell, seed).
inline RunOutput run_single(const ExperimentConfig& config, Algorithm algo, const SweepCell& cell,
                            std::uint64_t seed) {
    GridSpec g = config.grid;
    g.k_choices = cell.k_choices;
    Gridworld world(g);

    TabularPolicy expert = train_expert(world.mdp(), config.expert_temperature);
    int pairs = cell.demo_pairs.value_or(config.demo_pairs);
    Demonstration demos =
        collect_demos(world.mdp(), expert, pairs, algo == Algorithm::GAIL,
                      detail::derive_seed(seed, 17), g.max_steps, g.fingerprint());

    TrainConfig tc = config.train;
    tc.algorithm = algo;
    tc.seed = seed;
    if (cell.lambda_p) tc.lambda_p = *cell.lambda_p;
    if (cell.lambda_s) tc.lambda_s = *cell.lambda_s;

    RunOutput out;
    out.result = train(world.mdp(), g.max_steps, demos, tc, &expert, config.eval_rollouts);
    out.cell = cell.label();
    out.algorithm = algo;
    out.seed = seed;
    return out;
}

struct SummaryRow {
    std::string cell;
    std::string algorithm;
    real mean = 0.0;
    real std_dev = 0.0;
    int n_seeds = 0;
};

struct GapRow {
    std::string cell;
    std::optional<real> gail_minus_gaifo;
    std::optional<real> gail_minus_iddm;
};

struct SweepResult {
    std::vector<RunOutput> runs;  // deterministic task order
    std::vector<SummaryRow> summary;
    std::vector<GapRow> gaps;
};

/// Per (cell, algorithm): mean and population std of the per-seed
/// evaluation means; plus GAIL-vs-baseline gap columns when present.
inline void summarize(SweepResult& result, const std::vector<SweepCell>& cells,
                      const std::vector<Algorithm>& algos) {
    std::map<std::pair<std::string, std::string>, std::vector<real>> by_key;
    for (const auto& run : result.runs)
        by_key[{run.cell, algorithm_name(run.algorithm)}].push_back(run.result.record.eval_mean);

    for (const auto& cell : cells) {
        for (auto algo : algos) {
            auto it = by_key.find({cell.label(), algorithm_name(algo)});
            if (it == by_key.end()) continue;
            SummaryRow row;
            row.cell = cell.label();
            row.algorithm = algorithm_name(algo);
            row.mean = mean_of(it->second);
            row.std_dev = stddev_of(it->second);
            row.n_seeds = static_cast<int>(it->second.size());
            result.summary.push_back(row);
        }
        auto mean_for = [&](Algorithm a) -> std::optional<real> {
            auto it = by_key.find({cell.label(), algorithm_name(a)});
            if (it == by_key.end()) return std::nullopt;
            return mean_of(it->second);
        };
        auto gail = mean_for(Algorithm::GAIL);
        if (!gail) continue;
        GapRow gap;
        gap.cell = cell.label();
        if (auto g = mean_for(Algorithm::GAIfO)) gap.gail_minus_gaifo = *gail - *g;
        if (auto g = mean_for(Algorithm::IDDM)) gap.gail_minus_iddm = *gail - *g;
        if (gap.gail_minus_gaifo || gap.gail_minus_iddm) result.gaps.push_back(gap);
    }
}

/**
 * Runs the full cross product of cells x algorithms x seeds as
 * share-nothing parallel tasks and aggregates after a join barrier.
 * Results are deterministic regardless of the schedule.
 */
inline SweepResult run_sweep(const ExperimentConfig& config, int jobs) {
    config.validate();
    std::vector<SweepCell> cells = sweep_cells(config);
    std::vector<Algorithm> algos = config.sweep.algorithms.empty()
                                       ? std::vector<Algorithm>{config.train.algorithm}
                                       : config.sweep.algorithms;

    struct Task {
        SweepCell cell;
        Algorithm algo;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (const auto& cell : cells)
        for (auto algo : algos)
            for (auto seed : config.seeds) tasks.push_back({cell, algo, seed});

    SweepResult result;
    result.runs.resize(tasks.size());
    if (jobs < 1) jobs = 1;
    jobs = std::min<int>(jobs, static_cast<int>(tasks.size()));

    std::atomic<std::size_t> next{0};
    std::vector<std::string> failures(tasks.size());
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            try {
                result.runs[i] =
                    run_single(config, tasks[i].algo, tasks[i].cell, tasks[i].seed);
            } catch (const std::exception& e) {
                failures[i] = e.what();
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (const auto& f : failures)
        if (!f.empty()) throw error("sweep task failed: " + f);

    summarize(result, cells, algos);
    return result;
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
    std::string out = "cell,algorithm,mean,std,n_seeds\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%.17g,%.17g,%d\n", r.cell.c_str(),
                      r.algorithm.c_str(), r.mean, r.std_dev, r.n_seeds);
        out += buf;
    }
    return out;
}

inline std::string gaps_csv(const std::vector<GapRow>& rows) {
    std::string out = "cell,gail_minus_gaifo,gail_minus_iddm\n";
    char buf[256];
    for (const auto& r : rows) {
        std::string a = r.gail_minus_gaifo
                            ? (std::snprintf(buf, sizeof(buf), "%.17g", *r.gail_minus_gaifo), buf)
                            : std::string();
        std::string b = r.gail_minus_iddm
                            ? (std::snprintf(buf, sizeof(buf), "%.17g", *r.gail_minus_iddm), buf)
                            : std::string();
        out += r.cell + "," + a + "," + b + "\n";
    }
    return out;
}

}  // namespace iddlab
