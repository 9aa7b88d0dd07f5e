#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "iddlab/experiment.hpp"

using namespace iddlab;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.grid = open_grid(4, 4, 1);
    c.train.iterations = 5;
    c.train.rollout_steps = 200;
    c.train.batch = 32;
    c.train.policy_lr = 0.2;
    c.train.disc_lr = 0.1;
    c.train.mine_lr = 0.02;
    c.train.mi_pretrain_steps = 20;
    c.train.mi_update_steps = 2;
    c.seeds = {1, 2};
    c.eval_rollouts = 5;
    c.demo_pairs = 100;
    return c;
}

}  // namespace

TEST_CASE("experiment config json round-trips to an identical document") {
    ExperimentConfig c = small_config();
    c.sweep.k_choices = {1, 2};
    c.sweep.algorithms = {Algorithm::GAIL, Algorithm::GAIfO, Algorithm::IDDM};
    c.train.policy_lr = 0.25;

    auto j1 = c.to_json();
    auto restored = ExperimentConfig::from_json(j1);
    auto j2 = restored.to_json();
    REQUIRE(j1.dump() == j2.dump());

    auto restored2 = ExperimentConfig::from_json(j2);
    REQUIRE(restored2.to_json().dump() == j2.dump());
}

TEST_CASE("config validation reports offending fields") {
    ExperimentConfig c = small_config();
    c.seeds.clear();
    REQUIRE_THROWS_AS(c.validate(), validation_error);

    c = small_config();
    c.eval_rollouts = 0;
    REQUIRE_THROWS_AS(c.validate(), validation_error);

    nlohmann::json j = small_config().to_json();
    j["train"]["lr"] = -1.0;
    REQUIRE_THROWS_AS(ExperimentConfig::from_json(j), validation_error);
}

TEST_CASE("sweep cells form the full cross product without duplicates") {
    ExperimentConfig c = small_config();
    c.sweep.k_choices = {1, 2, 4, 11};
    c.sweep.lambda_s = {0.0, 0.1};
    auto cells = sweep_cells(c);
    REQUIRE(cells.size() == 8);
    std::set<std::string> labels;
    for (const auto& cell : cells) labels.insert(cell.label());
    REQUIRE(labels.size() == 8);
}

TEST_CASE("single-seed summaries have zero std") {
    std::vector<SweepCell> cells(1);
    cells[0].k_choices = 1;
    SweepResult result;
    RunOutput run;
    run.cell = cells[0].label();
    run.algorithm = Algorithm::GAIfO;
    run.seed = 1;
    run.result.record.eval_mean = 42.0;
    result.runs.push_back(run);
    summarize(result, cells, {Algorithm::GAIfO});
    REQUIRE(result.summary.size() == 1);
    REQUIRE(result.summary[0].mean == 42.0);
    REQUIRE(result.summary[0].std_dev == 0.0);
    REQUIRE(result.summary[0].n_seeds == 1);
}

TEST_CASE("gap rows appear when gail shares a cell with the baselines") {
    std::vector<SweepCell> cells(1);
    cells[0].k_choices = 2;
    SweepResult result;
    auto add = [&](Algorithm algo, real mean) {
        RunOutput run;
        run.cell = cells[0].label();
        run.algorithm = algo;
        run.seed = 1;
        run.result.record.eval_mean = mean;
        result.runs.push_back(run);
    };
    add(Algorithm::GAIL, 80.0);
    add(Algorithm::GAIfO, 50.0);
    add(Algorithm::IDDM, 65.0);
    summarize(result, cells, {Algorithm::GAIL, Algorithm::GAIfO, Algorithm::IDDM});
    REQUIRE(result.gaps.size() == 1);
    REQUIRE(result.gaps[0].gail_minus_gaifo);
    REQUIRE_THAT(*result.gaps[0].gail_minus_gaifo, Catch::Matchers::WithinAbs(30.0, 1e-12));
    REQUIRE_THAT(*result.gaps[0].gail_minus_iddm, Catch::Matchers::WithinAbs(15.0, 1e-12));

    auto csv = summary_csv(result.summary);
    REQUIRE(csv.rfind("cell,algorithm,mean,std,n_seeds\n", 0) == 0);
    REQUIRE(csv.find("k=2,GAIL") != std::string::npos);
}

TEST_CASE("parallel sweep equals the serial sweep") {
    ExperimentConfig c = small_config();
    c.sweep.k_choices = {1, 2};
    c.sweep.algorithms = {Algorithm::GAIfO, Algorithm::IDDM};
    auto serial = run_sweep(c, 1);
    auto parallel = run_sweep(c, 4);
    REQUIRE(serial.summary.size() == 4);
    REQUIRE(summary_csv(serial.summary) == summary_csv(parallel.summary));
    REQUIRE(gaps_csv(serial.gaps) == gaps_csv(parallel.gaps));
    REQUIRE(serial.runs.size() == parallel.runs.size());
    for (std::size_t i = 0; i < serial.runs.size(); ++i)
        REQUIRE(serial.runs[i].result.record.to_csv() == parallel.runs[i].result.record.to_csv());
}

TEST_CASE("run_single is reproducible byte for byte") {
    ExperimentConfig c = small_config();
    SweepCell cell;
    cell.k_choices = 1;
    auto a = run_single(c, Algorithm::GAIfO, cell, 7);
    auto b = run_single(c, Algorithm::GAIfO, cell, 7);
    REQUIRE(a.result.record.to_csv() == b.result.record.to_csv());
    REQUIRE(a.result.policy.to_json().dump() == b.result.policy.to_json().dump());
}
