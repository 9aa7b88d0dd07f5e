#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "iddlab/generators.hpp"
#include "iddlab/info.hpp"
#include "iddlab/mine.hpp"

using namespace iddlab;

namespace {

// Samples (s,(s',a)) batches from an explicit joint occupancy.
struct JointSampler {
    const OccupancySet* occ;
    rng_t rng;

    JointSampler(const OccupancySet& o, std::uint64_t seed) : occ(&o), rng(seed) {}

    std::vector<ScorerInput> joint(int n) {
        std::vector<ScorerInput> out(n);
        for (int i = 0; i < n; ++i) {
            int idx = sample_index(occ->rho_sas, rng);
            int s2 = idx % occ->n_states;
            int rest = idx / occ->n_states;
            out[i] = {rest / occ->n_actions, rest % occ->n_actions, s2};
        }
        return out;
    }

    std::vector<ScorerInput> marginal(std::span<const ScorerInput> joint_batch) {
        std::vector<ScorerInput> out(joint_batch.begin(), joint_batch.end());
        for (auto& x : out) {
            std::size_t j = static_cast<std::size_t>(uniform01(rng) * out.size()) % out.size();
            x.s = joint_batch[j].s;
        }
        return out;
    }
};

real train_mine(MineEstimator& est, JointSampler& sampler, int updates, int batch, real lr) {
    real bound = 0.0;
    for (int i = 0; i < updates; ++i) {
        auto j = sampler.joint(batch);
        auto m = sampler.marginal(j);
        bound = est.update(j, m, lr);
    }
    return bound;
}

// Average bound over fresh batches after training, to smooth batch noise.
real settled_estimate(const MineEstimator& est, JointSampler& sampler, int batches, int batch) {
    real acc = 0.0;
    for (int i = 0; i < batches; ++i) {
        auto j = sampler.joint(batch);
        auto m = sampler.marginal(j);
        acc += est.estimate(j, m);
    }
    return acc / batches;
}

}  // namespace

TEST_CASE("dv estimate stays near zero for independent variables") {
    // uniform product joint: s independent of (s',a) by construction
    OccupancySet occ;
    occ.n_states = 2;
    occ.n_actions = 1;
    occ.rho_s = {0.5, 0.5};
    occ.rho_sa = {0.5, 0.5};
    occ.rho_ss = {0.25, 0.25, 0.25, 0.25};
    occ.rho_sas = {0.25, 0.25, 0.25, 0.25};

    rng_t init(3);
    MineEstimator est(ScorerKind::Tabular, 2, 1, OptimizerKind::SgdMomentum, {}, &init);
    JointSampler sampler(occ, 11);
    train_mine(est, sampler, 3000, 256, 0.02);
    real bound = settled_estimate(est, sampler, 50, 256);
    REQUIRE(bound <= 0.05);
    REQUIRE(est.ema_partition() > 0.0);
}

TEST_CASE("dv estimate recovers ln 2 on the correlated toggle") {
    // deterministic toggle with uniform start: I(s;(s',a)) = H(s) = ln 2
    auto mdp = toggle_mdp(0.9, 0.5);
    auto occ = derive_occupancies(mdp, TabularPolicy::uniform(2, 1));
    REQUIRE_THAT(exact_mutual_information(occ),
                 Catch::Matchers::WithinAbs(std::log(2.0), 1e-12));

    rng_t init(5);
    MineEstimator est(ScorerKind::Tabular, 2, 1, OptimizerKind::SgdMomentum, {}, &init);
    JointSampler sampler(occ, 13);
    train_mine(est, sampler, 5000, 256, 0.05);
    real bound = settled_estimate(est, sampler, 50, 256);
    REQUIRE_THAT(bound, Catch::Matchers::WithinAbs(std::log(2.0), 0.1 * std::log(2.0)));
}

TEST_CASE("dv bound does not exceed the exact mutual information by more than slack") {
    rng_t rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        int S = 2 + static_cast<int>(uniform01(rng) * 4);
        int A = 1 + static_cast<int>(uniform01(rng) * 3);
        auto mdp = random_mdp(S, A, 0.9, rng);
        auto policy = random_policy(S, A, rng);
        auto occ = derive_occupancies(mdp, policy);
        real exact = exact_mutual_information(occ);

        rng_t init(trial);
        MineEstimator est(ScorerKind::Tabular, S, A, OptimizerKind::SgdMomentum, {}, &init);
        JointSampler sampler(occ, 1000 + trial);
        train_mine(est, sampler, 2000, 256, 0.03);
        real bound = settled_estimate(est, sampler, 50, 256);
        REQUIRE(bound <= exact + 0.05);
    }
}

TEST_CASE("mine update rejects empty batches") {
    rng_t init(1);
    MineEstimator est(ScorerKind::Tabular, 2, 1, OptimizerKind::SgdMomentum, {}, &init);
    std::vector<ScorerInput> empty;
    std::vector<ScorerInput> one{{0, 0, 1}};
    REQUIRE_THROWS_AS(est.update(empty, one, 0.1), precondition_error);
}
