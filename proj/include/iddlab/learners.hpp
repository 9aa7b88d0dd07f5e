#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "iddlab/common.hpp"
#include "iddlab/gridworld.hpp"
#include "iddlab/info.hpp"
#include "iddlab/mdp.hpp"
#include "iddlab/mine.hpp"
#include "iddlab/occupancy.hpp"
#include "iddlab/scorer.hpp"

namespace iddlab {

enum class Algorithm { GAIL, GAIfO, GAIfO_s, BCO, IDDM };

inline std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::GAIL: return "GAIL";
        case Algorithm::GAIfO: return "GAIfO";
        case Algorithm::GAIfO_s: return "GAIfO-s";
        case Algorithm::BCO: return "BCO";
        default: return "IDDM";
    }
}

inline Algorithm algorithm_from_name(const std::string& name) {
    if (name == "GAIL") return Algorithm::GAIL;
    if (name == "GAIfO") return Algorithm::GAIfO;
    if (name == "GAIfO-s") return Algorithm::GAIfO_s;
    if (name == "BCO") return Algorithm::BCO;
    if (name == "IDDM") return Algorithm::IDDM;
    throw validation_error("unknown algorithm: " + name);
}

/// Discriminator input signature used by each adversarial learner.
inline Signature discriminator_signature(Algorithm a) {
    switch (a) {
        case Algorithm::GAIL: return Signature::StateAction;
        case Algorithm::GAIfO_s: return Signature::State;
        default: return Signature::StateState;
    }
}

struct TrainConfig {
    Algorithm algorithm = Algorithm::IDDM;
    real lambda_p = 0.01;
    real lambda_s = 0.1;
    real lr = 3e-4;
    int batch = 512;
    int iterations = 200;
    int rollout_steps = 2048;
    int mi_pretrain_steps = 10000;
    int mi_update_steps = 50;
    std::uint64_t seed = 1;
    Divergence diagnostic_divergence = Divergence::KL;

    std::optional<real> policy_lr;  // default to lr when unset
    std::optional<real> disc_lr;
    std::optional<real> mine_lr;
    real disc_l2 = 1e-4;
    ScorerKind scorer = ScorerKind::Tabular;
    std::vector<int> mlp_hidden = {64, 64};
    OptimizerKind optimizer = OptimizerKind::SgdMomentum;
    bool normalize_advantages = false;  // scale advantages by their batch std
    real bco_smoothing = 1.0;
    int bco_bc_steps = 25;

    real effective_policy_lr() const { return policy_lr.value_or(lr); }
    real effective_disc_lr() const { return disc_lr.value_or(lr); }
    real effective_mine_lr() const { return mine_lr.value_or(lr); }

    void validate() const {
        if (lambda_p < 0.0 || lambda_s < 0.0)
            throw validation_error("train.lambda_p/lambda_s: must be >= 0");
        if (lr <= 0.0) throw validation_error("train.lr: must be > 0");
        if (batch < 1) throw validation_error("train.batch: must be >= 1");
        if (iterations < 1) throw validation_error("train.iterations: must be >= 1");
        if (rollout_steps < 1) throw validation_error("train.rollout_steps: must be >= 1");
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["algorithm"] = algorithm_name(algorithm);
        j["lambda_p"] = lambda_p;
        j["lambda_s"] = lambda_s;
        j["lr"] = lr;
        j["batch"] = batch;
        j["iterations"] = iterations;
        j["rollout_steps"] = rollout_steps;
        j["mi_pretrain_steps"] = mi_pretrain_steps;
        j["mi_update_steps"] = mi_update_steps;
        j["seed"] = seed;
        j["divergence"] = diagnostic_divergence == Divergence::KL ? "KL" : "JS";
        if (policy_lr) j["policy_lr"] = *policy_lr;
        if (disc_lr) j["disc_lr"] = *disc_lr;
        if (mine_lr) j["mine_lr"] = *mine_lr;
        j["disc_l2"] = disc_l2;
        j["scorer"] = scorer == ScorerKind::Tabular ? "tabular" : "mlp";
        j["mlp_hidden"] = mlp_hidden;
        j["optimizer"] = optimizer == OptimizerKind::SgdMomentum ? "sgd" : "adam";
        j["normalize_advantages"] = normalize_advantages;
        j["bco_smoothing"] = bco_smoothing;
        j["bco_bc_steps"] = bco_bc_steps;
        return j;
    }

    static TrainConfig from_json(const nlohmann::json& j) {
        TrainConfig c;
        try {
            if (j.contains("algorithm")) c.algorithm = algorithm_from_name(j.at("algorithm"));
            if (j.contains("lambda_p")) c.lambda_p = j.at("lambda_p").get<real>();
            if (j.contains("lambda_s")) c.lambda_s = j.at("lambda_s").get<real>();
            if (j.contains("lr")) c.lr = j.at("lr").get<real>();
            if (j.contains("batch")) c.batch = j.at("batch").get<int>();
            if (j.contains("iterations")) c.iterations = j.at("iterations").get<int>();
            if (j.contains("rollout_steps")) c.rollout_steps = j.at("rollout_steps").get<int>();
            if (j.contains("mi_pretrain_steps"))
                c.mi_pretrain_steps = j.at("mi_pretrain_steps").get<int>();
            if (j.contains("mi_update_steps"))
                c.mi_update_steps = j.at("mi_update_steps").get<int>();
            if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
            if (j.contains("divergence"))
                c.diagnostic_divergence =
                    j.at("divergence").get<std::string>() == "JS" ? Divergence::JS : Divergence::KL;
            if (j.contains("policy_lr")) c.policy_lr = j.at("policy_lr").get<real>();
            if (j.contains("disc_lr")) c.disc_lr = j.at("disc_lr").get<real>();
            if (j.contains("mine_lr")) c.mine_lr = j.at("mine_lr").get<real>();
            if (j.contains("disc_l2")) c.disc_l2 = j.at("disc_l2").get<real>();
            if (j.contains("scorer"))
                c.scorer = j.at("scorer").get<std::string>() == "mlp" ? ScorerKind::Mlp
                                                                      : ScorerKind::Tabular;
            if (j.contains("mlp_hidden")) c.mlp_hidden = j.at("mlp_hidden").get<std::vector<int>>();
            if (j.contains("optimizer"))
                c.optimizer = j.at("optimizer").get<std::string>() == "adam"
                                  ? OptimizerKind::Adam
                                  : OptimizerKind::SgdMomentum;
            if (j.contains("normalize_advantages"))
                c.normalize_advantages = j.at("normalize_advantages").get<bool>();
            if (j.contains("bco_smoothing")) c.bco_smoothing = j.at("bco_smoothing").get<real>();
            if (j.contains("bco_bc_steps")) c.bco_bc_steps = j.at("bco_bc_steps").get<int>();
        } catch (const nlohmann::json::exception& e) {
            throw validation_error(std::string("train config: malformed json: ") + e.what());
        }
        c.validate();
        return c;
    }
};

struct RunRow {
    int iter;
    real mean_return;
    real disc_loss;
    real mi_estimate;
    real policy_entropy;
    real diag_kl_ss;
    real diag_kl_sa;
    real diag_idd;
};

struct RunRecord {
    std::vector<RunRow> rows;
    real eval_mean = 0.0;
    real eval_std = 0.0;
    long label_warnings = 0;  // BCO: expert transitions never seen in rollouts

    static std::string csv_header() {
        return "iter,mean_return,disc_loss,mi_estimate,policy_entropy,diag_kl_ss,diag_kl_sa,"
               "diag_idd";
    }

    std::string to_csv() const {
        std::string out = csv_header() + "\n";
        char buf[512];
        for (const auto& r : rows) {
            std::snprintf(buf, sizeof(buf),
                          "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.iter,
                          r.mean_return, r.disc_loss, r.mi_estimate, r.policy_entropy,
                          r.diag_kl_ss, r.diag_kl_sa, r.diag_idd);
            out += buf;
        }
        return out;
    }
};

struct RolloutStep {
    int s;
    int a;
    int s_next;
    real env_reward;
    real reward;  // composed imitation reward, filled before the policy step
};

struct Rollout {
    std::vector<RolloutStep> steps;
    std::vector<std::pair<std::size_t, std::size_t>> episodes;  // [begin, end)
    std::vector<std::uint8_t> completed;                        // episode reached done

    /// Mean undiscounted env return over completed episodes (all episodes
    /// when none completed within the buffer).
    real mean_env_return() const {
        real sum = 0.0;
        int n = 0;
        bool any_completed = std::find(completed.begin(), completed.end(), 1) != completed.end();
        for (std::size_t e = 0; e < episodes.size(); ++e) {
            if (any_completed && !completed[e]) continue;
            real ret = 0.0;
            for (std::size_t i = episodes[e].first; i < episodes[e].second; ++i)
                ret += steps[i].env_reward;
            sum += ret;
            ++n;
        }
        return n > 0 ? sum / n : 0.0;
    }
};

/// Rolls episodes under the policy until n_steps transitions are stored.
/// The final episode may be cut by the buffer boundary (left incomplete).
/// With pad_to_horizon set, episodes that terminate early continue with
/// absorbing self-transitions up to max_steps, mirroring the occupancy
/// convention that terminal states keep accumulating discounted mass;
/// without it a strictly positive imitation reward would teach policies
/// to avoid finishing (ending the episode ends the reward stream).
inline Rollout collect_rollout(const TabularMdp& mdp, const TabularPolicy& policy, int max_steps,
                               int n_steps, Simulator& sim, bool pad_to_horizon = false) {
    Rollout out;
    out.steps.reserve(n_steps);
    while (static_cast<int>(out.steps.size()) < n_steps) {
        std::size_t begin = out.steps.size();
        int s = sim.reset();
        bool done = false;
        int length = 0;
        while (!done && static_cast<int>(out.steps.size()) < n_steps) {
            int a = policy.sample(s, sim.rng());
            StepResult r = sim.step(a);
            out.steps.push_back({s, a, r.next_state, r.reward, 0.0});
            ++length;
            s = r.next_state;
            done = r.done;
        }
        if (pad_to_horizon && done && mdp.terminal(s)) {
            while (length < max_steps && static_cast<int>(out.steps.size()) < n_steps) {
                int a = policy.sample(s, sim.rng());
                real r = mdp.has_reward() ? mdp.reward(s, a) : 0.0;
                out.steps.push_back({s, a, s, r, 0.0});
                ++length;
            }
        }
        out.episodes.emplace_back(begin, out.steps.size());
        out.completed.push_back(done ? 1 : 0);
    }
    return out;
}

/**
 * One ascent step on the logistic objective
 * E_agent[log D] + E_expert[log(1-D)], D = sigmoid(scorer), with an L2
 * weight penalty. Returns the objective value before the step.
 */
inline real discriminator_update(Scorer& disc, Optimizer& opt,
                                 std::span<const ScorerInput> agent_batch,
                                 std::span<const ScorerInput> expert_batch, real lr, real l2) {
    if (agent_batch.empty() || expert_batch.empty())
        throw precondition_error("discriminator_update: empty batch");
    std::vector<real> grad(disc.n_params(), 0.0);
    real objective = 0.0;
    const real inv_a = 1.0 / static_cast<real>(agent_batch.size());
    for (const auto& x : agent_batch) {
        real f = disc.value(x);
        real d = sigmoid(f);
        objective += inv_a * std::log(std::max(d, 1e-300));
        disc.value_accumulate_grad(x, inv_a * (1.0 - d), grad);
    }
    const real inv_e = 1.0 / static_cast<real>(expert_batch.size());
    for (const auto& x : expert_batch) {
        real f = disc.value(x);
        real d = sigmoid(f);
        objective += inv_e * std::log(std::max(1.0 - d, 1e-300));
        disc.value_accumulate_grad(x, -inv_e * d, grad);
    }
    if (l2 > 0.0) {
        const auto& p = disc.params();
        for (std::size_t i = 0; i < p.size(); ++i) grad[i] -= 2.0 * l2 * p[i];
    }
    opt.step(disc.params(), grad, lr);
    return objective;
}

/**
 * Per-step imitation reward: -log D on the discriminator's signature,
 * plus the entropy bonus lambda_p * (-log pi(a|s)) and, for IDDM, the
 * MINE score lambda_s * T(s,(s',a)).
 */
inline real compose_reward(const ScorerInput& tr, const Scorer& disc, const MineEstimator* mine,
                           const TabularPolicy& policy, real lambda_p, real lambda_s) {
    real r = softplus(-disc.value(tr));  // -log sigmoid(f)
    if (lambda_p > 0.0) r += lambda_p * (-std::log(policy.prob(tr.s, tr.a)));
    if (lambda_s > 0.0 && mine) r += lambda_s * mine->scorer().value(tr);
    return r;
}

/**
 * Score-function policy gradient of the discounted composed return,
 * averaged per episode: sum_t gamma^t grad log pi(a_t|s_t) * A_t with
 * A_t the return-to-go minus an empirical per-state value baseline.
 * The baseline for a step pools returns from the other episodes only,
 * which keeps it independent of the step's action (same-episode returns
 * correlate with it and would bias the estimator).
 */
inline std::vector<real> policy_gradient(const TabularPolicy& policy, const Rollout& rollout,
                                         real gamma, bool normalize_advantages = false) {
    if (rollout.steps.empty()) throw precondition_error("policy_gradient: empty rollout");
    const int S = policy.n_states();
    const int A = policy.n_actions();

    std::vector<real> returns(rollout.steps.size(), 0.0);
    for (std::size_t e = 0; e < rollout.episodes.size(); ++e) {
        auto [begin, end] = rollout.episodes[e];
        real g = 0.0;
        for (std::size_t i = end; i-- > begin;) {
            g = rollout.steps[i].reward + gamma * g;
            returns[i] = g;
        }
    }

    std::vector<real> state_sum(S, 0.0);
    std::vector<int> state_count(S, 0);
    for (std::size_t i = 0; i < rollout.steps.size(); ++i) {
        state_sum[rollout.steps[i].s] += returns[i];
        ++state_count[rollout.steps[i].s];
    }

    std::vector<real> advantages(rollout.steps.size(), 0.0);
    std::vector<real> episode_sum(S, 0.0);
    std::vector<int> episode_count(S, 0);
    for (std::size_t e = 0; e < rollout.episodes.size(); ++e) {
        auto [begin, end] = rollout.episodes[e];
        for (std::size_t i = begin; i < end; ++i) {
            episode_sum[rollout.steps[i].s] += returns[i];
            ++episode_count[rollout.steps[i].s];
        }
        for (std::size_t i = begin; i < end; ++i) {
            const auto& st = rollout.steps[i];
            int n = state_count[st.s] - episode_count[st.s];
            real baseline = n > 0 ? (state_sum[st.s] - episode_sum[st.s]) / n : 0.0;
            advantages[i] = returns[i] - baseline;
        }
        for (std::size_t i = begin; i < end; ++i) {
            episode_sum[rollout.steps[i].s] = 0.0;
            episode_count[rollout.steps[i].s] = 0;
        }
    }

    if (normalize_advantages) {
        real sd = stddev_of(advantages);
        if (sd > 1e-12)
            for (real& a : advantages) a /= sd;
    }

    std::vector<real> grad(static_cast<std::size_t>(S) * A, 0.0);
    for (std::size_t e = 0; e < rollout.episodes.size(); ++e) {
        auto [begin, end] = rollout.episodes[e];
        real discount = 1.0;
        for (std::size_t i = begin; i < end; ++i) {
            const auto& st = rollout.steps[i];
            real coef = discount * advantages[i];
            auto pi = policy.row(st.s);
            real* g = grad.data() + static_cast<std::size_t>(st.s) * A;
            for (int b = 0; b < A; ++b) g[b] -= coef * pi[b];
            g[st.a] += coef;
            discount *= gamma;
        }
    }
    const real inv_eps = 1.0 / static_cast<real>(rollout.episodes.size());
    for (real& g : grad) g *= inv_eps;
    return grad;
}

/// Applies one ascent step of the score-function gradient in place.
inline void policy_update(TabularPolicy& policy, const Rollout& rollout, real gamma, real lr,
                          bool normalize_advantages = false) {
    auto grad = policy_gradient(policy, rollout, gamma, normalize_advantages);
    const int A = policy.n_actions();
    for (int s = 0; s < policy.n_states(); ++s)
        for (int a = 0; a < A; ++a)
            policy.add_logit(s, a, lr * grad[static_cast<std::size_t>(s) * A + a]);
}

struct TrainResult {
    TabularPolicy policy;
    RunRecord record;
};

namespace detail {

inline std::vector<ScorerInput> flatten_demos(const Demonstration& demos, bool need_actions) {
    std::vector<ScorerInput> out;
    for (const auto& ep : demos.episodes)
        for (const auto& r : ep) {
            ScorerInput x;
            x.s = r.s;
            x.s_next = r.s_next;
            if (need_actions) {
                if (!r.a) throw validation_error("demos: algorithm requires actions");
                x.a = *r.a;
            }
            out.push_back(x);
        }
    if (out.empty()) throw validation_error("demos: no records");
    return out;
}

/// Extends the expert sample pool with absorbing self-transitions for
/// every demonstrated episode that terminated before the horizon, so the
/// expert pool carries the same post-termination occupancy mass as the
/// padded agent rollouts. Actions on the pads are drawn uniformly
/// (terminal rows are value-tied, so any softmax expert is uniform there).
inline void pad_expert_pool(std::vector<ScorerInput>& pool, const Demonstration& demos,
                            const TabularMdp& mdp, int max_steps, rng_t& rng) {
    for (const auto& ep : demos.episodes) {
        if (ep.empty()) continue;
        int terminal_state = ep.back().s_next;
        if (!mdp.terminal(terminal_state)) continue;
        for (int t = static_cast<int>(ep.size()); t < max_steps; ++t) {
            ScorerInput x;
            x.s = terminal_state;
            x.s_next = terminal_state;
            x.a = static_cast<int>(uniform01(rng) * mdp.n_actions()) % mdp.n_actions();
            pool.push_back(x);
        }
    }
}

inline std::vector<ScorerInput> sample_batch(std::span<const ScorerInput> pool, int batch,
                                             rng_t& rng) {
    std::vector<ScorerInput> out(batch);
    for (int i = 0; i < batch; ++i)
        out[i] = pool[static_cast<std::size_t>(uniform01(rng) * pool.size()) % pool.size()];
    return out;
}

inline std::vector<ScorerInput> rollout_inputs(const Rollout& buf) {
    std::vector<ScorerInput> out(buf.steps.size());
    for (std::size_t i = 0; i < buf.steps.size(); ++i)
        out[i] = {buf.steps[i].s, buf.steps[i].a, buf.steps[i].s_next};
    return out;
}

/// Marginal batch for MINE: the joint batch with s resampled across it.
inline std::vector<ScorerInput> shuffle_states(std::span<const ScorerInput> joint, rng_t& rng) {
    std::vector<ScorerInput> out(joint.begin(), joint.end());
    for (auto& x : out)
        x.s = joint[static_cast<std::size_t>(uniform01(rng) * joint.size()) % joint.size()].s;
    return out;
}

inline RunRow diagnostics_row(int iter, const TabularMdp& mdp, const TabularPolicy& policy,
                              const TabularPolicy* expert, real mean_return, real disc_loss,
                              real mi_estimate) {
    RunRow row{};
    row.iter = iter;
    row.mean_return = mean_return;
    row.disc_loss = disc_loss;
    row.mi_estimate = mi_estimate;
    auto occ = derive_occupancies(mdp, policy);
    row.policy_entropy = entropies(occ, policy).h_a_given_s;
    if (expert) {
        auto occ_e = derive_occupancies(mdp, *expert);
        row.diag_kl_sa = divergence(occ.rho_sa, occ_e.rho_sa, Divergence::KL);
        row.diag_kl_ss = divergence(occ.rho_ss, occ_e.rho_ss, Divergence::KL);
        auto id_pi = inverse_dynamics(mdp, policy, occ);
        auto id_e = inverse_dynamics(mdp, *expert, occ_e);
        row.diag_idd = inverse_dynamics_disagreement(occ, id_pi, id_e);
    } else {
        row.diag_kl_sa = std::numeric_limits<real>::quiet_NaN();
        row.diag_kl_ss = std::numeric_limits<real>::quiet_NaN();
        row.diag_idd = std::numeric_limits<real>::quiet_NaN();
    }
    return row;
}

inline void evaluate(const TabularMdp& mdp, const TabularPolicy& policy, int max_steps,
                     int eval_rollouts, Simulator& sim, RunRecord& record) {
    std::vector<real> returns;
    returns.reserve(eval_rollouts);
    for (int e = 0; e < eval_rollouts; ++e) {
        int s = sim.reset();
        bool done = false;
        real ret = 0.0;
        while (!done) {
            int a = policy.sample(s, sim.rng());
            StepResult r = sim.step(a);
            ret += r.reward;
            s = r.next_state;
            done = r.done;
        }
        returns.push_back(ret);
    }
    record.eval_mean = mean_of(returns);
    record.eval_std = stddev_of(returns);
    (void)max_steps;
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline TrainResult bco_train(const TabularMdp& mdp, int max_steps, const Demonstration& demos,
                             const TrainConfig& config, const TabularPolicy* expert,
                             int eval_rollouts) {
    const int S = mdp.n_states();
    const int A = mdp.n_actions();
    rng_t master(derive_seed(config.seed, 0));
    Simulator sim(mdp, max_steps, derive_seed(config.seed, 1));

    TrainResult result;
    result.policy = TabularPolicy::uniform(S, A);
    std::vector<real> counts(static_cast<std::size_t>(S) * S * A, 0.0);
    auto count_at = [&](int s, int s2, int a) -> real& {
        return counts[(static_cast<std::size_t>(s) * S + s2) * A + a];
    };

    std::vector<ScorerInput> demo_pairs = flatten_demos(demos, false);
    std::vector<int> labels(demo_pairs.size(), 0);

    for (int iter = 1; iter <= config.iterations; ++iter) {
        Rollout buf = collect_rollout(mdp, result.policy, max_steps, config.rollout_steps, sim);
        for (const auto& st : buf.steps) count_at(st.s, st.s_next, st.a) += 1.0;

        // label expert transitions with the argmax of the smoothed model
        for (std::size_t i = 0; i < demo_pairs.size(); ++i) {
            const auto& p = demo_pairs[i];
            real total = 0.0;
            for (int a = 0; a < A; ++a) total += count_at(p.s, p.s_next, a);
            if (total > 0.0) {
                int best = 0;
                real best_v = -1.0;
                for (int a = 0; a < A; ++a) {
                    real v = count_at(p.s, p.s_next, a) + config.bco_smoothing;
                    if (v > best_v) {
                        best_v = v;
                        best = a;
                    }
                }
                labels[i] = best;
            } else {
                labels[i] = static_cast<int>(uniform01(master) * A) % A;
                ++result.record.label_warnings;
            }
        }

        // behavior cloning on the labeled pairs
        const real inv_n = 1.0 / static_cast<real>(demo_pairs.size());
        for (int step = 0; step < config.bco_bc_steps; ++step) {
            std::vector<real> grad(static_cast<std::size_t>(S) * A, 0.0);
            for (std::size_t i = 0; i < demo_pairs.size(); ++i) {
                int s = demo_pairs[i].s;
                auto pi = result.policy.row(s);
                real* g = grad.data() + static_cast<std::size_t>(s) * A;
                for (int b = 0; b < A; ++b) g[b] -= inv_n * pi[b];
                g[labels[i]] += inv_n;
            }
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a)
                    result.policy.add_logit(
                        s, a, config.effective_policy_lr() * grad[static_cast<std::size_t>(s) * A + a]);
        }

        result.record.rows.push_back(diagnostics_row(iter, mdp, result.policy, expert,
                                                     buf.mean_env_return(), 0.0, 0.0));
    }
    evaluate(mdp, result.policy, max_steps, eval_rollouts, sim, result.record);
    return result;
}

}  // namespace detail

/**
 * Full training loop per the selected algorithm: per-iteration rollout
 * collection, MINE updates (IDDM only, after a one-time pretrain), one
 * discriminator step, one policy step, and exact tabular diagnostics of
 * the live policy against the expert. Deterministic per (config, seed).
 */
inline TrainResult train(const TabularMdp& mdp, int max_steps, const Demonstration& demos,
                         const TrainConfig& config, const TabularPolicy* expert = nullptr,
                         int eval_rollouts = 50) {
    config.validate();
    bool needs_actions = config.algorithm == Algorithm::GAIL;
    if (demos.includes_actions != needs_actions)
        throw validation_error(needs_actions
                                   ? "demos: GAIL requires state-action demonstrations"
                                   : "demos: state-only algorithms take state-only demonstrations");
    if (config.algorithm == Algorithm::BCO)
        return detail::bco_train(mdp, max_steps, demos, config, expert, eval_rollouts);

    const int S = mdp.n_states();
    const int A = mdp.n_actions();
    rng_t master(detail::derive_seed(config.seed, 0));
    Simulator sim(mdp, max_steps, detail::derive_seed(config.seed, 1));

    TrainResult result;
    result.policy = TabularPolicy::uniform(S, A);

    Scorer disc(config.scorer, discriminator_signature(config.algorithm), S, A, config.mlp_hidden,
                &master);
    Optimizer disc_opt(config.optimizer, disc.n_params());

    const bool use_mine = config.algorithm == Algorithm::IDDM && config.lambda_s > 0.0;
    std::optional<MineEstimator> mine;
    if (use_mine)
        mine.emplace(config.scorer, S, A, config.optimizer, config.mlp_hidden, &master);

    std::vector<ScorerInput> expert_pool = detail::flatten_demos(demos, needs_actions);
    detail::pad_expert_pool(expert_pool, demos, mdp, max_steps, master);

    real mi_estimate = 0.0;
    if (use_mine && config.mi_pretrain_steps > 0) {
        Rollout warmup =
            collect_rollout(mdp, result.policy, max_steps, config.rollout_steps, sim, true);
        auto joint_pool = detail::rollout_inputs(warmup);
        for (int i = 0; i < config.mi_pretrain_steps; ++i) {
            auto joint = detail::sample_batch(joint_pool, config.batch, master);
            auto marg = detail::shuffle_states(joint, master);
            mi_estimate = mine->update(joint, marg, config.effective_mine_lr());
        }
    }

    for (int iter = 1; iter <= config.iterations; ++iter) {
        Rollout buf =
            collect_rollout(mdp, result.policy, max_steps, config.rollout_steps, sim, true);
        auto joint_pool = detail::rollout_inputs(buf);

        if (use_mine) {
            for (int i = 0; i < config.mi_update_steps; ++i) {
                auto joint = detail::sample_batch(joint_pool, config.batch, master);
                auto marg = detail::shuffle_states(joint, master);
                mi_estimate = mine->update(joint, marg, config.effective_mine_lr());
            }
        }

        auto agent_batch = detail::sample_batch(joint_pool, config.batch, master);
        auto expert_batch = detail::sample_batch(expert_pool, config.batch, master);
        real disc_loss = discriminator_update(disc, disc_opt, agent_batch, expert_batch,
                                              config.effective_disc_lr(), config.disc_l2);

        for (auto& st : buf.steps) {
            ScorerInput tr{st.s, st.a, st.s_next};
            st.reward = compose_reward(tr, disc, use_mine ? &*mine : nullptr, result.policy,
                                       config.lambda_p, config.lambda_s);
        }
        policy_update(result.policy, buf, mdp.gamma(), config.effective_policy_lr(),
                      config.normalize_advantages);

        result.record.rows.push_back(detail::diagnostics_row(
            iter, mdp, result.policy, expert, buf.mean_env_return(), disc_loss, mi_estimate));
    }
    detail::evaluate(mdp, result.policy, max_steps, eval_rollouts, sim, result.record);
    return result;
}

}  // namespace iddlab
