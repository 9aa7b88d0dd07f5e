#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "iddlab/common.hpp"

namespace iddlab {

/**
 * Finite MDP with a dense transition tensor T[s][a][s'], optional reward
 * table r[s][a], initial distribution, discount in (0,1) and a terminal
 * mask. Terminal states must self-loop under every action. The reward
 * table is used for evaluation only; imitation learners never read it.
 */
class TabularMdp {
  public:
    TabularMdp() = default;

    TabularMdp(int n_states, int n_actions, real gamma)
        : n_states_(n_states),
          n_actions_(n_actions),
          gamma_(gamma),
          transition_(static_cast<std::size_t>(n_states) * n_actions * n_states, 0.0),
          init_(n_states, 0.0),
          terminal_(n_states, 0) {}

    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }
    real gamma() const { return gamma_; }

    real& trans(int s, int a, int s2) { return transition_[idx(s, a, s2)]; }
    real trans(int s, int a, int s2) const { return transition_[idx(s, a, s2)]; }

    real& init(int s) { return init_[s]; }
    real init(int s) const { return init_[s]; }

    bool terminal(int s) const { return terminal_[s] != 0; }
    void set_terminal(int s, bool t) { terminal_[s] = t ? 1 : 0; }

    bool has_reward() const { return reward_.has_value(); }
    void allocate_reward() {
        reward_.emplace(static_cast<std::size_t>(n_states_) * n_actions_, 0.0);
    }
    real& reward(int s, int a) { return (*reward_)[static_cast<std::size_t>(s) * n_actions_ + a]; }
    real reward(int s, int a) const {
        return (*reward_)[static_cast<std::size_t>(s) * n_actions_ + a];
    }

    const std::vector<real>& transition_data() const { return transition_; }
    const std::vector<real>& init_data() const { return init_; }

    /// Checks all structural invariants; throws validation_error on the
    /// first violation, naming the offending row.
    void validate() const {
        constexpr real tol = 1e-12;
        if (n_states_ <= 0 || n_actions_ <= 0)
            throw validation_error("mdp: n_states and n_actions must be positive");
        if (!(gamma_ > 0.0 && gamma_ < 1.0))
            throw validation_error("mdp.gamma: must lie in (0,1)");
        for (int s = 0; s < n_states_; ++s) {
            for (int a = 0; a < n_actions_; ++a) {
                real row = 0.0;
                for (int s2 = 0; s2 < n_states_; ++s2) {
                    real p = trans(s, a, s2);
                    if (p < 0.0)
                        throw validation_error("mdp.transition[" + std::to_string(s) + "][" +
                                               std::to_string(a) + "]: negative entry");
                    row += p;
                }
                if (std::abs(row - 1.0) > tol)
                    throw validation_error("mdp.transition[" + std::to_string(s) + "][" +
                                           std::to_string(a) + "]: row sums to " +
                                           std::to_string(row));
            }
            if (terminal(s)) {
                for (int a = 0; a < n_actions_; ++a)
                    if (std::abs(trans(s, a, s) - 1.0) > tol)
                        throw validation_error("mdp.terminal[" + std::to_string(s) +
                                               "]: terminal state must self-loop");
            }
        }
        real mu = 0.0;
        for (int s = 0; s < n_states_; ++s) {
            if (init_[s] < 0.0) throw validation_error("mdp.init: negative entry");
            mu += init_[s];
        }
        if (std::abs(mu - 1.0) > tol)
            throw validation_error("mdp.init: sums to " + std::to_string(mu));
    }

    /// True when every transition row is one-hot.
    bool deterministic() const {
        for (real p : transition_)
            if (p != 0.0 && p != 1.0) return false;
        return true;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["n_states"] = n_states_;
        j["n_actions"] = n_actions_;
        j["gamma"] = gamma_;
        j["init"] = init_;
        std::vector<bool> term(terminal_.begin(), terminal_.end());
        j["terminal"] = term;
        auto t = nlohmann::json::array();
        for (int s = 0; s < n_states_; ++s) {
            auto per_a = nlohmann::json::array();
            for (int a = 0; a < n_actions_; ++a) {
                auto row = nlohmann::json::array();
                for (int s2 = 0; s2 < n_states_; ++s2) row.push_back(trans(s, a, s2));
                per_a.push_back(std::move(row));
            }
            t.push_back(std::move(per_a));
        }
        j["transition"] = std::move(t);
        if (reward_) {
            auto r = nlohmann::json::array();
            for (int s = 0; s < n_states_; ++s) {
                auto row = nlohmann::json::array();
                for (int a = 0; a < n_actions_; ++a) row.push_back(reward(s, a));
                r.push_back(std::move(row));
            }
            j["reward"] = std::move(r);
        } else {
            j["reward"] = nullptr;
        }
        return j;
    }

    static TabularMdp from_json(const nlohmann::json& j) {
        try {
            TabularMdp m(j.at("n_states").get<int>(), j.at("n_actions").get<int>(),
                         j.at("gamma").get<real>());
            const auto& init = j.at("init");
            if (static_cast<int>(init.size()) != m.n_states_)
                throw validation_error("mdp.init: wrong length");
            for (int s = 0; s < m.n_states_; ++s) m.init_[s] = init[s].get<real>();
            const auto& term = j.at("terminal");
            for (int s = 0; s < m.n_states_; ++s) m.terminal_[s] = term.at(s).get<bool>() ? 1 : 0;
            const auto& t = j.at("transition");
            for (int s = 0; s < m.n_states_; ++s)
                for (int a = 0; a < m.n_actions_; ++a)
                    for (int s2 = 0; s2 < m.n_states_; ++s2)
                        m.trans(s, a, s2) = t.at(s).at(a).at(s2).get<real>();
            if (!j.at("reward").is_null()) {
                m.allocate_reward();
                const auto& r = j.at("reward");
                for (int s = 0; s < m.n_states_; ++s)
                    for (int a = 0; a < m.n_actions_; ++a)
                        m.reward(s, a) = r.at(s).at(a).get<real>();
            }
            m.validate();
            return m;
        } catch (const nlohmann::json::exception& e) {
            throw validation_error(std::string("mdp: malformed json: ") + e.what());
        }
    }

  private:
    std::size_t idx(int s, int a, int s2) const {
        return (static_cast<std::size_t>(s) * n_actions_ + a) * n_states_ + s2;
    }

    int n_states_ = 0;
    int n_actions_ = 0;
    real gamma_ = 0.0;
    std::vector<real> transition_;
    std::optional<std::vector<real>> reward_;
    std::vector<real> init_;
    std::vector<std::uint8_t> terminal_;
};

/**
 * Stationary stochastic policy parameterized by a logits table; action
 * probabilities are the row-wise softmax, so they are strictly positive
 * as long as no row spans more than the exp() range.
 */
class TabularPolicy {
  public:
    TabularPolicy() = default;

    TabularPolicy(int n_states, int n_actions)
        : n_states_(n_states),
          n_actions_(n_actions),
          logits_(static_cast<std::size_t>(n_states) * n_actions, 0.0) {
        refresh();
    }

    static TabularPolicy uniform(int n_states, int n_actions) {
        return TabularPolicy(n_states, n_actions);
    }

    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }

    real logit(int s, int a) const { return logits_[flat(s, a)]; }
    void set_logit(int s, int a, real v) {
        logits_[flat(s, a)] = v;
        dirty_ = true;
    }
    void add_logit(int s, int a, real v) {
        logits_[flat(s, a)] += v;
        dirty_ = true;
    }

    real prob(int s, int a) const {
        if (dirty_) refresh();
        return probs_[flat(s, a)];
    }

    std::span<const real> row(int s) const {
        if (dirty_) refresh();
        return {probs_.data() + flat(s, 0), static_cast<std::size_t>(n_actions_)};
    }

    const std::vector<real>& logits() const { return logits_; }

    int sample(int s, rng_t& rng) const { return sample_index(row(s), rng); }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["n_states"] = n_states_;
        j["n_actions"] = n_actions_;
        auto rows = nlohmann::json::array();
        for (int s = 0; s < n_states_; ++s) {
            auto r = nlohmann::json::array();
            for (int a = 0; a < n_actions_; ++a) r.push_back(logit(s, a));
            rows.push_back(std::move(r));
        }
        j["logits"] = std::move(rows);
        return j;
    }

    static TabularPolicy from_json(const nlohmann::json& j) {
        try {
            TabularPolicy p(j.at("n_states").get<int>(), j.at("n_actions").get<int>());
            const auto& rows = j.at("logits");
            for (int s = 0; s < p.n_states_; ++s)
                for (int a = 0; a < p.n_actions_; ++a)
                    p.logits_[p.flat(s, a)] = rows.at(s).at(a).get<real>();
            p.refresh();
            return p;
        } catch (const nlohmann::json::exception& e) {
            throw validation_error(std::string("policy: malformed json: ") + e.what());
        }
    }

  private:
    std::size_t flat(int s, int a) const { return static_cast<std::size_t>(s) * n_actions_ + a; }

    void refresh() const {
        probs_.resize(logits_.size());
        for (int s = 0; s < n_states_; ++s) {
            const real* in = logits_.data() + flat(s, 0);
            real* out = probs_.data() + flat(s, 0);
            real mx = *std::max_element(in, in + n_actions_);
            real z = 0.0;
            for (int a = 0; a < n_actions_; ++a) {
                out[a] = std::exp(in[a] - mx);
                z += out[a];
            }
            for (int a = 0; a < n_actions_; ++a) out[a] /= z;
        }
        dirty_ = false;
    }

    int n_states_ = 0;
    int n_actions_ = 0;
    std::vector<real> logits_;
    mutable std::vector<real> probs_;
    mutable bool dirty_ = true;
};

/// Throws unless the policy's shape matches the MDP's.
inline void require_match(const TabularMdp& mdp, const TabularPolicy& policy) {
    if (mdp.n_states() != policy.n_states() || mdp.n_actions() != policy.n_actions())
        throw dimension_error("mdp/policy dimension mismatch: (" +
                              std::to_string(mdp.n_states()) + "," +
                              std::to_string(mdp.n_actions()) + ") vs (" +
                              std::to_string(policy.n_states()) + "," +
                              std::to_string(policy.n_actions()) + ")");
}

}  // namespace iddlab
