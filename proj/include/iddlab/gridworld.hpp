#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "iddlab/common.hpp"
#include "iddlab/mdp.hpp"

namespace iddlab {

struct Cell {
    int x = 0;
    int y = 0;
    auto operator<=>(const Cell&) const = default;
};

/**
 * Maze layout plus reward strategy. Each of the four basic moves has
 * k_choices functionally equivalent variants: identical dynamics, but
 * only variant 0 pays the original penalty; the others pay the variant
 * penalty. Entering the goal pays goal_reward and ends the episode.
 */
struct GridSpec {
    int width = 7;
    int height = 7;
    std::vector<Cell> walls;
    Cell start{0, 6};
    Cell goal{6, 0};
    int k_choices = 1;
    real goal_reward = 100.0;
    real original_penalty = -1.0;
    real variant_penalty = -5.0;
    int max_steps = 100;
    real discount = 0.99;

    bool in_bounds(const Cell& c) const {
        return c.x >= 0 && c.x < width && c.y >= 0 && c.y < height;
    }
    bool is_wall(const Cell& c) const {
        return std::find(walls.begin(), walls.end(), c) != walls.end();
    }

    void validate() const {
        if (width <= 0 || height <= 0) throw validation_error("grid: width/height must be positive");
        if (k_choices < 1) throw validation_error("grid.k_choices: must be >= 1");
        if (max_steps < 1) throw validation_error("grid.max_steps: must be >= 1");
        if (!(discount > 0.0 && discount < 1.0))
            throw validation_error("grid.discount: must lie in (0,1)");
        if (start == goal) throw validation_error("grid: start equals goal");
        if (!in_bounds(start) || !in_bounds(goal))
            throw validation_error("grid: start/goal out of bounds");
        if (is_wall(start) || is_wall(goal))
            throw validation_error("grid: start/goal inside a wall");
        for (const auto& w : walls)
            if (!in_bounds(w)) throw validation_error("grid.walls: cell out of bounds");
        if (!connected()) throw validation_error("grid: goal not reachable from start");
    }

    /// Flood fill from start; true when the goal is reachable.
    bool connected() const {
        std::vector<std::uint8_t> seen(static_cast<std::size_t>(width) * height, 0);
        std::deque<Cell> frontier{start};
        seen[static_cast<std::size_t>(start.y) * width + start.x] = 1;
        while (!frontier.empty()) {
            Cell c = frontier.front();
            frontier.pop_front();
            if (c == goal) return true;
            const Cell steps[4] = {{c.x - 1, c.y}, {c.x + 1, c.y}, {c.x, c.y - 1}, {c.x, c.y + 1}};
            for (const Cell& n : steps) {
                if (!in_bounds(n) || is_wall(n)) continue;
                auto& mark = seen[static_cast<std::size_t>(n.y) * width + n.x];
                if (!mark) {
                    mark = 1;
                    frontier.push_back(n);
                }
            }
        }
        return false;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["width"] = width;
        j["height"] = height;
        auto w = nlohmann::json::array();
        for (const auto& c : walls) w.push_back({c.x, c.y});
        j["walls"] = std::move(w);
        j["start"] = {start.x, start.y};
        j["goal"] = {goal.x, goal.y};
        j["k_choices"] = k_choices;
        j["goal_reward"] = goal_reward;
        j["original_penalty"] = original_penalty;
        j["variant_penalty"] = variant_penalty;
        j["max_steps"] = max_steps;
        j["discount"] = discount;
        return j;
    }

    static GridSpec from_json(const nlohmann::json& j) {
        GridSpec g;
        try {
            g.width = j.at("width").get<int>();
            g.height = j.at("height").get<int>();
            g.walls.clear();
            for (const auto& c : j.at("walls"))
                g.walls.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
            g.start = {j.at("start").at(0).get<int>(), j.at("start").at(1).get<int>()};
            g.goal = {j.at("goal").at(0).get<int>(), j.at("goal").at(1).get<int>()};
            if (j.contains("k_choices")) g.k_choices = j.at("k_choices").get<int>();
            if (j.contains("goal_reward")) g.goal_reward = j.at("goal_reward").get<real>();
            if (j.contains("original_penalty"))
                g.original_penalty = j.at("original_penalty").get<real>();
            if (j.contains("variant_penalty"))
                g.variant_penalty = j.at("variant_penalty").get<real>();
            if (j.contains("max_steps")) g.max_steps = j.at("max_steps").get<int>();
            if (j.contains("discount")) g.discount = j.at("discount").get<real>();
        } catch (const nlohmann::json::exception& e) {
            throw validation_error(std::string("grid: malformed json: ") + e.what());
        }
        g.validate();
        return g;
    }

    /// Stable hash of the canonical JSON form, stamped into demonstrations.
    std::uint64_t fingerprint() const { return fnv1a(to_json().dump()); }
};

/// Direction codes use the order left, right, up, down.
enum class Direction : int { Left = 0, Right = 1, Up = 2, Down = 3 };

struct GridAction {
    Direction direction = Direction::Left;
    int variant = 0;

    int flat() const { return 4 * variant + static_cast<int>(direction); }
    static GridAction from_flat(int index) {
        return {static_cast<Direction>(index % 4), index / 4};
    }
};

inline Cell step_cell(const Cell& c, Direction d) {
    switch (d) {
        case Direction::Left: return {c.x - 1, c.y};
        case Direction::Right: return {c.x + 1, c.y};
        case Direction::Up: return {c.x, c.y - 1};
        default: return {c.x, c.y + 1};
    }
}

/**
 * A grid spec compiled to an exact TabularMdp. States are the traversable
 * cells in row-major order plus one absorbing sink; entering the goal
 * transitions directly to the sink with goal_reward, so the goal cell
 * itself is never occupied. Moving into a wall or the boundary keeps the
 * position and still pays the action penalty. All k variants of one
 * direction share identical transition rows.
 */
class Gridworld {
  public:
    explicit Gridworld(GridSpec spec) : spec_(std::move(spec)) {
        spec_.validate();
        cell_index_.assign(static_cast<std::size_t>(spec_.width) * spec_.height, -1);
        for (int y = 0; y < spec_.height; ++y)
            for (int x = 0; x < spec_.width; ++x) {
                Cell c{x, y};
                if (spec_.is_wall(c)) continue;
                cell_index_[flat_cell(c)] = static_cast<int>(cells_.size());
                cells_.push_back(c);
            }
        sink_ = static_cast<int>(cells_.size());
        build();
    }

    const GridSpec& spec() const { return spec_; }
    const TabularMdp& mdp() const { return mdp_; }
    int n_states() const { return sink_ + 1; }
    int n_actions() const { return 4 * spec_.k_choices; }
    int sink_state() const { return sink_; }
    int start_state() const { return state_of(spec_.start); }
    int goal_state() const { return state_of(spec_.goal); }

    int state_of(const Cell& c) const {
        int id = cell_index_[flat_cell(c)];
        if (id < 0) throw dimension_error("gridworld: cell is a wall");
        return id;
    }
    const Cell& cell_of(int state) const { return cells_.at(state); }

  private:
    std::size_t flat_cell(const Cell& c) const {
        return static_cast<std::size_t>(c.y) * spec_.width + c.x;
    }

    void build() {
        const int S = n_states();
        const int A = n_actions();
        mdp_ = TabularMdp(S, A, spec_.discount);
        mdp_.allocate_reward();
        const int goal = goal_state();
        for (int s = 0; s < S; ++s) {
            if (s == sink_ || s == goal) {
                for (int a = 0; a < A; ++a) mdp_.trans(s, a, s) = 1.0;
                mdp_.set_terminal(s, true);
                continue;
            }
            const Cell& here = cells_[s];
            for (int v = 0; v < spec_.k_choices; ++v) {
                for (int d = 0; d < 4; ++d) {
                    int a = GridAction{static_cast<Direction>(d), v}.flat();
                    Cell target = step_cell(here, static_cast<Direction>(d));
                    real penalty = v == 0 ? spec_.original_penalty : spec_.variant_penalty;
                    if (!spec_.in_bounds(target) || spec_.is_wall(target)) {
                        mdp_.trans(s, a, s) = 1.0;
                        mdp_.reward(s, a) = penalty;
                    } else if (target == spec_.goal) {
                        mdp_.trans(s, a, sink_) = 1.0;
                        mdp_.reward(s, a) = spec_.goal_reward;
                    } else {
                        mdp_.trans(s, a, state_of(target)) = 1.0;
                        mdp_.reward(s, a) = penalty;
                    }
                }
            }
        }
        mdp_.init(start_state()) = 1.0;
        mdp_.validate();
    }

    GridSpec spec_;
    TabularMdp mdp_;
    std::vector<Cell> cells_;
    std::vector<int> cell_index_;
    int sink_ = 0;
};

struct StepResult {
    int next_state;
    real reward;
    bool done;
};

/**
 * Steppable face of a TabularMdp. Owns a private seeded generator;
 * step semantics are bit-identical to sampling the exported tensor.
 * Episodes truncate (censored, no bootstrap) at max_steps.
 */
class Simulator {
  public:
    Simulator(const TabularMdp& mdp, int max_steps, std::uint64_t seed)
        : mdp_(&mdp), max_steps_(max_steps), rng_(seed) {
        reset();
    }

    int reset() {
        std::vector<real> mu(mdp_->init_data());
        state_ = sample_index(mu, rng_);
        steps_ = 0;
        return state_;
    }

    int state() const { return state_; }

    StepResult step(int action) {
        if (mdp_->terminal(state_)) throw precondition_error("simulator: step on terminal state");
        const int S = mdp_->n_states();
        row_.resize(S);
        for (int s2 = 0; s2 < S; ++s2) row_[s2] = mdp_->trans(state_, action, s2);
        int next = sample_index(row_, rng_);
        real reward = mdp_->has_reward() ? mdp_->reward(state_, action) : 0.0;
        ++steps_;
        bool done = mdp_->terminal(next) || steps_ >= max_steps_;
        state_ = next;
        return {next, reward, done};
    }

    rng_t& rng() { return rng_; }

  private:
    const TabularMdp* mdp_;
    int max_steps_;
    rng_t rng_;
    int state_ = 0;
    int steps_ = 0;
    std::vector<real> row_;
};

/**
 * Exact value iteration to the stated sup-norm residual, then a softmax
 * policy over Q with the given temperature. Low temperature yields a
 * near-optimal expert that prefers variant-0 actions; ties (functionally
 * equivalent actions with equal Q, and terminal states) come out uniform.
 */
inline TabularPolicy train_expert(const TabularMdp& mdp, real temperature = 0.01,
                                  real residual = 1e-10, int max_iter = 1000000) {
    if (!mdp.has_reward()) throw precondition_error("train_expert: mdp has no reward table");
    const int S = mdp.n_states();
    const int A = mdp.n_actions();
    std::vector<real> value(S, 0.0), next(S, 0.0);
    for (int it = 0; it < max_iter; ++it) {
        real delta = 0.0;
        for (int s = 0; s < S; ++s) {
            if (mdp.terminal(s)) {
                next[s] = 0.0;
                continue;
            }
            real best = -std::numeric_limits<real>::infinity();
            for (int a = 0; a < A; ++a) {
                real q = mdp.reward(s, a);
                for (int s2 = 0; s2 < S; ++s2) {
                    real t = mdp.trans(s, a, s2);
                    if (t != 0.0) q += mdp.gamma() * t * value[s2];
                }
                best = std::max(best, q);
            }
            next[s] = best;
            delta = std::max(delta, std::abs(next[s] - value[s]));
        }
        value.swap(next);
        if (delta <= residual) break;
    }
    TabularPolicy policy(S, A);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            real q = mdp.terminal(s) ? 0.0 : mdp.reward(s, a);
            if (!mdp.terminal(s))
                for (int s2 = 0; s2 < S; ++s2) {
                    real t = mdp.trans(s, a, s2);
                    if (t != 0.0) q += mdp.gamma() * t * value[s2];
                }
            policy.set_logit(s, a, q / temperature);
        }
    }
    return policy;
}

/// One transition record; the action is absent in state-only data.
struct DemoRecord {
    int s;
    std::optional<int> a;
    int s_next;
};

struct Demonstration {
    std::vector<std::vector<DemoRecord>> episodes;
    std::uint64_t env_fingerprint = 0;
    bool includes_actions = false;
    std::uint64_t seed = 0;
    int pair_count = 0;

    int total_records() const {
        int n = 0;
        for (const auto& ep : episodes) n += static_cast<int>(ep.size());
        return n;
    }

    /// JSON Lines: a single meta line followed by one record per line.
    std::string to_jsonl() const {
        nlohmann::json meta;
        meta["meta"] = {{"env_fingerprint", std::to_string(env_fingerprint)},
                        {"includes_actions", includes_actions},
                        {"seed", seed},
                        {"pair_count", pair_count}};
        std::string out = meta.dump() + "\n";
        for (std::size_t ep = 0; ep < episodes.size(); ++ep) {
            for (std::size_t t = 0; t < episodes[ep].size(); ++t) {
                const auto& r = episodes[ep][t];
                nlohmann::json line;
                line["ep"] = ep;
                line["t"] = t;
                line["s"] = r.s;
                if (r.a)
                    line["a"] = *r.a;
                else
                    line["a"] = nullptr;
                line["sn"] = r.s_next;
                out += line.dump() + "\n";
            }
        }
        return out;
    }

    static Demonstration from_jsonl(const std::string& text) {
        Demonstration demo;
        std::size_t pos = 0;
        bool meta_seen = false;
        while (pos < text.size()) {
            std::size_t end = text.find('\n', pos);
            if (end == std::string::npos) end = text.size();
            std::string line = text.substr(pos, end - pos);
            pos = end + 1;
            if (line.empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw validation_error(std::string("demos: malformed json line: ") + e.what());
            }
            if (!meta_seen) {
                if (!j.contains("meta")) throw validation_error("demos: first line must be meta");
                const auto& m = j["meta"];
                demo.env_fingerprint = std::stoull(m.at("env_fingerprint").get<std::string>());
                demo.includes_actions = m.at("includes_actions").get<bool>();
                demo.seed = m.at("seed").get<std::uint64_t>();
                demo.pair_count = m.at("pair_count").get<int>();
                meta_seen = true;
                continue;
            }
            std::size_t ep = j.at("ep").get<std::size_t>();
            if (ep >= demo.episodes.size()) demo.episodes.resize(ep + 1);
            DemoRecord r;
            r.s = j.at("s").get<int>();
            if (!j.at("a").is_null()) r.a = j.at("a").get<int>();
            r.s_next = j.at("sn").get<int>();
            demo.episodes[ep].push_back(r);
        }
        if (!meta_seen) throw validation_error("demos: empty file");
        demo.check_chain();
        return demo;
    }

    void check_chain() const {
        for (const auto& ep : episodes) {
            for (std::size_t t = 0; t + 1 < ep.size(); ++t)
                if (ep[t].s_next != ep[t + 1].s)
                    throw validation_error("demos: episode records do not chain");
            if (!includes_actions)
                for (const auto& r : ep)
                    if (r.a) throw validation_error("demos: action present in state-only data");
        }
    }
};

/**
 * Rolls complete episodes under the policy until at least n_pairs
 * transition records exist, then truncates to exactly n_pairs.
 */
inline Demonstration collect_demos(const TabularMdp& mdp, const TabularPolicy& policy,
                                   int n_pairs, bool include_actions, std::uint64_t seed,
                                   int max_steps, std::uint64_t env_fingerprint = 0) {
    require_match(mdp, policy);
    if (n_pairs < 1) throw precondition_error("collect_demos: n_pairs must be >= 1");
    Demonstration demo;
    demo.includes_actions = include_actions;
    demo.seed = seed;
    demo.env_fingerprint = env_fingerprint;

    Simulator sim(mdp, max_steps, seed);
    int collected = 0;
    while (collected < n_pairs) {
        std::vector<DemoRecord> episode;
        int s = sim.reset();
        bool done = false;
        while (!done) {
            int a = policy.sample(s, sim.rng());
            StepResult r = sim.step(a);
            DemoRecord rec;
            rec.s = s;
            if (include_actions) rec.a = a;
            rec.s_next = r.next_state;
            episode.push_back(rec);
            ++collected;
            s = r.next_state;
            done = r.done;
            if (collected == n_pairs) break;
        }
        demo.episodes.push_back(std::move(episode));
    }
    demo.pair_count = demo.total_records();
    return demo;
}

/// The reference maze used by the shipped configs: 7x7 with two offset
/// walls forcing an S-shaped detour, start bottom-left, goal top-right.
inline GridSpec default_grid(int k_choices = 1) {
    GridSpec g;
    g.width = 7;
    g.height = 7;
    g.start = {0, 6};
    g.goal = {6, 0};
    g.walls = {{0, 3}, {1, 3}, {2, 3}, {3, 3}, {3, 1}, {4, 1}, {5, 1}, {6, 1}};
    g.k_choices = k_choices;
    return g;
}

/// Open grid with no interior walls; used by the theory checks.
inline GridSpec open_grid(int width, int height, int k_choices) {
    GridSpec g;
    g.width = width;
    g.height = height;
    g.start = {0, height - 1};
    g.goal = {width - 1, 0};
    g.walls = {};
    g.k_choices = k_choices;
    return g;
}

}  // namespace iddlab
