#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "iddlab/common.hpp"
#include "iddlab/mdp.hpp"

namespace iddlab {

/// Dense random MDP: each transition row is a normalized vector of
/// Exp(1) draws, the initial distribution likewise. No terminal states.
inline TabularMdp random_mdp(int n_states, int n_actions, real gamma, rng_t& rng) {
    TabularMdp m(n_states, n_actions, gamma);
    auto draw_row = [&](real* out, int n) {
        real total = 0.0;
        for (int i = 0; i < n; ++i) {
            out[i] = -std::log(1.0 - uniform01(rng));
            total += out[i];
        }
        for (int i = 0; i < n; ++i) out[i] /= total;
        // renormalize in a second pass so the row sums to 1 within 1e-12
        real s2 = std::accumulate(out, out + n, 0.0);
        for (int i = 0; i < n; ++i) out[i] /= s2;
    };
    std::vector<real> row(n_states);
    for (int s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a) {
            draw_row(row.data(), n_states);
            for (int s2 = 0; s2 < n_states; ++s2) m.trans(s, a, s2) = row[s2];
        }
    draw_row(row.data(), n_states);
    for (int s = 0; s < n_states; ++s) m.init(s) = row[s];
    return m;
}

/// Random softmax policy with logits ~ N(0, scale^2).
inline TabularPolicy random_policy(int n_states, int n_actions, rng_t& rng, real scale = 1.0) {
    TabularPolicy p(n_states, n_actions);
    for (int s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a) p.set_logit(s, a, scale * normal01(rng));
    return p;
}

/**
 * Deterministic MDP whose actions are distinct permutation matrices with
 * no two actions agreeing on any row. Such dynamics are injective with
 * respect to the action (each reachable (s,s') has exactly one generating
 * action) and invertible (each (a,s') has exactly one source state).
 * Requires n_actions <= n_states.
 */
inline TabularMdp permutation_mdp(int n_states, int n_actions, real gamma, rng_t& rng) {
    if (n_actions > n_states)
        throw precondition_error("permutation_mdp: needs n_actions <= n_states");
    std::vector<std::vector<int>> perms;
    int guard = 0;
    while (static_cast<int>(perms.size()) < n_actions) {
        if (++guard > 100000) throw error("permutation_mdp: rejection sampling stalled");
        std::vector<int> perm(n_states);
        std::iota(perm.begin(), perm.end(), 0);
        for (int i = n_states - 1; i > 0; --i) {
            int j = static_cast<int>(uniform01(rng) * (i + 1));
            if (j > i) j = i;
            std::swap(perm[i], perm[j]);
        }
        bool clash = false;
        for (const auto& other : perms) {
            for (int s = 0; s < n_states && !clash; ++s)
                if (other[s] == perm[s]) clash = true;
            if (clash) break;
        }
        if (!clash) perms.push_back(std::move(perm));
    }
    TabularMdp m(n_states, n_actions, gamma);
    for (int a = 0; a < n_actions; ++a)
        for (int s = 0; s < n_states; ++s) m.trans(s, a, perms[a][s]) = 1.0;
    for (int s = 0; s < n_states; ++s) m.init(s) = 1.0 / n_states;
    return m;
}

/// Two-state single-action toggle s0 <-> s1.
inline TabularMdp toggle_mdp(real gamma, real mu0 = 0.5) {
    TabularMdp m(2, 1, gamma);
    m.trans(0, 0, 1) = 1.0;
    m.trans(1, 0, 0) = 1.0;
    m.init(0) = mu0;
    m.init(1) = 1.0 - mu0;
    return m;
}

/// Deterministic n-state cycle 0 -> 1 -> ... -> 0, one action.
inline TabularMdp cycle_mdp(int n_states, real gamma) {
    TabularMdp m(n_states, 1, gamma);
    for (int s = 0; s < n_states; ++s) m.trans(s, 0, (s + 1) % n_states) = 1.0;
    m.init(0) = 1.0;
    return m;
}

}  // namespace iddlab
