#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "iddlab/common.hpp"
#include "iddlab/mdp.hpp"

namespace iddlab {

/**
 * Normalized occupancy measures of one policy on one MDP. The discounted
 * visitation series sums to 1/(1-gamma); everything here is rescaled by
 * (1-gamma) so each array is a probability distribution and can be fed
 * to divergences and entropies directly.
 */
struct OccupancySet {
    int n_states = 0;
    int n_actions = 0;
    real gamma_used = 0.0;

    std::vector<real> rho_s;    // [s]
    std::vector<real> rho_sa;   // [s][a]
    std::vector<real> rho_ss;   // [s][s']
    std::vector<real> rho_sas;  // [s][a][s']

    real sa(int s, int a) const { return rho_sa[static_cast<std::size_t>(s) * n_actions + a]; }
    real ss(int s, int s2) const { return rho_ss[static_cast<std::size_t>(s) * n_states + s2]; }
    real sas(int s, int a, int s2) const {
        return rho_sas[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
    }
};

/// Dense-solve cap; beyond this the LU path is refused.
inline constexpr int kMaxDenseStates = 10000;

/**
 * Solves the occupancy fixed point rho = (1-gamma)*mu + gamma*P^T rho
 * exactly via dense LU of (I - gamma*P_pi^T), where P_pi is the policy's
 * state transition kernel. Deterministic for identical inputs.
 */
inline std::vector<real> solve_state_occupancy(const TabularMdp& mdp,
                                               const TabularPolicy& policy) {
    require_match(mdp, policy);
    const int S = mdp.n_states();
    const int A = mdp.n_actions();
    if (S > kMaxDenseStates)
        throw dimension_error("solve_state_occupancy: state space exceeds dense cap");

    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S);
    for (int s = 0; s < S; ++s) {
        auto pi = policy.row(s);
        for (int a = 0; a < A; ++a) {
            if (pi[a] == 0.0) continue;
            for (int s2 = 0; s2 < S; ++s2) {
                real t = mdp.trans(s, a, s2);
                if (t != 0.0) system(s2, s) -= mdp.gamma() * pi[a] * t;  // transposed kernel
            }
        }
    }
    Eigen::VectorXd mu(S);
    for (int s = 0; s < S; ++s) mu(s) = mdp.init(s);

    Eigen::VectorXd x = system.partialPivLu().solve(mu);
    if (!x.allFinite())
        throw error("solve_state_occupancy: singular system (should not happen for gamma<1)");

    std::vector<real> rho(S);
    const real scale = 1.0 - mdp.gamma();
    for (int s = 0; s < S; ++s) rho[s] = scale * std::max(x(s), 0.0);
    return rho;
}

/**
 * Derives all four occupancy measures from the state occupancy:
 * rho(s,a) = rho(s)*pi(a|s), rho(s,a,s') = rho(s,a)*T(s'|s,a) and
 * rho(s,s') as the action marginal.
 */
inline OccupancySet derive_occupancies(const TabularMdp& mdp, const TabularPolicy& policy) {
    require_match(mdp, policy);
    const int S = mdp.n_states();
    const int A = mdp.n_actions();

    OccupancySet occ;
    occ.n_states = S;
    occ.n_actions = A;
    occ.gamma_used = mdp.gamma();
    occ.rho_s = solve_state_occupancy(mdp, policy);
    occ.rho_sa.assign(static_cast<std::size_t>(S) * A, 0.0);
    occ.rho_ss.assign(static_cast<std::size_t>(S) * S, 0.0);
    occ.rho_sas.assign(static_cast<std::size_t>(S) * A * S, 0.0);

    for (int s = 0; s < S; ++s) {
        auto pi = policy.row(s);
        for (int a = 0; a < A; ++a) {
            real sa = occ.rho_s[s] * pi[a];
            occ.rho_sa[static_cast<std::size_t>(s) * A + a] = sa;
            if (sa == 0.0) continue;
            for (int s2 = 0; s2 < S; ++s2) {
                real joint = sa * mdp.trans(s, a, s2);
                if (joint == 0.0) continue;
                occ.rho_sas[(static_cast<std::size_t>(s) * A + a) * S + s2] = joint;
                occ.rho_ss[static_cast<std::size_t>(s) * S + s2] += joint;
            }
        }
    }
    return occ;
}

/**
 * Conditional action distribution given a state transition,
 * cond(a|s,s') = T(s'|s,a)*pi(a|s) / sum_b T(s'|s,b)*pi(b|s).
 * Defined only on the support of rho(s,s'); off-support entries are NaN
 * and flagged, never silently zero.
 */
class InverseDynamicsTable {
  public:
    InverseDynamicsTable() = default;

    InverseDynamicsTable(int n_states, int n_actions)
        : n_states_(n_states),
          n_actions_(n_actions),
          cond_(static_cast<std::size_t>(n_states) * n_states * n_actions,
                std::numeric_limits<real>::quiet_NaN()),
          defined_(static_cast<std::size_t>(n_states) * n_states, 0) {}

    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }

    bool defined(int s, int s2) const {
        return defined_[static_cast<std::size_t>(s) * n_states_ + s2] != 0;
    }

    real cond(int s, int s2, int a) const {
        return cond_[(static_cast<std::size_t>(s) * n_states_ + s2) * n_actions_ + a];
    }

    void set_row(int s, int s2, std::span<const real> probs) {
        defined_[static_cast<std::size_t>(s) * n_states_ + s2] = 1;
        real* out = cond_.data() + (static_cast<std::size_t>(s) * n_states_ + s2) * n_actions_;
        for (int a = 0; a < n_actions_; ++a) out[a] = probs[a];
    }

  private:
    int n_states_ = 0;
    int n_actions_ = 0;
    std::vector<real> cond_;
    std::vector<std::uint8_t> defined_;
};

inline InverseDynamicsTable inverse_dynamics(const TabularMdp& mdp, const TabularPolicy& policy,
                                             const OccupancySet& occ) {
    require_match(mdp, policy);
    if (occ.n_states != mdp.n_states() || occ.n_actions != mdp.n_actions())
        throw dimension_error("inverse_dynamics: occupancy shape mismatch");

    const int S = mdp.n_states();
    const int A = mdp.n_actions();
    InverseDynamicsTable table(S, A);
    std::vector<real> row(A);
    for (int s = 0; s < S; ++s) {
        auto pi = policy.row(s);
        for (int s2 = 0; s2 < S; ++s2) {
            if (occ.ss(s, s2) <= 0.0) continue;
            real denom = 0.0;
            for (int a = 0; a < A; ++a) {
                row[a] = mdp.trans(s, a, s2) * pi[a];
                denom += row[a];
            }
            if (denom <= 0.0) continue;  // unreachable given rho_ss > 0
            for (int a = 0; a < A; ++a) row[a] /= denom;
            table.set_row(s, s2, row);
        }
    }
    return table;
}

}  // namespace iddlab
