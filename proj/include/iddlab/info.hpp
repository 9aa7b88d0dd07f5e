#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "iddlab/common.hpp"
#include "iddlab/occupancy.hpp"

namespace iddlab {

enum class Divergence { KL, JS };

/**
 * KL(p||q) = sum p*log(p/q) or JS(p||q) in nats, with the convention
 * 0*log(0/x) = 0. KL requires q > 0 wherever p > 0 and raises a
 * support_error naming the first offending index otherwise.
 */
inline real divergence(std::span<const real> p, std::span<const real> q, Divergence kind) {
    if (p.size() != q.size()) throw dimension_error("divergence: shape mismatch");
    if (kind == Divergence::KL) {
        real acc = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (p[i] <= 0.0) continue;
            if (q[i] <= 0.0)
                throw support_error("KL divergence: p > 0 where q = 0", static_cast<long>(i));
            acc += p[i] * std::log(p[i] / q[i]);
        }
        return acc;
    }
    // JS via the two KL halves against the mixture; no support issues.
    real acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        real m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0.0) acc += 0.5 * p[i] * std::log(p[i] / m);
        if (q[i] > 0.0) acc += 0.5 * q[i] * std::log(q[i] / m);
    }
    return acc;
}

/// Shannon entropy of a normalized distribution, in nats.
inline real entropy_of(std::span<const real> p) {
    real acc = 0.0;
    for (real x : p)
        if (x > 0.0) acc -= x * std::log(x);
    return acc;
}

struct EntropyTriple {
    real h_sa;         // entropy of rho(s,a)
    real h_a_given_s;  // E_{rho(s,a)}[-log pi(a|s)]
    real h_s;          // entropy of rho(s)
};

/// The three entropies entering the decomposition H(s,a) = H(a|s) + H(s).
inline EntropyTriple entropies(const OccupancySet& occ, const TabularPolicy& policy) {
    if (occ.n_states != policy.n_states() || occ.n_actions != policy.n_actions())
        throw dimension_error("entropies: occupancy/policy shape mismatch");
    EntropyTriple out{};
    out.h_sa = entropy_of(occ.rho_sa);
    out.h_s = entropy_of(occ.rho_s);
    real acc = 0.0;
    for (int s = 0; s < occ.n_states; ++s) {
        auto pi = policy.row(s);
        for (int a = 0; a < occ.n_actions; ++a) {
            real w = occ.sa(s, a);
            if (w > 0.0) acc -= w * std::log(pi[a]);
        }
    }
    out.h_a_given_s = acc;
    return out;
}

/**
 * Exact mutual information I(s;(s',a)) of the joint occupancy, computed
 * directly from rho(s,a,s'), its s-marginal and its (a,s')-marginal.
 */
inline real exact_mutual_information(const OccupancySet& occ) {
    const int S = occ.n_states;
    const int A = occ.n_actions;
    std::vector<real> marg_as(static_cast<std::size_t>(A) * S, 0.0);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a)
            for (int s2 = 0; s2 < S; ++s2)
                marg_as[static_cast<std::size_t>(a) * S + s2] += occ.sas(s, a, s2);

    real acc = 0.0;
    for (int s = 0; s < S; ++s) {
        if (occ.rho_s[s] <= 0.0) continue;
        for (int a = 0; a < A; ++a) {
            for (int s2 = 0; s2 < S; ++s2) {
                real joint = occ.sas(s, a, s2);
                if (joint <= 0.0) continue;
                real prod = occ.rho_s[s] * marg_as[static_cast<std::size_t>(a) * S + s2];
                acc += joint * std::log(joint / prod);
            }
        }
    }
    return acc;
}

/**
 * KL divergence between the inverse dynamics conditionals of the agent
 * and a reference policy, weighted by the agent's joint occupancy:
 * sum rho_pi(s,a,s') * log(cond_pi(a|s,s') / cond_ref(a|s,s')).
 * Nonnegative up to roundoff. The reference table must be defined (and
 * positive) on the agent's support.
 */
inline real inverse_dynamics_disagreement(const OccupancySet& occ_pi,
                                          const InverseDynamicsTable& id_pi,
                                          const InverseDynamicsTable& id_ref) {
    const int S = occ_pi.n_states;
    const int A = occ_pi.n_actions;
    if (id_pi.n_states() != S || id_pi.n_actions() != A || id_ref.n_states() != S ||
        id_ref.n_actions() != A)
        throw dimension_error("inverse_dynamics_disagreement: shape mismatch");

    real acc = 0.0;
    for (int s = 0; s < S; ++s) {
        for (int s2 = 0; s2 < S; ++s2) {
            if (occ_pi.ss(s, s2) <= 0.0) continue;
            if (!id_ref.defined(s, s2))
                throw support_error(
                    "inverse dynamics disagreement: reference undefined on agent support",
                    static_cast<long>(s) * S + s2);
            for (int a = 0; a < A; ++a) {
                real w = occ_pi.sas(s, a, s2);
                if (w <= 0.0) continue;
                real pa = id_pi.cond(s, s2, a);
                real pe = id_ref.cond(s, s2, a);
                if (pe <= 0.0)
                    throw support_error(
                        "inverse dynamics disagreement: reference conditional is zero on agent "
                        "support",
                        static_cast<long>(s) * S + s2);
                acc += w * std::log(pa / pe);
            }
        }
    }
    return acc;
}

}  // namespace iddlab
