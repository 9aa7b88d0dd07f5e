#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "iddlab/common.hpp"
#include "iddlab/generators.hpp"
#include "iddlab/gridworld.hpp"
#include "iddlab/info.hpp"
#include "iddlab/mdp.hpp"
#include "iddlab/occupancy.hpp"

namespace iddlab {

/// Structured result of one numerical certificate.
struct TheoremReport {
    std::string name;
    std::map<std::string, real> terms;
    real residual = 0.0;
    real tolerance = 0.0;
    bool passed = false;

    static TheoremReport make(std::string name, std::map<std::string, real> terms, real residual,
                              real tolerance) {
        TheoremReport r;
        r.name = std::move(name);
        r.terms = std::move(terms);
        r.residual = residual;
        r.tolerance = tolerance;
        r.passed = std::abs(residual) <= tolerance;
        return r;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["name"] = name;
        j["terms"] = terms;
        j["residual"] = residual;
        j["tolerance"] = tolerance;
        j["passed"] = passed;
        return j;
    }
};

namespace detail {

struct PairAnalysis {
    OccupancySet occ_pi, occ_e;
    InverseDynamicsTable id_pi, id_e;
    real idd, kl_sa, kl_ss;
};

inline PairAnalysis analyze_pair(const TabularMdp& mdp, const TabularPolicy& pi,
                                 const TabularPolicy& pi_e) {
    PairAnalysis out;
    out.occ_pi = derive_occupancies(mdp, pi);
    out.occ_e = derive_occupancies(mdp, pi_e);
    out.id_pi = inverse_dynamics(mdp, pi, out.occ_pi);
    out.id_e = inverse_dynamics(mdp, pi_e, out.occ_e);
    out.idd = inverse_dynamics_disagreement(out.occ_pi, out.id_pi, out.id_e);
    out.kl_sa = divergence(out.occ_pi.rho_sa, out.occ_e.rho_sa, Divergence::KL);
    out.kl_ss = divergence(out.occ_pi.rho_ss, out.occ_e.rho_ss, Divergence::KL);
    return out;
}

/// Verifies that every (s,s') with s' != s out of a non-terminal state
/// is generated by exactly one action. Self-transitions are excluded;
/// see the corollary check's notes on bump ambiguity.
inline void require_injective(const TabularMdp& mdp) {
    const int S = mdp.n_states();
    const int A = mdp.n_actions();
    for (int s = 0; s < S; ++s) {
        if (mdp.terminal(s)) continue;
        for (int s2 = 0; s2 < S; ++s2) {
            if (s2 == s) continue;
            int generators = 0;
            for (int a = 0; a < A; ++a)
                if (mdp.trans(s, a, s2) > 0.0) ++generators;
            if (generators > 1)
                throw precondition_error("injectivity scan: transition (" + std::to_string(s) +
                                         "," + std::to_string(s2) + ") has " +
                                         std::to_string(generators) + " generating actions");
        }
    }
}

/// JS divergence between inverse-dynamics conditionals, weighted by the
/// two joint occupancies (the mixture-form expansion).
inline real js_inverse_dynamics(const OccupancySet& occ_pi, const OccupancySet& occ_e,
                                const InverseDynamicsTable& id_pi,
                                const InverseDynamicsTable& id_e) {
    const int S = occ_pi.n_states;
    const int A = occ_pi.n_actions;
    real acc = 0.0;
    for (int s = 0; s < S; ++s) {
        for (int s2 = 0; s2 < S; ++s2) {
            bool on_pi = occ_pi.ss(s, s2) > 0.0;
            bool on_e = occ_e.ss(s, s2) > 0.0;
            if (!on_pi && !on_e) continue;
            for (int a = 0; a < A; ++a) {
                real ppi = on_pi ? id_pi.cond(s, s2, a) : 0.0;
                real pe = on_e ? id_e.cond(s, s2, a) : 0.0;
                real mix = 0.5 * (ppi + pe);
                if (mix <= 0.0) continue;
                real w_pi = occ_pi.sas(s, a, s2);
                real w_e = occ_e.sas(s, a, s2);
                if (w_pi > 0.0 && ppi > 0.0) acc += 0.5 * w_pi * std::log(ppi / mix);
                if (w_e > 0.0 && pe > 0.0) acc += 0.5 * w_e * std::log(pe / mix);
            }
        }
    }
    return acc;
}

}  // namespace detail

/// Gap identity: the inverse dynamics disagreement equals
/// KL(rho_sa_pi || rho_sa_E) - KL(rho_ss_pi || rho_ss_E).
inline TheoremReport check_theorem1(const TabularMdp& mdp, const TabularPolicy& pi,
                                    const TabularPolicy& pi_e, real tolerance = 1e-8) {
    auto pa = detail::analyze_pair(mdp, pi, pi_e);
    real residual = pa.idd - (pa.kl_sa - pa.kl_ss);
    return TheoremReport::make(
        "theorem1", {{"IDD", pa.idd}, {"KL_sa", pa.kl_sa}, {"KL_ss", pa.kl_ss}}, residual,
        tolerance);
}

/// Under injective dynamics the gap vanishes: KL_sa = KL_ss and IDD = 0.
inline TheoremReport check_corollary1(const TabularMdp& mdp, const TabularPolicy& pi,
                                      const TabularPolicy& pi_e, real tolerance = 1e-8) {
    detail::require_injective(mdp);
    auto pa = detail::analyze_pair(mdp, pi, pi_e);
    real gap = pa.kl_sa - pa.kl_ss;
    real residual = std::max(std::abs(gap), pa.idd);
    return TheoremReport::make(
        "corollary1", {{"IDD", pa.idd}, {"KL_sa", pa.kl_sa}, {"KL_ss", pa.kl_ss}}, residual,
        tolerance);
}

/**
 * Pre-supremum form of the entropy bound: when the transition occupancies
 * match, IDD = -H_pi(s,a) + cross-entropy of rho_sa_pi against rho_sa_E.
 * Callers must construct pi with KL(rho_ss_pi || rho_ss_E) <= pre_tol,
 * e.g. by redistributing mass among functionally equivalent actions.
 */
inline TheoremReport check_theorem2(const TabularMdp& mdp, const TabularPolicy& pi,
                                    const TabularPolicy& pi_e, real tolerance = 1e-6,
                                    real pre_tol = 1e-6) {
    auto pa = detail::analyze_pair(mdp, pi, pi_e);
    if (pa.kl_ss > pre_tol)
        throw precondition_error("theorem2: transition occupancies differ, KL_ss = " +
                                 std::to_string(pa.kl_ss));
    real neg_h_sa = -entropy_of(pa.occ_pi.rho_sa);
    real cross = 0.0;
    for (std::size_t i = 0; i < pa.occ_pi.rho_sa.size(); ++i) {
        real p = pa.occ_pi.rho_sa[i];
        if (p <= 0.0) continue;
        real q = pa.occ_e.rho_sa[i];
        if (q <= 0.0)
            throw support_error("theorem2: expert state-action occupancy vanishes on agent support",
                                static_cast<long>(i));
        cross -= p * std::log(q);
    }
    real residual = pa.idd - (neg_h_sa + cross);
    return TheoremReport::make("theorem2",
                               {{"IDD", pa.idd},
                                {"neg_H_sa", neg_h_sa},
                                {"cross_entropy", cross},
                                {"KL_ss", pa.kl_ss}},
                               residual, tolerance);
}

/// H(s,a) = H(a|s) + H(s) on the normalized occupancy measures.
inline TheoremReport check_entropy_decomposition(const TabularMdp& mdp, const TabularPolicy& pi,
                                                 real tolerance = 1e-10) {
    auto occ = derive_occupancies(mdp, pi);
    auto h = entropies(occ, pi);
    real residual = h.h_sa - h.h_a_given_s - h.h_s;
    return TheoremReport::make(
        "entropy_decomposition",
        {{"H_sa", h.h_sa}, {"H_a_given_s", h.h_a_given_s}, {"H_s", h.h_s}}, residual, tolerance);
}

/**
 * I(s;(s',a)) = H(s) when the state is recoverable from (s',a). Requires
 * a deterministic transition tensor; note that determinism of the forward
 * map alone is not sufficient for the identity when several states reach
 * the same (a,s') cell, so callers pick invertible instances.
 */
inline TheoremReport check_mi_identity(const TabularMdp& mdp, const TabularPolicy& pi,
                                       real tolerance = 1e-10) {
    if (!mdp.deterministic())
        throw precondition_error("mi_identity: transition tensor is not deterministic");
    auto occ = derive_occupancies(mdp, pi);
    real mi = exact_mutual_information(occ);
    real h_s = entropy_of(occ.rho_s);
    return TheoremReport::make("mi_identity", {{"I", mi}, {"H_s", h_s}}, mi - h_s, tolerance);
}

/**
 * JS-divergence suite: (a) the joint/state-action identity, (b) the
 * injective-dynamics equality when applicable, and (c) the epsilon term
 * along a logit homotopy from pi to pi_E, which must vanish at t=1.
 * Component residuals are normalized by their own tolerances, so the
 * report passes iff every part is within its stated bound.
 */
inline TheoremReport check_js_identities(const TabularMdp& mdp, const TabularPolicy& pi,
                                         const TabularPolicy& pi_e, int steps = 10) {
    constexpr real tol_lemma = 1e-10;
    constexpr real tol_coro = 1e-8;
    constexpr real tol_eps = 1e-10;

    auto occ_pi = derive_occupancies(mdp, pi);
    auto occ_e = derive_occupancies(mdp, pi_e);
    real js_sas = divergence(occ_pi.rho_sas, occ_e.rho_sas, Divergence::JS);
    real js_sa = divergence(occ_pi.rho_sa, occ_e.rho_sa, Divergence::JS);
    real js_ss = divergence(occ_pi.rho_ss, occ_e.rho_ss, Divergence::JS);
    real res_lemma = js_sas - js_sa;

    bool injective = true;
    try {
        detail::require_injective(mdp);
    } catch (const precondition_error&) {
        injective = false;
    }
    real res_coro = injective ? js_sa - js_ss : 0.0;

    std::map<std::string, real> terms{{"JS_sas", js_sas}, {"JS_sa", js_sa}, {"JS_ss", js_ss}};

    real eps_final = 0.0;
    auto id_e = inverse_dynamics(mdp, pi_e, occ_e);
    for (int i = 0; i <= steps; ++i) {
        real t = static_cast<real>(i) / steps;
        TabularPolicy mix(pi.n_states(), pi.n_actions());
        for (int s = 0; s < pi.n_states(); ++s)
            for (int a = 0; a < pi.n_actions(); ++a)
                mix.set_logit(s, a, (1.0 - t) * pi.logit(s, a) + t * pi_e.logit(s, a));
        auto occ_t = derive_occupancies(mdp, mix);
        auto id_t = inverse_dynamics(mdp, mix, occ_t);
        real sa_t = divergence(occ_t.rho_sa, occ_e.rho_sa, Divergence::JS);
        real ss_t = divergence(occ_t.rho_ss, occ_e.rho_ss, Divergence::JS);
        real inv_t = detail::js_inverse_dynamics(occ_t, occ_e, id_t, id_e);
        real eps = sa_t - ss_t - inv_t;
        terms["eps_t" + std::to_string(i)] = eps;
        if (i == steps) eps_final = eps;
    }

    real residual = std::abs(res_lemma) / tol_lemma;
    residual = std::max(residual, std::abs(res_coro) / tol_coro);
    residual = std::max(residual, std::abs(eps_final) / tol_eps);
    terms["res_lemma"] = res_lemma;
    terms["res_corollary"] = res_coro;
    terms["injective"] = injective ? 1.0 : 0.0;
    return TheoremReport::make("js_identities", std::move(terms), residual, 1.0);
}

struct CurvePoint {
    int k;
    real estimate;
    real std_error;
};

/**
 * Monte-Carlo estimate of E_{theta ~ N(0, I_k)}[ KL(Uniform(k) || softmax(theta)) ]
 * for each k, with the per-k standard error. Deterministic given the seed.
 */
inline std::vector<CurvePoint> approx_idd_curve(const std::vector<int>& k_values, int n_samples,
                                                std::uint64_t seed) {
    if (n_samples < 1) throw precondition_error("approx_idd_curve: n_samples must be >= 1");
    rng_t rng(seed);
    std::vector<CurvePoint> out;
    std::vector<real> theta;
    for (int k : k_values) {
        if (k < 1) throw precondition_error("approx_idd_curve: k must be >= 1");
        theta.resize(k);
        real sum = 0.0, sumsq = 0.0;
        for (int i = 0; i < n_samples; ++i) {
            for (int j = 0; j < k; ++j) theta[j] = normal01(rng);
            real mx = *std::max_element(theta.begin(), theta.end());
            real z = 0.0;
            for (int j = 0; j < k; ++j) z += std::exp(theta[j] - mx);
            real logz = mx + std::log(z);
            // KL(u_k || softmax(theta)) = -log k - (1/k) sum_j log p_j
            real kl = -std::log(static_cast<real>(k));
            for (int j = 0; j < k; ++j) kl -= (theta[j] - logz) / k;
            sum += kl;
            sumsq += kl * kl;
        }
        real mean = sum / n_samples;
        real var = std::max(0.0, sumsq / n_samples - mean * mean);
        real se = n_samples > 1 ? std::sqrt(var / n_samples) : 0.0;
        out.push_back({k, mean, se});
    }
    return out;
}

/// Report form of the curve: zero at k=1 and non-decreasing within two
/// combined Monte-Carlo standard errors per adjacent pair.
inline TheoremReport check_idd_curve_trend(const std::vector<CurvePoint>& curve) {
    std::map<std::string, real> terms;
    real residual = 0.0;
    for (const auto& p : curve) {
        terms["estimate_k" + std::to_string(p.k)] = p.estimate;
        terms["stderr_k" + std::to_string(p.k)] = p.std_error;
        if (p.k == 1) residual = std::max(residual, std::abs(p.estimate));
    }
    for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
        real slack = 2.0 * (curve[i].std_error + curve[i + 1].std_error);
        real drop = curve[i].estimate - curve[i + 1].estimate - slack;
        residual = std::max(residual, std::max(0.0, drop));
    }
    return TheoremReport::make("idd_curve_trend", std::move(terms), residual, 1e-12);
}

}  // namespace iddlab
