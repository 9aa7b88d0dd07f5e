#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "iddlab/common.hpp"
#include "iddlab/scorer.hpp"

namespace iddlab {

/**
 * Donsker-Varadhan lower-bound estimator of I(s;(s',a)). The score
 * function T is a Scorer over the (s,(s',a)) signature; updates ascend
 * E_joint[T] - log E_marg[e^T] with the log-partition gradient
 * bias-corrected by an exponential moving average of E[e^T].
 */
class MineEstimator {
  public:
    MineEstimator() = default;

    MineEstimator(ScorerKind kind, int n_states, int n_actions, OptimizerKind opt,
                  std::vector<int> hidden, rng_t* rng, real ema_decay = 0.99)
        : scorer_(kind, Signature::StateNextAction, n_states, n_actions, std::move(hidden), rng),
          opt_(opt, scorer_.n_params()),
          ema_decay_(ema_decay) {}

    const Scorer& scorer() const { return scorer_; }
    Scorer& scorer() { return scorer_; }
    long steps() const { return steps_; }
    real ema_partition() const { return ema_partition_; }

    /// Current bound value on the given batches, without updating.
    real estimate(std::span<const ScorerInput> joint, std::span<const ScorerInput> marginal) const {
        real mean_t = 0.0;
        for (const auto& x : joint) mean_t += scorer_.value(x);
        mean_t /= static_cast<real>(joint.size());
        real mean_e = 0.0;
        for (const auto& x : marginal) mean_e += std::exp(std::min(scorer_.value(x), 700.0));
        mean_e /= static_cast<real>(marginal.size());
        return mean_t - std::log(mean_e);
    }

    /**
     * One ascent step on the DV bound. `joint` holds observed (s,(s',a))
     * samples; `marginal` the same pairs with s shuffled across the batch.
     * Returns the bound estimate before the step.
     */
    real update(std::span<const ScorerInput> joint, std::span<const ScorerInput> marginal,
                real lr) {
        if (joint.empty() || marginal.empty()) throw precondition_error("mine: empty batch");
        grad_.assign(scorer_.n_params(), 0.0);

        const real inv_j = 1.0 / static_cast<real>(joint.size());
        real mean_t = 0.0;
        for (const auto& x : joint) mean_t += scorer_.value_accumulate_grad(x, inv_j, grad_);
        mean_t *= inv_j;

        // exp(T) and its weighted gradient over the marginal batch
        const real inv_m = 1.0 / static_cast<real>(marginal.size());
        exp_vals_.resize(marginal.size());
        real mean_e = 0.0;
        for (std::size_t i = 0; i < marginal.size(); ++i) {
            exp_vals_[i] = std::exp(std::min(scorer_.value(marginal[i]), 700.0));
            mean_e += exp_vals_[i];
        }
        mean_e *= inv_m;

        if (steps_ == 0)
            ema_partition_ = mean_e;
        else
            ema_partition_ = ema_decay_ * ema_partition_ + (1.0 - ema_decay_) * mean_e;

        for (std::size_t i = 0; i < marginal.size(); ++i)
            scorer_.value_accumulate_grad(marginal[i], -exp_vals_[i] * inv_m / ema_partition_,
                                          grad_);

        opt_.step(scorer_.params(), grad_, lr);
        ++steps_;
        return mean_t - std::log(mean_e);
    }

  private:
    Scorer scorer_;
    Optimizer opt_;
    real ema_decay_ = 0.99;
    real ema_partition_ = 0.0;
    long steps_ = 0;
    std::vector<real> grad_;
    std::vector<real> exp_vals_;
};

}  // namespace iddlab
