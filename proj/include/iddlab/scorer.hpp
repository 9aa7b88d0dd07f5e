#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "iddlab/common.hpp"

namespace iddlab {

enum class ScorerKind { Tabular, Mlp };

/// Input signature of a scorer: which parts of a transition it reads.
enum class Signature {
    StateAction,      // (s, a)
    StateState,       // (s, s')
    State,            // (s)
    StateNextAction,  // (s, (s', a))
};

struct ScorerInput {
    int s = 0;
    int a = 0;
    int s_next = 0;
};

/**
 * Scalar function approximator over one-hot encoded transition parts.
 * Tabular kind is a plain lookup table over the joint input index; mlp
 * kind is a tanh network with a linear scalar head. Both expose exact
 * analytic parameter gradients.
 */
class Scorer {
  public:
    Scorer() = default;

    Scorer(ScorerKind kind, Signature sig, int n_states, int n_actions,
           std::vector<int> hidden = {64, 64}, rng_t* rng = nullptr)
        : kind_(kind), sig_(sig), n_states_(n_states), n_actions_(n_actions) {
        if (kind_ == ScorerKind::Tabular) {
            params_.assign(table_size(), 0.0);
        } else {
            layer_sizes_.push_back(input_dim());
            for (int h : hidden) layer_sizes_.push_back(h);
            layer_sizes_.push_back(1);
            std::size_t total = 0;
            for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l)
                total += static_cast<std::size_t>(layer_sizes_[l + 1]) * layer_sizes_[l] +
                         layer_sizes_[l + 1];
            params_.assign(total, 0.0);
            if (rng) init_weights(*rng);
            acts_.resize(layer_sizes_.size());
            deltas_.resize(layer_sizes_.size());
            for (std::size_t l = 0; l < layer_sizes_.size(); ++l) {
                acts_[l].resize(layer_sizes_[l]);
                deltas_[l].resize(layer_sizes_[l]);
            }
        }
    }

    ScorerKind kind() const { return kind_; }
    Signature signature() const { return sig_; }
    std::vector<real>& params() { return params_; }
    const std::vector<real>& params() const { return params_; }
    std::size_t n_params() const { return params_.size(); }

    /// Value at one input.
    real value(const ScorerInput& in) const {
        if (kind_ == ScorerKind::Tabular) return params_[flat_index(in)];
        return forward(in);
    }

    /// Value at one input; also accumulates coef * d(value)/d(params)
    /// into grad, which must have n_params() entries.
    real value_accumulate_grad(const ScorerInput& in, real coef, std::span<real> grad) const {
        if (grad.size() != params_.size())
            throw dimension_error("scorer: gradient buffer size mismatch");
        if (kind_ == ScorerKind::Tabular) {
            std::size_t i = flat_index(in);
            grad[i] += coef;
            return params_[i];
        }
        real out = forward(in);
        backward(in, coef, grad);
        return out;
    }

  private:
    int input_dim() const {
        switch (sig_) {
            case Signature::StateAction: return n_states_ + n_actions_;
            case Signature::StateState: return 2 * n_states_;
            case Signature::State: return n_states_;
            default: return 2 * n_states_ + n_actions_;
        }
    }

    std::size_t table_size() const {
        switch (sig_) {
            case Signature::StateAction:
                return static_cast<std::size_t>(n_states_) * n_actions_;
            case Signature::StateState:
                return static_cast<std::size_t>(n_states_) * n_states_;
            case Signature::State: return static_cast<std::size_t>(n_states_);
            default: return static_cast<std::size_t>(n_states_) * n_states_ * n_actions_;
        }
    }

    std::size_t flat_index(const ScorerInput& in) const {
        check_range(in);
        switch (sig_) {
            case Signature::StateAction:
                return static_cast<std::size_t>(in.s) * n_actions_ + in.a;
            case Signature::StateState:
                return static_cast<std::size_t>(in.s) * n_states_ + in.s_next;
            case Signature::State: return static_cast<std::size_t>(in.s);
            default:
                return (static_cast<std::size_t>(in.s) * n_states_ + in.s_next) * n_actions_ +
                       in.a;
        }
    }

    void check_range(const ScorerInput& in) const {
        bool needs_a = sig_ == Signature::StateAction || sig_ == Signature::StateNextAction;
        bool needs_n = sig_ == Signature::StateState || sig_ == Signature::StateNextAction;
        if (in.s < 0 || in.s >= n_states_ || (needs_a && (in.a < 0 || in.a >= n_actions_)) ||
            (needs_n && (in.s_next < 0 || in.s_next >= n_states_)))
            throw dimension_error("scorer: input does not match signature ranges");
    }

    /// Hot indices of the one-hot encoding, in block order.
    void hot_indices(const ScorerInput& in, int out[3], int& count) const {
        check_range(in);
        count = 0;
        switch (sig_) {
            case Signature::StateAction:
                out[count++] = in.s;
                out[count++] = n_states_ + in.a;
                break;
            case Signature::StateState:
                out[count++] = in.s;
                out[count++] = n_states_ + in.s_next;
                break;
            case Signature::State: out[count++] = in.s; break;
            default:
                out[count++] = in.s;
                out[count++] = n_states_ + in.s_next;
                out[count++] = 2 * n_states_ + in.a;
                break;
        }
    }

    void init_weights(rng_t& rng) {
        std::size_t off = 0;
        for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
            int rows = layer_sizes_[l + 1], cols = layer_sizes_[l];
            real scale = 1.0 / std::sqrt(static_cast<real>(cols));
            for (int i = 0; i < rows * cols; ++i) params_[off + i] = scale * normal01(rng);
            off += static_cast<std::size_t>(rows) * cols + rows;  // biases stay zero
        }
    }

    real forward(const ScorerInput& in) const {
        int hot[3];
        int nhot = 0;
        hot_indices(in, hot, nhot);
        const int L = static_cast<int>(layer_sizes_.size());
        std::size_t off = 0;
        for (int l = 0; l + 1 < L; ++l) {
            int rows = layer_sizes_[l + 1], cols = layer_sizes_[l];
            const real* w = params_.data() + off;
            const real* b = w + static_cast<std::size_t>(rows) * cols;
            real* out = acts_[l + 1].data();
            if (l == 0) {
                for (int r = 0; r < rows; ++r) {
                    real z = b[r];
                    for (int h = 0; h < nhot; ++h) z += w[static_cast<std::size_t>(r) * cols + hot[h]];
                    out[r] = z;
                }
            } else {
                const real* prev = acts_[l].data();
                for (int r = 0; r < rows; ++r) {
                    real z = b[r];
                    const real* wr = w + static_cast<std::size_t>(r) * cols;
                    for (int c = 0; c < cols; ++c) z += wr[c] * prev[c];
                    out[r] = z;
                }
            }
            if (l + 2 < L)
                for (int r = 0; r < rows; ++r) out[r] = std::tanh(out[r]);
            off += static_cast<std::size_t>(rows) * cols + rows;
        }
        return acts_.back()[0];
    }

    void backward(const ScorerInput& in, real coef, std::span<real> grad) const {
        int hot[3];
        int nhot = 0;
        hot_indices(in, hot, nhot);
        const int L = static_cast<int>(layer_sizes_.size());
        std::vector<std::size_t> offsets(L - 1);
        std::size_t off = 0;
        for (int l = 0; l + 1 < L; ++l) {
            offsets[l] = off;
            off += static_cast<std::size_t>(layer_sizes_[l + 1]) * layer_sizes_[l] +
                   layer_sizes_[l + 1];
        }
        deltas_.back()[0] = coef;
        for (int l = L - 2; l >= 0; --l) {
            int rows = layer_sizes_[l + 1], cols = layer_sizes_[l];
            const real* w = params_.data() + offsets[l];
            real* gw = grad.data() + offsets[l];
            real* gb = gw + static_cast<std::size_t>(rows) * cols;
            const real* delta = deltas_[l + 1].data();
            if (l == 0) {
                for (int r = 0; r < rows; ++r) {
                    for (int h = 0; h < nhot; ++h)
                        gw[static_cast<std::size_t>(r) * cols + hot[h]] += delta[r];
                    gb[r] += delta[r];
                }
            } else {
                const real* prev = acts_[l].data();
                real* dprev = deltas_[l].data();
                std::fill(dprev, dprev + cols, 0.0);
                for (int r = 0; r < rows; ++r) {
                    const real* wr = w + static_cast<std::size_t>(r) * cols;
                    real* gwr = gw + static_cast<std::size_t>(r) * cols;
                    for (int c = 0; c < cols; ++c) {
                        gwr[c] += delta[r] * prev[c];
                        dprev[c] += wr[c] * delta[r];
                    }
                    gb[r] += delta[r];
                }
                // tanh derivative through the activation of layer l
                for (int c = 0; c < cols; ++c) dprev[c] *= 1.0 - prev[c] * prev[c];
            }
        }
    }

    ScorerKind kind_ = ScorerKind::Tabular;
    Signature sig_ = Signature::StateAction;
    int n_states_ = 0;
    int n_actions_ = 0;
    std::vector<int> layer_sizes_;
    std::vector<real> params_;
    mutable std::vector<std::vector<real>> acts_;
    mutable std::vector<std::vector<real>> deltas_;
};

enum class OptimizerKind { SgdMomentum, Adam };

/**
 * Gradient-ascent parameter optimizer. Plain stochastic gradient with
 * momentum 0.9 by default; Adam available behind a flag.
 */
class Optimizer {
  public:
    Optimizer() = default;
    Optimizer(OptimizerKind kind, std::size_t n_params) : kind_(kind), velocity_(n_params, 0.0) {
        if (kind_ == OptimizerKind::Adam) second_.assign(n_params, 0.0);
    }

    void step(std::span<real> params, std::span<const real> grad, real lr) {
        if (params.size() != velocity_.size() || grad.size() != velocity_.size())
            throw dimension_error("optimizer: size mismatch");
        if (kind_ == OptimizerKind::SgdMomentum) {
            for (std::size_t i = 0; i < params.size(); ++i) {
                velocity_[i] = momentum_ * velocity_[i] + grad[i];
                params[i] += lr * velocity_[i];
            }
        } else {
            ++t_;
            const real b1 = 0.9, b2 = 0.999, eps = 1e-8;
            real c1 = 1.0 - std::pow(b1, static_cast<real>(t_));
            real c2 = 1.0 - std::pow(b2, static_cast<real>(t_));
            for (std::size_t i = 0; i < params.size(); ++i) {
                velocity_[i] = b1 * velocity_[i] + (1.0 - b1) * grad[i];
                second_[i] = b2 * second_[i] + (1.0 - b2) * grad[i] * grad[i];
                params[i] += lr * (velocity_[i] / c1) / (std::sqrt(second_[i] / c2) + eps);
            }
        }
    }

  private:
    OptimizerKind kind_ = OptimizerKind::SgdMomentum;
    real momentum_ = 0.9;
    long t_ = 0;
    std::vector<real> velocity_;
    std::vector<real> second_;
};

}  // namespace iddlab
