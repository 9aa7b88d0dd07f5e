#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "iddlab/scorer.hpp"

using namespace iddlab;

namespace {

ScorerInput random_input(rng_t& rng, int S, int A) {
    ScorerInput in;
    in.s = static_cast<int>(uniform01(rng) * S) % S;
    in.a = static_cast<int>(uniform01(rng) * A) % A;
    in.s_next = static_cast<int>(uniform01(rng) * S) % S;
    return in;
}

// Central finite differences with step 1e-5, relative error threshold 1e-4.
void check_gradient(Scorer& scorer, const ScorerInput& in, real tol = 1e-4) {
    std::vector<real> grad(scorer.n_params(), 0.0);
    scorer.value_accumulate_grad(in, 1.0, grad);
    const real h = 1e-5;
    for (std::size_t i = 0; i < scorer.n_params(); ++i) {
        real saved = scorer.params()[i];
        scorer.params()[i] = saved + h;
        real up = scorer.value(in);
        scorer.params()[i] = saved - h;
        real down = scorer.value(in);
        scorer.params()[i] = saved;
        real fd = (up - down) / (2.0 * h);
        real scale = std::max({std::abs(fd), std::abs(grad[i]), 1e-6});
        REQUIRE(std::abs(fd - grad[i]) / scale <= tol);
    }
}

}  // namespace

TEST_CASE("zero-parameter mlp evaluates to zero") {
    Scorer s(ScorerKind::Mlp, Signature::StateState, 4, 2, {8});
    REQUIRE(s.value({1, 0, 2}) == 0.0);
}

TEST_CASE("tabular gradient is one-hot at the input index") {
    Scorer s(ScorerKind::Tabular, Signature::StateAction, 3, 2);
    std::vector<real> grad(s.n_params(), 0.0);
    s.value_accumulate_grad({2, 1, 0}, 1.0, grad);
    for (std::size_t i = 0; i < grad.size(); ++i)
        REQUIRE(grad[i] == (i == 2u * 2u + 1u ? 1.0 : 0.0));
}

TEST_CASE("analytic gradients match finite differences across the matrix") {
    rng_t rng(11);
    const int S = 5, A = 3;
    for (Signature sig : {Signature::StateAction, Signature::StateState, Signature::State,
                          Signature::StateNextAction}) {
        Scorer tab(ScorerKind::Tabular, sig, S, A);
        for (std::size_t i = 0; i < tab.n_params(); ++i) tab.params()[i] = normal01(rng);
        for (int probe = 0; probe < 5; ++probe) check_gradient(tab, random_input(rng, S, A));

        for (const std::vector<int>& hidden : {std::vector<int>{8}, std::vector<int>{64, 64}}) {
            Scorer mlp(ScorerKind::Mlp, sig, S, A, hidden, &rng);
            for (int probe = 0; probe < 5; ++probe) check_gradient(mlp, random_input(rng, S, A));
        }
    }
}

TEST_CASE("scorer forward is finite for finite parameters") {
    rng_t rng(3);
    Scorer s(ScorerKind::Mlp, Signature::StateNextAction, 6, 4, {16, 16}, &rng);
    for (int i = 0; i < 50; ++i) REQUIRE(std::isfinite(s.value(random_input(rng, 6, 4))));
}

TEST_CASE("signature range violations are rejected") {
    Scorer s(ScorerKind::Tabular, Signature::StateAction, 3, 2);
    REQUIRE_THROWS_AS(s.value({3, 0, 0}), dimension_error);
    REQUIRE_THROWS_AS(s.value({0, 2, 0}), dimension_error);
}

TEST_CASE("momentum optimizer accumulates velocity") {
    Optimizer opt(OptimizerKind::SgdMomentum, 1);
    std::vector<real> p{0.0}, g{1.0};
    opt.step(p, g, 0.1);
    REQUIRE_THAT(p[0], Catch::Matchers::WithinAbs(0.1, 1e-15));
    opt.step(p, g, 0.1);
    REQUIRE_THAT(p[0], Catch::Matchers::WithinAbs(0.1 + 0.19, 1e-15));
}

TEST_CASE("adam takes a bounded first step") {
    Optimizer opt(OptimizerKind::Adam, 2);
    std::vector<real> p{0.0, 0.0}, g{100.0, -0.001};
    opt.step(p, g, 0.01);
    REQUIRE_THAT(p[0], Catch::Matchers::WithinAbs(0.01, 1e-6));
    REQUIRE_THAT(p[1], Catch::Matchers::WithinAbs(-0.01, 1e-6));
}
