#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "offrl/estimation.hpp"
#include "offrl/instances.hpp"
#include "offrl/planners.hpp"
#include "oracles.hpp"

using namespace offrl;

namespace {

// One state, two arms, H = 1: arm 0 seen four times (mean 0.75), arm 1 once.
EmpiricalModel two_arm_model() {
    Dataset d;
    d.meta = {5, 1, 1, 2, 0};
    d.steps = {{0, 0, 1.0, 0}, {0, 0, 0.0, 0}, {0, 0, 1.0, 0}, {0, 0, 1.0, 0}, {0, 1, 1.0, 0}};
    return fit_empirical_model(count(d));
}

}  // namespace

TEST_CASE("vanilla penalty on a hand-computed bandit") {
    PlannerConfig cfg;
    cfg.c_vpvi = 0.1;
    const auto out = vpvi(two_arm_model(), cfg);
    const double l = std::log(20.0);
    CHECK(out.bonus(0, 0, 0) == doctest::Approx(0.1 * l / 2.0));
    CHECK(out.bonus(0, 0, 1) == doctest::Approx(0.1 * l));
    CHECK(out.q_bar(0, 0, 0) == doctest::Approx(0.75 - 0.1 * l / 2.0));
    CHECK(out.q_bar(0, 0, 1) == doctest::Approx(1.0 - 0.1 * l));
    CHECK(out.policy(0, 0, 1) == 1.0);
    CHECK(out.v_hat(0, 0) == doctest::Approx(1.0 - 0.1 * l));
}

TEST_CASE("Bernstein penalty on a hand-computed bandit") {
    PlannerConfig cfg;
    cfg.c2 = 0.05;
    const auto out = apvi(two_arm_model(), cfg);
    const double l = std::log(20.0);
    // H = 1, so the successor value is zero and only the range term remains.
    CHECK(out.bonus(0, 0, 0) == doctest::Approx(0.05 * l / 4.0));
    CHECK(out.bonus(0, 0, 1) == doctest::Approx(0.05 * l));
    CHECK(out.q_bar(0, 0, 0) == doctest::Approx(0.75 - 0.05 * l / 4.0));
    CHECK(out.q_bar(0, 0, 1) == doctest::Approx(1.0 - 0.05 * l));
    CHECK(out.policy(0, 0, 1) == 1.0);
}

TEST_CASE("default constants clip everything to zero at tiny n and break ties low") {
    const auto out = apvi(two_arm_model(), PlannerConfig{});
    CHECK(out.q_bar(0, 0, 0) == 0.0);
    CHECK(out.q_bar(0, 0, 1) == 0.0);
    CHECK(out.policy(0, 0, 0) == 1.0);
}

TEST_CASE("unvisited arms are never preferred over a positive visited arm") {
    Dataset d;
    d.meta = {400, 1, 1, 3, 0};
    for (int i = 0; i < 400; ++i) d.steps.push_back({0, 1, 1.0, 0});
    const auto em = fit_empirical_model(count(d));
    for (const auto& out : {vpvi(em, PlannerConfig{}), apvi(em, PlannerConfig{})}) {
        CHECK(out.q_bar(0, 0, 1) > 0.0);
        CHECK(out.q_bar(0, 0, 0) == 0.0);
        CHECK(out.q_bar(0, 0, 2) == 0.0);
        CHECK(out.policy(0, 0, 1) == 1.0);
    }
    PlannerConfig cfg;
    const double l = std::log(30.0);
    CHECK(vpvi(em, cfg).bonus(0, 0, 0) == doctest::Approx(2.0 * l));
    CHECK(apvi(em, cfg).bonus(0, 0, 0) == doctest::Approx(2.0 * std::sqrt(l) + 14.0 * l));
}

TEST_CASE("Bernstein penalty uses the empirical variance of the next pessimistic value") {
    const Mdp m = random_mdp(3, 2, 4, 17);
    const auto em = fit_empirical_model(count(rollout(m, uniform_policy(m), 5000, 1)));
    PlannerConfig cfg;
    cfg.c1 = 0.5;
    cfg.c2 = 0.1;
    const auto out = apvi(em, cfg);
    const double l = iota(4, 3, 2, cfg.delta);
    for (int h = 0; h < 4; ++h)
        for (int s = 0; s < 3; ++s)
            for (int a = 0; a < 2; ++a) {
                const auto row = em.transition(h, s, a);
                double mean = 0.0, second = 0.0;
                for (int sp = 0; sp < 3; ++sp) {
                    mean += row[sp] * out.v_hat(h + 1, sp);
                    second += row[sp] * out.v_hat(h + 1, sp) * out.v_hat(h + 1, sp);
                }
                const double n = static_cast<double>(em.visits(h, s, a));
                const double expected = 0.5 * std::sqrt(std::max(0.0, second - mean * mean) * l / n) + 0.1 * 4 * l / n;
                CHECK(std::abs(out.bonus(h, s, a) - expected) < 1e-12);
                const double q = em.r_hat(h, s, a) + mean - expected;
                CHECK(std::abs(out.q_bar(h, s, a) - std::clamp(q, 0.0, 4.0 - h)) < 1e-12);
            }
}

TEST_CASE("clipping keeps pessimistic Q inside [0, H - h]") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const int H = 5;
        const Mdp m = random_mdp(4, 3, H, seed);
        const auto em = fit_empirical_model(count(rollout(m, uniform_policy(m), 10 + 50 * seed, seed)));
        PlannerConfig loose;
        loose.c_vpvi = loose.c1 = loose.c2 = 1e-3;
        for (const auto& cfg : {PlannerConfig{}, loose})
            for (const auto& out : {vpvi(em, cfg), apvi(em, cfg), af_apvi(em, cfg)})
                for (int h = 0; h < H; ++h)
                    for (int s = 0; s < 4; ++s)
                        for (int a = 0; a < 3; ++a) {
                            CHECK(out.q_bar(h, s, a) >= 0.0);
                            CHECK(out.q_bar(h, s, a) <= H - h);
                        }
    }
}

TEST_CASE("disabling the clip exposes negative values") {
    const Mdp m = random_mdp(3, 2, 3, 4);
    const auto em = fit_empirical_model(count(rollout(m, uniform_policy(m), 30, 1)));
    PlannerConfig cfg;
    cfg.clip_enabled = false;
    const auto out = apvi(em, cfg);
    CHECK(*std::min_element(out.q_bar.data().begin(), out.q_bar.data().end()) < 0.0);
}

TEST_CASE("planners are deterministic") {
    const Mdp m = random_mdp(4, 2, 4, 8);
    const auto em = fit_empirical_model(count(rollout(m, uniform_policy(m), 300, 2)));
    CHECK(apvi(em, PlannerConfig{}) == apvi(em, PlannerConfig{}));
    CHECK(vpvi(em, PlannerConfig{}) == vpvi(em, PlannerConfig{}));
    CHECK(af_apvi(em, PlannerConfig{}) == af_apvi(em, PlannerConfig{}));
}

TEST_CASE("pessimistic values lower-bound the learned policy's value at large n") {
    int holds = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Mdp m = random_mdp(3, 2, 3, seed);
        const auto em = fit_empirical_model(count(rollout(m, uniform_policy(m), 20000, seed)));
        const auto out = apvi(em, PlannerConfig{});
        const auto eval = policy_evaluation(m, out.policy);
        bool ok = true;
        for (int s = 0; s < 3; ++s) ok = ok && out.v_hat(0, s) <= eval.V(0, s) + 1e-12;
        holds += ok;
    }
    CHECK(holds >= 18);
}

TEST_CASE("assumption-free planner matches apvi when every cell is visited") {
    const Mdp m = random_mdp(3, 2, 3, 6);
    const auto em = fit_empirical_model(count(rollout(m, uniform_policy(m), 3000, 4)));
    for (auto n : em.counts.n_sa.data()) REQUIRE(n > 0);
    const auto a = apvi(em, PlannerConfig{});
    const auto b = af_apvi(em, PlannerConfig{});
    CHECK(a.policy == b.policy);
    CHECK(a.v_hat == b.v_hat);
    for (double x : b.absorbing_value) CHECK(x == 0.0);
    CHECK(b.absorbing_value.size() == 4);
}

TEST_CASE("assumption-free planner gives unvisited cells zero penalty") {
    const auto inst = two_branch_blind({5, 2, 0.5, 0.75, 0.25});
    const auto em = fit_empirical_model(count(rollout(inst.mdp, inst.mu, 500, 3)));
    REQUIRE(em.visits(1, 1, 1) == 0);
    const auto out = af_apvi(em, PlannerConfig{});
    CHECK(out.bonus(1, 1, 1) == 0.0);
    CHECK(out.q_bar(1, 1, 1) == 0.0);
    CHECK(apvi(em, PlannerConfig{}).bonus(1, 1, 1) > 0.0);
}

TEST_CASE("augmented MDP sandwich and absorbing-mass identity") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const int H = 4, S = 3, A = 2;
        const Mdp m = random_mdp(S, A, H, seed);
        StreamRng rng(seed, 3);
        SAMask mask(H, S, A, 0);
        for (auto& x : mask.data()) x = rng.uniform() < 0.7;
        const auto aug = augment_mdp(m, mask);
        CHECK_NOTHROW(validate_mdp(aug.mdp));
        CHECK(aug.original_states() == S);

        const Policy pi = oracle::random_policy(H, S, A, seed + 5);
        const Policy embedded = embed_policy(pi);
        const double v = policy_evaluation(m, pi).value;
        const double v_aug = policy_evaluation(aug.mdp, embedded).value;
        const auto mass = absorbing_mass(aug, embedded);
        const double lost = std::accumulate(mass.begin() + 1, mass.end(), 0.0);
        CHECK(v_aug <= v + 1e-10);
        CHECK(v - lost <= v_aug + 1e-10);

        // Mass at s-dagger at each step equals the untracked mass of all earlier steps.
        const auto occ = occupancy_measure(aug.mdp, embedded);
        double leaked = 0.0;
        CHECK(mass[0] == 0.0);
        for (int h = 0; h < H; ++h) {
            CHECK(std::abs(mass[h] - leaked) < 1e-10);
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a)
                    if (!mask(h, s, a)) leaked += occ.d(h, s, a);
        }
        CHECK(std::abs(mass[H] - leaked) < 1e-10);
    }
}

TEST_CASE("full mask leaves the MDP unchanged") {
    const Mdp m = random_mdp(3, 2, 4, 1);
    const auto aug = augment_mdp(m, SAMask(4, 3, 2, 1));
    const Policy pi = oracle::random_policy(4, 3, 2, 2);
    CHECK(policy_evaluation(aug.mdp, embed_policy(pi)).value == doctest::Approx(policy_evaluation(m, pi).value));
    for (double x : absorbing_mass(aug, embed_policy(pi))) CHECK(x == 0.0);
}
