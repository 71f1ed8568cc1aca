#include <doctest.h>

#include <cmath>

#include "offrl/bounds.hpp"
#include "offrl/estimation.hpp"
#include "offrl/instances.hpp"
#include "oracles.hpp"

using namespace offrl;

TEST_CASE("hard instance closed forms") {
    const auto inst = hard_minimax_instance({2, 5, 0.75, 0.25, OptimalArm::A1, 1, {}});
    CHECK_NOTHROW(validate_mdp(inst.mdp));
    const auto opt = optimal_planning(inst.mdp);
    CHECK(opt.values.value == 3.0);
    CHECK(opt.policy(0, 0, 0) == 1.0);
    const double wrong = opt.values.Q(0, 0, 1);
    CHECK(opt.values.value - wrong == 2.0);
    // Brute force over all deterministic policies agrees.
    CHECK(oracle::brute_force_optimal_value(inst.mdp) == doctest::Approx(3.0));

    const auto var = variance_table(inst.mdp, opt.values.V);
    CHECK(var(0, 0, 0) == doctest::Approx(0.75 * 0.25 * 16.0));
}

TEST_CASE("hard instance with a later decision step and the second arm optimal") {
    for (int shift = 1; shift <= 4; ++shift) {
        const int H = 6;
        const auto inst = hard_minimax_instance({4, H, 0.6, 0.4, OptimalArm::A2, shift, {}});
        const auto opt = optimal_planning(inst.mdp);
        CHECK(opt.values.value == doctest::Approx(0.6 * (H - shift)));
        CHECK(opt.policy(shift - 1, 0, 1) == 1.0);
        CHECK(opt.values.value - opt.values.Q(shift - 1, 0, 0) == doctest::Approx(0.2 * (H - shift)));
        const auto var = variance_table(inst.mdp, opt.values.V);
        CHECK(var(shift - 1, 0, 1) == doctest::Approx(0.24 * (H - shift) * (H - shift)));
    }
}

TEST_CASE("hard instance behavior weights and parameter checks") {
    const auto inst = hard_minimax_instance({3, 4, 0.7, 0.3, OptimalArm::A1, 2, {0.5, 0.3, 0.2}});
    CHECK(inst.mu(1, 0, 1) == 0.3);
    CHECK(inst.mu(0, 0, 1) == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS(hard_minimax_instance({2, 5, 0.8, 0.25, OptimalArm::A1, 1, {}}));
    CHECK_THROWS(hard_minimax_instance({2, 5, 0.25, 0.75, OptimalArm::A1, 1, {}}));
    CHECK_THROWS(hard_minimax_instance({2, 5, 0.75, 0.25, OptimalArm::A1, 5, {}}));
    CHECK_THROWS(hard_minimax_instance({2, 5, 0.75, 0.25, OptimalArm::A1, 1, {1.0, 0.0}}));
    CHECK(minimax_separation(10, 14) == doctest::Approx(std::sqrt(3.0) / (4.0 * std::sqrt(48.0))));
}

TEST_CASE("local alternative identities above the threshold") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Mdp m = random_mdp(4, 2, 4, seed);
        const Policy mu = uniform_policy(m);
        const double zeta = local_zeta(m, mu);
        const auto n = static_cast<std::int64_t>(std::ceil(local_alternative_threshold(m, mu, zeta))) + 1;
        const Mdp alt = local_alternative(m, {zeta, ExpectedCounts{n, mu}});
        CHECK_NOTHROW(validate_mdp(alt));
        const auto opt = optimal_planning(m);
        const auto occ = occupancy_measure(m, mu);
        double worst = 0.0;
        for (int h = 0; h < 4; ++h)
            for (int s = 0; s < 4; ++s)
                for (int a = 0; a < 2; ++a) {
                    const auto p = m.transition(h, s, a), q = alt.transition(h, s, a);
                    double row = 0.0, shift = 0.0, mean = 0.0, second = 0.0;
                    for (int sp = 0; sp < 4; ++sp) {
                        CHECK(q[sp] >= 0.0);
                        row += q[sp];
                        shift += (q[sp] - p[sp]) * opt.values.V(h + 1, sp);
                        mean += p[sp] * opt.values.V(h + 1, sp);
                        second += p[sp] * opt.values.V(h + 1, sp) * opt.values.V(h + 1, sp);
                    }
                    CHECK(std::abs(row - 1.0) < 1e-12);
                    const double var = std::max(0.0, second - mean * mean);
                    const double n_sa = static_cast<double>(n) * occ.d(h, s, a);
                    CHECK(shift >= -1e-12);
                    CHECK(std::abs(shift - std::sqrt(var / (zeta * n_sa)) / 8.0) < 1e-10);
                    worst = std::max(worst, hellinger_sq(p, q));
                }
        CHECK(worst <= 1.0 / (static_cast<double>(n) * 4));
    }
}

TEST_CASE("local alternative below the threshold reports the offending entry") {
    // State 0 rarely falls into the worthless state 2; state 2 also carries
    // half the initial mass so that dbar_m stays large.
    Mdp m(2, 3, 1);
    m.initial() = {0.5, 0.0, 0.5};
    m.transition(0, 0, 0)[1] = 0.999;
    m.transition(0, 0, 0)[2] = 0.001;
    for (int h = 0; h < 2; ++h) {
        m.transition(h, 1, 0)[1] = 1.0;
        m.transition(h, 2, 0)[2] = 1.0;
    }
    m.transition(1, 0, 0)[0] = 1.0;
    m.reward(1, 1, 0) = 1.0;
    const Policy mu = uniform_policy(m);
    const double zeta = local_zeta(m, mu);
    const double threshold = local_alternative_threshold(m, mu, zeta);
    REQUIRE(threshold > 2.0);
    const auto below = static_cast<std::int64_t>(std::floor(threshold * 0.9));
    try {
        local_alternative(m, {zeta, ExpectedCounts{below, mu}});
        FAIL("expected a nonnegativity violation");
    } catch (const NonnegativityViolation& e) {
        CHECK(e.step == 0);
        CHECK(e.state == 0);
        CHECK(e.next_state == 2);
    }
    CHECK_NOTHROW(local_alternative(m, {zeta, ExpectedCounts{static_cast<std::int64_t>(std::ceil(threshold)), mu}}));
}

TEST_CASE("local alternative from dataset counts") {
    const Mdp m = random_mdp(3, 2, 3, 4);
    const Policy mu = uniform_policy(m);
    const auto counts = count(rollout(m, mu, 5000, 1));
    const double zeta = local_zeta(m, mu);
    const Mdp alt = local_alternative(m, {zeta, DatasetCounts{counts}});
    const auto opt = optimal_planning(m);
    for (int s = 0; s < 3; ++s) {
        const auto p = m.transition(0, s, 1), q = alt.transition(0, s, 1);
        double shift = 0.0;
        for (int sp = 0; sp < 3; ++sp) shift += (q[sp] - p[sp]) * opt.values.V(1, sp);
        const double var = empirical_variance(p, opt.values.V.row(1));
        CHECK(std::abs(shift - std::sqrt(var / (zeta * counts.visits(0, s, 1))) / 8.0) < 1e-10);
    }
}

TEST_CASE("Hellinger distance basics") {
    const std::vector<double> p{0.5, 0.5}, q{0.5, 0.5}, r{1.0, 0.0};
    CHECK(hellinger_sq(p, q) == doctest::Approx(0.0));
    CHECK(hellinger_sq(p, r) == doctest::Approx(1.0 - std::sqrt(0.5)));
    CHECK(hellinger_sq(r, p) == doctest::Approx(hellinger_sq(p, r)));
}

TEST_CASE("generated families have their structural property") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Mdp det = deterministic_system(6, 3, 8, seed);
        CHECK_NOTHROW(validate_mdp(det));
        for (int h = 0; h < 8; ++h) CHECK(is_deterministic_step(det, h));

        const Mdp fast = fast_mixing(5, 2, 4, seed);
        CHECK_NOTHROW(validate_mdp(fast));
        for (int h = 0; h < 4; ++h) CHECK(is_state_action_independent_step(fast, h));

        const Mdp bandit = contextual_bandit(4, 3, seed);
        CHECK(bandit.horizon() == 1);
        CHECK(bandit.reward_noise() == RewardNoise::Bernoulli);

        const Mdp partial = partially_deterministic(5, 2, 5, 2, seed);
        const auto opt = optimal_planning(partial);
        const auto var = variance_table(partial, opt.values.V);
        int stochastic = 0;
        for (int h = 0; h < 5; ++h) {
            double worst = 0.0;
            for (int s = 0; s < 5; ++s)
                for (int a = 0; a < 2; ++a) worst = std::max(worst, var(h, s, a));
            stochastic += worst > 1e-12;
            CHECK(is_deterministic_step(partial, h) == (h >= 2));
        }
        CHECK(stochastic == 2);
    }
    CHECK_THROWS(partially_deterministic(3, 2, 4, 4, 0));
}

TEST_CASE("generators are reproducible per seed") {
    CHECK(random_mdp(4, 2, 3, 7) == random_mdp(4, 2, 3, 7));
    CHECK_FALSE(random_mdp(4, 2, 3, 7) == random_mdp(4, 2, 3, 8));
    CHECK(deterministic_system(4, 2, 3, 7) == deterministic_system(4, 2, 3, 7));
}

TEST_CASE("two-branch construction") {
    const auto inst = two_branch_blind({6, 3, 0.4, 0.7, 0.5});
    CHECK_NOTHROW(validate_mdp(inst.mdp));
    CHECK_NOTHROW(validate_policy(inst.mdp, inst.mu));
    const auto opt = optimal_planning(inst.mdp);
    // X branch: blind action earns 1 at step 2 then 1 per step in G.
    CHECK(opt.values.V(1, 1) == doctest::Approx(5.0));
    CHECK(opt.values.V(1, 2) == doctest::Approx(0.7 * 4.0));
    CHECK(opt.values.value == doctest::Approx(0.4 * 5.0 + 0.6 * 0.7 * 4.0));
    CHECK(inst.mu(1, 1, 2) == 0.0);
    CHECK(af_gap(inst.mdp, inst.mu) == doctest::Approx(0.4 * 5.0));
}

TEST_CASE("epsilon-greedy behavior") {
    const Mdp m = random_mdp(3, 3, 4, 2);
    const auto opt = optimal_planning(m);
    CHECK(epsilon_greedy_of_optimal(m, 0.0) == opt.policy);
    const Policy mu = epsilon_greedy_of_optimal(m, 0.3);
    CHECK_NOTHROW(validate_policy(m, mu));
    for (int h = 0; h < 4; ++h)
        for (int s = 0; s < 3; ++s)
            for (int a = 0; a < 3; ++a) CHECK(mu(h, s, a) >= 0.1 - 1e-15);
    CHECK_THROWS(epsilon_greedy_of_optimal(m, 1.5));
}
