#include <doctest.h>

#include <cmath>
#include <numeric>

#include "offrl/harness.hpp"
#include "offrl/instances.hpp"
#include "offrl/sampling.hpp"
#include "oracles.hpp"

using namespace offrl;

TEST_CASE("rollout is deterministic and independent of the thread count") {
    const Mdp m = random_mdp(4, 3, 5, 9);
    const Policy mu = uniform_policy(m);
    const auto a = rollout(m, mu, 500, 77, 1);
    const auto b = rollout(m, mu, 500, 77, 4);
    const auto c = rollout(m, mu, 500, 78, 1);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    CHECK(a.meta.num_episodes == 500);
    CHECK(a.meta.seed == 77);
    CHECK_NOTHROW(validate_dataset(a));

    // A longer dataset extends a shorter one with the same seed.
    const auto longer = rollout(m, mu, 600, 77, 3);
    CHECK(std::equal(a.steps.begin(), a.steps.end(), longer.steps.begin()));
}

TEST_CASE("episodes chain next states into the following step") {
    const Mdp m = random_mdp(4, 2, 6, 3);
    const auto d = rollout(m, uniform_policy(m), 50, 1);
    for (std::int64_t i = 0; i < 50; ++i)
        for (int h = 0; h + 1 < 6; ++h) CHECK(d.at(i, h).next_state == d.at(i, h + 1).state);
}

TEST_CASE("counts are consistent with the dataset") {
    const Mdp m = random_mdp(3, 2, 4, 5);
    const auto d = rollout(m, uniform_policy(m), 300, 2);
    const auto c = count(d);
    for (int h = 0; h < 4; ++h) {
        std::int64_t total = 0;
        for (int s = 0; s < 3; ++s)
            for (int a = 0; a < 2; ++a) {
                total += c.visits(h, s, a);
                const auto next = c.next_counts(h, s, a);
                CHECK(std::accumulate(next.begin(), next.end(), std::int64_t{0}) == c.visits(h, s, a));
            }
        CHECK(total == 300);
    }
}

TEST_CASE("Bernoulli rewards are realized as 0 or 1") {
    const Mdp m = contextual_bandit(3, 2, 4);
    const auto d = rollout(m, uniform_policy(m), 200, 8);
    for (const auto& t : d.steps) CHECK((t.reward == 0.0 || t.reward == 1.0));
}

TEST_CASE("empirical visitation frequencies match occupancy") {
    const Mdp m = random_mdp(3, 2, 4, 21);
    const Policy mu = oracle::random_policy(4, 3, 2, 4);
    const std::int64_t n = 40000;
    const auto c = count(rollout(m, mu, n, 5));
    const auto occ = occupancy_measure(m, mu);
    for (int h = 0; h < 4; ++h)
        for (int s = 0; s < 3; ++s)
            for (int a = 0; a < 2; ++a) {
                const double p = occ.d(h, s, a);
                const double sd = std::sqrt(p * (1 - p) / static_cast<double>(n));
                CHECK(std::abs(static_cast<double>(c.visits(h, s, a)) / n - p) <= 5.0 * sd + 1e-12);
            }
}

TEST_CASE("transition estimates converge at the square-root rate") {
    const Mdp m = random_mdp(3, 2, 3, 13);
    const Policy mu = uniform_policy(m);
    const auto occ = occupancy_measure(m, mu);
    std::vector<std::pair<double, double>> points;
    for (std::int64_t n : {1000, 4000, 16000, 64000}) {
        std::vector<double> errs;
        for (int seed = 0; seed < 20; ++seed) {
            const auto c = count(rollout(m, mu, n, static_cast<std::uint64_t>(seed)));
            double worst = 0.0;
            for (int h = 0; h < 3; ++h)
                for (int s = 0; s < 3; ++s)
                    for (int a = 0; a < 2; ++a) {
                        // Well-visited cells only.
                        if (occ.d(h, s, a) < 0.05) continue;
                        const auto nsa = c.visits(h, s, a);
                        const auto next = c.next_counts(h, s, a);
                        for (int sp = 0; sp < 3; ++sp)
                            worst = std::max(worst, std::abs(static_cast<double>(next[sp]) / nsa - m.transition(h, s, a)[sp]));
                    }
            errs.push_back(worst);
        }
        points.emplace_back(static_cast<double>(n), median(errs));
    }
    const auto fit = fit_rate(points);
    CHECK(fit.slope > -0.65);
    CHECK(fit.slope < -0.35);
}

TEST_CASE("reachability and max reach probability") {
    // State 2 is never reachable; state 1 is reachable only via action 1.
    Mdp m(3, 3, 2);
    m.initial()[0] = 1.0;
    for (int h = 0; h < 3; ++h)
        for (int s = 0; s < 3; ++s) {
            m.transition(h, s, 0)[0] = 1.0;
            m.transition(h, s, 1)[0] = 0.4;
            m.transition(h, s, 1)[1] = 0.6;
        }
    const auto reach = reachable_states(m);
    CHECK(reach(0, 0) == 1);
    CHECK(reach(0, 1) == 0);
    CHECK(reach(1, 1) == 1);
    CHECK(reach(2, 2) == 0);
    const auto best = max_reach_probability(m);
    CHECK(best(1, 1) == doctest::Approx(0.6));
    CHECK(best(2, 1) == doctest::Approx(0.6));
    CHECK(best(2, 0) == doctest::Approx(1.0));
}

TEST_CASE("max reach probability equals the best deterministic policy") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Mdp m = random_mdp(3, 2, 3, seed, 0.5);
        const auto best = max_reach_probability(m);
        StateTable brute(3, 3, 0.0);
        oracle::for_each_deterministic_policy(3, 3, 2, [&](const Policy& pi) {
            const auto occ = occupancy_measure(m, pi);
            for (int h = 0; h < 3; ++h)
                for (int s = 0; s < 3; ++s) brute(h, s) = std::max(brute(h, s), occ.state(h, s));
        });
        for (std::size_t i = 0; i < brute.data().size(); ++i) CHECK(std::abs(best.data()[i] - brute.data()[i]) < 1e-12);
    }
}

TEST_CASE("coverage report coefficients") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Mdp m = random_mdp(4, 3, 4, seed);
        const Policy mu = oracle::random_policy(4, 4, 3, seed);
        const auto opt = optimal_planning(m);
        const auto rep = coverage_report(m, mu, opt.policy);
        CHECK(rep.uniform_coverage);
        CHECK(rep.single_concentrability);
        CHECK(rep.d_m == doctest::Approx(rep.dbar_m));
        CHECK(rep.c_star <= rep.c_mu + 1e-12);
        CHECK(rep.c_star >= 1.0 - 1e-12);

        // Random policies can only certify a lower bound on the exact sup.
        const auto occ_mu = occupancy_measure(m, mu);
        double lower = 0.0;
        for (std::uint64_t k = 0; k < 200; ++k) {
            const auto occ = occupancy_measure(m, oracle::random_policy(4, 4, 3, 1000 + k));
            for (std::size_t i = 0; i < occ.d.data().size(); ++i)
                lower = std::max(lower, occ.d.data()[i] / occ_mu.d.data()[i]);
        }
        CHECK(lower <= rep.c_mu + 1e-12);
    }
}

TEST_CASE("exact concentrability equals the best deterministic policy ratio") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Mdp m = random_mdp(3, 2, 3, seed);
        const Policy mu = oracle::random_policy(3, 3, 2, seed);
        const auto rep = coverage_report(m, mu, optimal_planning(m).policy);
        const auto occ_mu = occupancy_measure(m, mu);
        double brute = 0.0;
        oracle::for_each_deterministic_policy(3, 3, 2, [&](const Policy& pi) {
            const auto occ = occupancy_measure(m, pi);
            for (std::size_t i = 0; i < occ.d.data().size(); ++i)
                brute = std::max(brute, occ.d.data()[i] / occ_mu.d.data()[i]);
        });
        CHECK(std::abs(brute - rep.c_mu) < 1e-9 * rep.c_mu);
    }
}

TEST_CASE("coverage flags a behavior policy that misses the optimal action") {
    const auto inst = two_branch_blind({5, 2, 0.5, 0.75, 0.25});
    const auto opt = optimal_planning(inst.mdp);
    const auto rep = coverage_report(inst.mdp, inst.mu, opt.policy);
    CHECK_FALSE(rep.single_concentrability);
    CHECK(std::isinf(rep.c_star));
    CHECK(std::isinf(rep.tau_a));
    CHECK(rep.d_m == 0.0);
    CHECK(rep.dbar_m > 0.0);
    CHECK_FALSE(rep.trackable(1, 1, 1));
}
