#include <doctest.h>

#include <cmath>
#include <tuple>

#include "offrl/harness.hpp"
#include "offrl/io.hpp"
#include "offrl/rng.hpp"

using namespace offrl;

TEST_CASE("rate fit on synthetic power laws") {
    std::vector<std::pair<double, double>> half, inverse, flat;
    StreamRng rng(1, 1);
    for (double n : {100.0, 300.0, 1000.0, 3000.0, 10000.0, 30000.0}) {
        half.emplace_back(n, 3.0 * std::pow(n, -0.5));
        inverse.emplace_back(n, 7.0 / n);
        flat.emplace_back(n, 2.0 * (1.0 + 0.01 * (2.0 * rng.uniform() - 1.0)));
    }
    const auto a = fit_rate(half);
    CHECK(std::abs(a.slope + 0.5) < 1e-9);
    CHECK(std::abs(a.intercept - std::log(3.0)) < 1e-9);
    CHECK(a.r_squared == doctest::Approx(1.0));
    CHECK(std::abs(fit_rate(inverse).slope + 1.0) < 1e-9);
    CHECK(std::abs(fit_rate(flat).slope) < 0.05);
}

TEST_CASE("rate fit drops nonpositive points and needs three") {
    const std::vector<std::pair<double, double>> pts{{10, 1.0}, {100, 0.0}, {1000, 0.1}, {10000, 0.01}};
    const auto fit = fit_rate(pts);
    CHECK(fit.points_used == 3);
    CHECK(fit.warnings.size() == 1);
    CHECK(fit.slope == doctest::Approx(-9.0 / 14.0));
    const std::vector<std::pair<double, double>> few{{10, 1.0}, {100, 0.0}, {1000, 0.1}};
    CHECK_THROWS_AS(fit_rate(few), std::invalid_argument);
}

TEST_CASE("median") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
    CHECK_THROWS(median({}));
}

namespace {

SweepConfig small_config() {
    SweepConfig cfg;
    cfg.instance.family = "random";
    cfg.instance.params = {{"states", 3}, {"actions", 2}, {"horizon", 3}, {"seed", 5}};
    cfg.algorithms = {"vpvi", "apvi", "af_apvi"};
    cfg.n_grid = {50, 200, 800};
    cfg.num_seeds = 4;
    cfg.master_seed = 11;
    cfg.record_wall_time = false;
    return cfg;
}

}  // namespace

TEST_CASE("sweep rows are complete, sorted and consistent") {
    const auto result = run_sweep(small_config());
    CHECK(result.rows.size() == 3 * 3 * 4);
    for (std::size_t i = 1; i < result.rows.size(); ++i) {
        const auto& a = result.rows[i - 1];
        const auto& b = result.rows[i];
        CHECK(std::tie(a.algorithm, a.n, a.seed_index) < std::tie(b.algorithm, b.n, b.seed_index));
    }
    for (const auto& r : result.rows) {
        CHECK(r.gap >= -1e-10);
        CHECK(r.gap == doctest::Approx(r.v_star - r.v_pihat));
        CHECK(r.trial_seed == trial_seed(11, r.algorithm, r.n, r.seed_index));
        CHECK(r.wall_time == 0.0);
    }
    CHECK(result.slopes.size() + result.notes.size() == 3);
}

TEST_CASE("sweep output is reproducible and independent of parallelism") {
    auto cfg = small_config();
    const auto first = to_json(run_sweep(cfg)).dump();
    const auto second = to_json(run_sweep(cfg)).dump();
    cfg.parallelism = 4;
    const auto parallel = to_json(run_sweep(cfg)).dump();
    CHECK(first == second);
    CHECK(first == parallel);
}

TEST_CASE("adding an algorithm leaves other trials unchanged") {
    auto cfg = small_config();
    cfg.algorithms = {"apvi"};
    const auto alone = run_sweep(cfg);
    const auto all = run_sweep(small_config());
    std::vector<SweepRow> apvi_rows;
    for (const auto& r : all.rows)
        if (r.algorithm == "apvi") apvi_rows.push_back(r);
    REQUIRE(apvi_rows.size() == alone.rows.size());
    for (std::size_t i = 0; i < apvi_rows.size(); ++i) {
        CHECK(apvi_rows[i].gap == alone.rows[i].gap);
        CHECK(apvi_rows[i].trial_seed == alone.rows[i].trial_seed);
    }
}

TEST_CASE("single-action bandit has zero gap everywhere") {
    SweepConfig cfg;
    cfg.instance.family = "bandit";
    cfg.instance.params = {{"states", 4}, {"actions", 1}, {"seed", 2}};
    cfg.algorithms = {"vpvi", "apvi", "af_apvi"};
    cfg.n_grid = {10, 100};
    cfg.num_seeds = 5;
    for (const auto& r : run_sweep(cfg).rows) CHECK(r.gap == 0.0);
}

TEST_CASE("deterministic systems are solved exactly once covered") {
    SweepConfig cfg;
    cfg.instance.family = "deterministic";
    cfg.instance.params = {{"states", 4}, {"actions", 2}, {"horizon", 4}, {"seed", 1}};
    cfg.n_grid = {200000};
    cfg.num_seeds = 3;
    for (const auto& r : run_sweep(cfg).rows) CHECK(r.gap == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("n-dependent hard instance shrinks its separation") {
    SweepConfig cfg;
    cfg.instance.family = "hard";
    cfg.instance.params = {{"actions", 4}, {"horizon", 3}, {"p", 0.5}};
    const auto small = resolve_instance(cfg, 100);
    const auto large = resolve_instance(cfg, 10000);
    const double gap_small = small.optimal.values.value - small.optimal.values.Q(0, 0, 1);
    const double gap_large = large.optimal.values.value - large.optimal.values.Q(0, 0, 1);
    CHECK(gap_small == doctest::Approx(2.0 * minimax_separation(25, 25)));
    CHECK(gap_large == doctest::Approx(gap_small / 10.0));
}

TEST_CASE("config validation") {
    auto cfg = small_config();
    cfg.n_grid = {100, 50};
    CHECK_THROWS_AS(run_sweep(cfg), std::invalid_argument);
    cfg = small_config();
    cfg.num_seeds = 0;
    CHECK_THROWS_AS(run_sweep(cfg), std::invalid_argument);
    cfg = small_config();
    cfg.algorithms = {"ucb"};
    CHECK_THROWS_AS(run_sweep(cfg), std::invalid_argument);
    cfg = small_config();
    cfg.instance.family = "nonsense";
    CHECK_THROWS_AS(run_sweep(cfg), std::invalid_argument);
    cfg = small_config();
    cfg.behavior.kind = "greedy";
    CHECK_THROWS_AS(run_sweep(cfg), std::invalid_argument);
}

TEST_CASE("multi-reward with one reward matches the single-task pipeline") {
    const Mdp m = random_mdp(4, 2, 3, 3);
    const Policy mu = uniform_policy(m);
    const auto res = multi_reward_experiment(m, mu, {m.rewards()}, 500, 9);
    REQUIRE(res.gaps.size() == 1);

    const auto d = rollout(m, mu, 500, 9);
    const auto em = fit_empirical_model(count(d));
    const auto plan = optimal_planning(em.to_mdp(m.initial()));
    const auto opt = optimal_planning(m);
    const auto eval = policy_evaluation(m, plan.policy);
    double gap = 0.0;
    for (int s = 0; s < 4; ++s) gap = std::max(gap, opt.values.V(0, s) - eval.V(0, s));
    CHECK(res.gaps[0] == gap);
    CHECK(res.max_gap == gap);
}

TEST_CASE("multi-reward gaps are symmetric under reward permutations") {
    // Fast-mixing dynamics ignore (s, a), so permuting rewards over actions
    // gives statistically identical tasks.
    const Mdp m = fast_mixing(3, 3, 3, 4);
    const Policy mu = uniform_policy(m);
    SATable base = m.rewards(), swapped = m.rewards();
    for (int h = 0; h < 3; ++h)
        for (int s = 0; s < 3; ++s)
            for (int a = 0; a < 3; ++a) swapped(h, s, a) = base(h, s, (a + 1) % 3);
    double total_base = 0.0, total_swapped = 0.0;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        const auto res = multi_reward_experiment(m, mu, {base, swapped}, 50, seed);
        total_base += res.gaps[0];
        total_swapped += res.gaps[1];
    }
    CHECK(total_base == doctest::Approx(total_swapped).epsilon(0.35));
}

TEST_CASE("multi-reward rejects bad reward tables") {
    const Mdp m = random_mdp(3, 2, 3, 3);
    SATable bad = m.rewards();
    bad(0, 0, 0) = 2.0;
    CHECK_THROWS_AS(multi_reward_experiment(m, uniform_policy(m), {bad}, 10, 1), std::invalid_argument);
    CHECK_THROWS_AS(multi_reward_experiment(m, uniform_policy(m), {SATable(2, 3, 2)}, 10, 1), std::invalid_argument);
    CHECK_THROWS_AS(multi_reward_experiment(m, uniform_policy(m), {}, 10, 1), std::invalid_argument);
}
