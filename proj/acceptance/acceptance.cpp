// Acceptance run: one PASS/FAIL line per criterion.
//   offrl_acceptance            all criteria
//   offrl_acceptance 4 9        a subset
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "offrl/bounds.hpp"
#include "offrl/estimation.hpp"
#include "offrl/harness.hpp"
#include "offrl/instances.hpp"
#include "offrl/io.hpp"
#include "offrl/ope.hpp"
#include "offrl/rng.hpp"
#include "oracles.hpp"

using namespace offrl;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

std::int64_t scaled_n(const Mdp& m, const Policy& mu, double factor, double delta = 0.1) {
    const auto cov = coverage_report(m, mu, optimal_planning(m).policy);
    const double l = iota(m.horizon(), m.num_states(), m.num_actions(), delta);
    return static_cast<std::int64_t>(std::ceil(factor * l / cov.dbar_m));
}

SweepConfig config_for(const std::string& family, std::map<std::string, double> params) {
    SweepConfig cfg;
    cfg.instance.family = family;
    cfg.instance.params = std::move(params);
    cfg.behavior.kind = "uniform";
    cfg.record_wall_time = false;
    return cfg;
}

// The three benchmark instances shared by the pessimism and certification runs.
std::vector<std::pair<std::string, SweepConfig>> benchmarks() {
    return {
        {"hard", config_for("hard", {{"actions", 2}, {"horizon", 5}, {"p", 0.25}, {"p_star", 0.75}})},
        {"random", config_for("random", {{"states", 5}, {"actions", 2}, {"horizon", 5}, {"seed", 1}})},
        {"fast_mixing", config_for("fast_mixing", {{"states", 5}, {"actions", 2}, {"horizon", 5}, {"seed", 1}})},
    };
}

Outcome exact_identities() {
    double worst = 0.0;
    int cases = 0;
    auto track = [&](double err) { worst = std::max(worst, std::abs(err)); };
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const int H = 4, S = 3, A = 2;
        const Mdp m = random_mdp(S, A, H, seed, 0.7);
        const Policy pi = oracle::random_policy(H, S, A, seed);
        const Policy pi2 = oracle::random_policy(H, S, A, seed + 1000);

        // Bellman consistency and occupancy duality.
        const auto sol = policy_evaluation(m, pi);
        for (int h = 0; h < H; ++h)
            for (int s = 0; s < S; ++s) {
                double v = 0.0;
                for (int a = 0; a < A; ++a) {
                    double q = m.reward(h, s, a);
                    for (int sp = 0; sp < S; ++sp) q += m.transition(h, s, a)[sp] * sol.V(h + 1, sp);
                    track(sol.Q(h, s, a) - q);
                    v += pi(h, s, a) * q;
                }
                track(sol.V(h, s) - v);
            }
        const auto occ = occupancy_measure(m, pi);
        double dual = 0.0;
        for (int h = 0; h < H; ++h)
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a) dual += occ.d(h, s, a) * m.reward(h, s, a);
        track(dual - sol.value);

        // Extended value difference with an arbitrary Q table.
        StreamRng rng(seed, 5);
        SATable qhat(H, S, A);
        for (double& q : qhat.data()) q = 6.0 * rng.uniform() - 1.0;
        const auto diff = extended_value_difference(m, qhat, pi, pi2);
        for (int s = 0; s < S; ++s) track(diff.lhs[s] - diff.rhs(s));

        // Sum of total variance against trajectory enumeration.
        track(return_variance_parts(m, pi2).total() - oracle::return_moments(m, pi2).variance);

        // Augmented MDP sandwich and absorbing mass.
        SAMask mask(H, S, A, 0);
        for (auto& x : mask.data()) x = rng.uniform() < 0.7;
        const auto aug = augment_mdp(m, mask);
        const Policy embedded = embed_policy(pi);
        const double v_aug = policy_evaluation(aug.mdp, embedded).value;
        const auto mass = absorbing_mass(aug, embedded);
        const double lost = std::accumulate(mass.begin() + 1, mass.end(), 0.0);
        worst = std::max({worst, v_aug - sol.value, sol.value - lost - v_aug});
        const auto aug_occ = occupancy_measure(aug.mdp, embedded);
        double leaked = 0.0;
        for (int h = 0; h <= H; ++h) {
            track(mass[h] - leaked);
            if (h == H) break;
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a)
                    if (!mask(h, s, a)) leaked += aug_occ.d(h, s, a);
        }
        cases += 5;
    }
    return {worst <= 1e-10, std::to_string(cases) + " identity cases, max error " + fmt(worst)};
}

Outcome hard_ground_truth() {
    const auto inst = hard_minimax_instance({2, 5, 0.75, 0.25, OptimalArm::A1, 1, {}});
    const auto opt = optimal_planning(inst.mdp);
    const double v = opt.values.value;
    const double wrong = v - opt.values.Q(0, 0, 1);
    return {v == 3.0 && wrong == 2.0, "v* = " + fmt(v) + ", wrong-arm gap = " + fmt(wrong)};
}

Outcome pessimism_rate() {
    bool ok = true;
    std::string detail;
    for (auto& [name, cfg] : benchmarks()) {
        const auto resolved = resolve_instance(cfg, 1);
        cfg.n_grid = {scaled_n(resolved.instance.mdp, resolved.instance.mu, 50.0)};
        cfg.num_seeds = 100;
        cfg.algorithms = {"vpvi", "apvi"};
        cfg.master_seed = 3;
        const auto result = run_sweep(cfg);
        for (const std::string alg : {"vpvi", "apvi"}) {
            int held = 0;
            for (const auto& r : result.rows) held += r.algorithm == alg && r.pessimism_holds;
            ok = ok && held >= 90;
            detail += name + "/" + alg + " " + std::to_string(held) + "/100 ";
        }
        detail += "(n=" + std::to_string(cfg.n_grid[0]) + ") ";
    }
    return {ok, detail};
}

Outcome minimax_rate() {
    // Ten arms at the separation limit; p_star is resolved per n so the
    // instance tightens as the data grows. The optimal arm is not index 0,
    // which is where ties between fully clipped values land.
    auto cfg = config_for("hard", {{"actions", 10}, {"horizon", 5}, {"p", 0.5}, {"optimal_arm", 2}});
    cfg.n_grid = {1000, 4000, 16000, 64000};
    cfg.num_seeds = 50;
    cfg.master_seed = 4;
    const auto result = run_sweep(cfg);
    if (!result.slopes.count("apvi")) return {false, "no slope: " + result.notes.at("apvi")};
    const double slope = result.slopes.at("apvi").slope;
    std::string medians;
    for (const auto& [n, g] : median_gaps(result.rows, "apvi")) medians += fmt(g) + " ";
    return {slope >= -0.65 && slope <= -0.35, "slope " + fmt(slope) + ", median gaps " + medians};
}

Outcome deterministic_fast_rate() {
    auto cfg = config_for("deterministic", {{"states", 6}, {"actions", 3}, {"horizon", 8}, {"seed", 1}});
    const auto resolved = resolve_instance(cfg, 1);
    const std::int64_t threshold = scaled_n(resolved.instance.mdp, resolved.instance.mu, 100.0);
    cfg.master_seed = 5;

    cfg.n_grid = {threshold};
    cfg.num_seeds = 100;
    int zero = 0;
    for (const auto& r : run_sweep(cfg).rows) zero += r.gap == 0.0;

    cfg.n_grid = {threshold / 64, threshold / 16, threshold / 4, threshold};
    cfg.num_seeds = 50;
    const auto medians = median_gaps(run_sweep(cfg).rows, "apvi");
    std::string listed;
    int positive = 0;
    for (const auto& [n, g] : medians) {
        listed += fmt(g) + " ";
        positive += g > 0.0;
    }
    bool rate_ok = positive == 0;
    std::string rate = "all-zero";
    if (positive >= 3) {
        const double slope = fit_rate(medians).slope;
        rate_ok = slope <= -0.9;
        rate = "slope " + fmt(slope);
    } else if (positive > 0) {
        // Fewer than three nonzero medians: they must vanish for good, not reappear.
        bool seen_zero = false, reappears = false;
        for (const auto& [n, g] : medians) {
            if (g == 0.0) seen_zero = true;
            else if (seen_zero) reappears = true;
        }
        rate_ok = !reappears && medians.back().second == 0.0;
        rate = "medians reach zero";
    }
    return {zero >= 95 && rate_ok, "exact zero " + std::to_string(zero) + "/100 at n=" + std::to_string(threshold) +
                                       "; pre-threshold medians " + listed + "(" + rate + ")"};
}

Outcome bound_domination() {
    double worst_uniform = -1e300, worst_conc = -1e300;
    int conc_cases = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Mdp m = random_mdp(4, 3, 5, seed);
        const Policy mu = uniform_policy(m);
        const auto b = intrinsic_bound(m, mu, 5000, 0.1, BoundConstants::unit());
        worst_uniform = std::max(worst_uniform, b.main_term - b.uniform_bound);
        if (std::isfinite(b.c_star) && optimal_planning(m).policy.is_deterministic()) {
            worst_conc = std::max(worst_conc, b.main_term - b.concentrability_bound);
            ++conc_cases;
        }
    }
    return {worst_uniform <= 1e-9 && worst_conc <= 1e-9,
            "max(main - uniform) = " + fmt(worst_uniform) + ", max(main - concentrability) = " + fmt(worst_conc) +
                " over " + std::to_string(conc_cases) + " instances"};
}

Outcome bound_certification() {
    bool ok = true;
    std::string detail;
    for (auto& [name, cfg] : benchmarks()) {
        const auto resolved = resolve_instance(cfg, 1);
        cfg.n_grid = {scaled_n(resolved.instance.mdp, resolved.instance.mu, 50.0)};
        cfg.num_seeds = 100;
        cfg.constants = "theory";
        cfg.master_seed = 7;
        int held = 0;
        for (const auto& r : run_sweep(cfg).rows) held += r.gap <= r.apvi_bound;
        ok = ok && held >= 90;
        detail += name + " " + std::to_string(held) + "/100 ";
    }
    return {ok, detail};
}

Outcome local_alternative_validity() {
    double row_err = 0.0, neg = 0.0, shift_err = 0.0, min_shift = 0.0, hell_excess = -1e300;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const int H = 4, S = 4, A = 2;
        const Mdp m = random_mdp(S, A, H, seed);
        const Policy mu = uniform_policy(m);
        const double zeta = local_zeta(m, mu);
        const auto n = static_cast<std::int64_t>(std::ceil(local_alternative_threshold(m, mu, zeta))) + 1;
        const Mdp alt = local_alternative(m, {zeta, ExpectedCounts{n, mu}});
        const auto opt = optimal_planning(m);
        const auto occ = occupancy_measure(m, mu);
        double worst_h = 0.0;
        for (int h = 0; h < H; ++h)
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a) {
                    const auto p = m.transition(h, s, a), q = alt.transition(h, s, a);
                    double row = 0.0, shift = 0.0;
                    for (int sp = 0; sp < S; ++sp) {
                        neg = std::min(neg, q[sp]);
                        row += q[sp];
                        shift += (q[sp] - p[sp]) * opt.values.V(h + 1, sp);
                    }
                    const double var = empirical_variance(p, opt.values.V.row(h + 1));
                    const double n_sa = static_cast<double>(n) * occ.d(h, s, a);
                    row_err = std::max(row_err, std::abs(row - 1.0));
                    min_shift = std::min(min_shift, shift);
                    shift_err = std::max(shift_err, std::abs(shift - std::sqrt(var / (zeta * n_sa)) / 8.0));
                    worst_h = std::max(worst_h, hellinger_sq(p, q));
                }
        hell_excess = std::max(hell_excess, worst_h - 1.0 / (static_cast<double>(n) * H));
    }
    const bool ok = row_err <= 1e-12 && neg >= 0.0 && min_shift >= -1e-12 && shift_err <= 1e-10 && hell_excess <= 0.0;
    return {ok, "row error " + fmt(row_err) + ", min entry " + fmt(neg) + ", shift error " + fmt(shift_err) +
                    ", max(H^2 - 1/(nH)) " + fmt(hell_excess)};
}

Outcome assumption_free_gap() {
    const int H = 5;
    const double q = 0.5;
    auto cfg = config_for("two_branch", {{"horizon", H}, {"actions", 10}, {"q", q}, {"p", 0.5}});
    cfg.behavior.kind = "instance";
    cfg.algorithms = {"af_apvi"};
    cfg.n_grid = {1000, 4000, 16000, 64000};
    cfg.num_seeds = 100;
    cfg.master_seed = 9;
    const auto result = run_sweep(cfg);
    const auto resolved = resolve_instance(cfg, 1000);
    const double predicted = af_gap(resolved.instance.mdp, resolved.instance.mu);

    // Mean excess of the realized gap over the prediction, per n.
    std::map<std::int64_t, std::pair<double, int>> excess;
    for (const auto& r : result.rows) {
        excess[r.n].first += r.gap - r.af_gap;
        excess[r.n].second += 1;
    }
    std::vector<std::pair<double, double>> points;
    std::string listed;
    for (const auto& [n, acc] : excess) {
        const double mean = acc.first / acc.second;
        points.emplace_back(static_cast<double>(n), std::abs(mean));
        listed += fmt(mean) + " ";
    }
    double slope = 0.0;
    bool fit_ok = true;
    try {
        slope = fit_rate(points).slope;
    } catch (const std::invalid_argument&) {
        fit_ok = false;
    }
    const bool exact = predicted == q * (H - 1);
    return {exact && fit_ok && slope >= -0.65 && slope <= -0.35,
            "af_gap " + fmt(predicted) + (exact ? " (= q(H-1))" : " (!= q(H-1))") + ", mean excess " + listed +
                "slope " + (fit_ok ? fmt(slope) : "n/a")};
}

Outcome ope_vs_learning() {
    const Mdp m = random_mdp(4, 2, 4, 31);
    const Policy mu = uniform_policy(m);
    const Policy pi = optimal_planning(m).policy;
    const double truth = policy_evaluation(m, pi).value;
    std::vector<std::pair<double, double>> points;
    for (std::int64_t n : {250, 1000, 4000, 16000}) {
        double sq = 0.0;
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            const double e = tmis_estimate(rollout(m, mu, n, combine_seed(10, seed)), pi).v_hat - truth;
            sq += e * e;
        }
        points.emplace_back(static_cast<double>(n), std::sqrt(sq / 50));
    }
    const double slope = fit_rate(points).slope;

    std::vector<double> ratios;
    std::string listed;
    for (int H : {4, 8, 16, 32}) {
        double total = 0.0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const Mdp mh = random_mdp(4, 2, H, seed);
            const Policy muh = uniform_policy(mh);
            const auto b = intrinsic_bound(mh, muh, 10000, 0.1, BoundConstants::unit());
            total += b.main_term / ope_error_bound(mh, muh, optimal_planning(mh).policy, 10000);
        }
        ratios.push_back(total / 10);
        listed += fmt(ratios.back()) + " ";
    }
    bool monotone = true;
    for (std::size_t i = 1; i < ratios.size(); ++i) monotone = monotone && ratios[i] > ratios[i - 1];
    return {slope >= -0.65 && slope <= -0.35 && monotone,
            "RMSE slope " + fmt(slope) + "; learning/OPE ratio over H=4,8,16,32: " + listed};
}

Outcome multi_reward() {
    // n = 1e4 clears the sample-size condition H (iota + log K) / d_m of this
    // instance (about 2.6e3), so it sits in the regime the guarantee covers.
    const int S = 6, A = 3, H = 5;
    const Mdp m = random_mdp(S, A, H, 3);
    const Policy mu = uniform_policy(m);
    std::vector<SATable> rewards;
    StreamRng rng(12, 1);
    for (int k = 0; k < 16; ++k) {
        SATable r(H, S, A);
        for (double& x : r.data()) x = rng.uniform();
        rewards.push_back(std::move(r));
    }
    // Planning is separate per reward, so every per-reward gap of a K = 16 run
    // is a K = 1 run on the same data. The single-task baseline pools them all
    // so that it does not hinge on which draw happens to be listed first.
    std::vector<double> one, many;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto res = multi_reward_experiment(m, mu, rewards, 10000, seed);
        one.insert(one.end(), res.gaps.begin(), res.gaps.end());
        many.push_back(res.max_gap);
    }
    const double g1 = median(one), g16 = median(many);
    double zero = 0.0;
    for (double g : one) zero += g == 0.0;
    return {g1 > 0.0 && g16 <= 3.0 * g1, "median gap K=1 " + fmt(g1) + " (" + fmt(100.0 * zero / one.size()) +
                                             "% exactly 0), K=16 " + fmt(g16) + ", ratio " +
                                             (g1 > 0.0 ? fmt(g16 / g1) : std::string("undefined"))};
}

Outcome reproducibility() {
    auto cfg = config_for("random", {{"states", 4}, {"actions", 2}, {"horizon", 4}, {"seed", 2}});
    cfg.algorithms = {"vpvi", "apvi", "af_apvi"};
    cfg.n_grid = {100, 400, 1600};
    cfg.num_seeds = 10;
    cfg.master_seed = 12;
    auto render = [](const SweepResult& r) { return to_json(r).dump(2) + sweep_rows_csv(r); };
    const auto first = render(run_sweep(cfg));
    const auto second = render(run_sweep(cfg));
    cfg.parallelism = 4;
    const auto parallel = render(run_sweep(cfg));
    return {first == second && first == parallel,
            std::string("rerun ") + (first == second ? "identical" : "differs") + ", parallel " +
                (first == parallel ? "identical" : "differs") + " (" + std::to_string(first.size()) + " bytes)"};
}

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria{
        {1, "exact identities", 30, exact_identities},
        {2, "hard-instance ground truth", 1, hard_ground_truth},
        {3, "pessimism rate", 300, pessimism_rate},
        {4, "minimax rate", 600, minimax_rate},
        {5, "deterministic fast rate", 300, deterministic_fast_rate},
        {6, "bound domination", 60, bound_domination},
        {7, "bound certification", 600, bound_certification},
        {8, "local alternative validity", 60, local_alternative_validity},
        {9, "assumption-free gap", 120, assumption_free_gap},
        {10, "OPE vs learning", 300, ope_vs_learning},
        {11, "multi-reward", 300, multi_reward},
        {12, "reproducibility", 120, reproducibility},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));

    int failures = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs <= c.budget_seconds;
        const bool pass = out.pass && in_time;
        failures += !pass;
        std::printf("%s %2d %s: %s [%.2fs / %.0fs%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, out.detail.c_str(), secs,
                    c.budget_seconds, in_time ? "" : " over budget");
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
