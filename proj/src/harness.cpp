#include "offrl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "offrl/estimation.hpp"
#include "offrl/io.hpp"
#include "offrl/rng.hpp"

namespace offrl {

double InstanceSpec::param(const std::string& key, double fallback) const {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

void SweepConfig::validate() const {
    if (n_grid.empty()) throw std::invalid_argument("sweep: n_grid is empty");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        if (n_grid[i] < 1) throw std::invalid_argument("sweep: n_grid entries must be positive");
        if (i > 0 && n_grid[i] <= n_grid[i - 1]) throw std::invalid_argument("sweep: n_grid must be strictly ascending");
    }
    if (num_seeds < 1) throw std::invalid_argument("sweep: num_seeds must be at least 1");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("sweep: delta must lie in (0, 1)");
    if (constants != "theory" && constants != "unit") throw std::invalid_argument("sweep: constants must be theory or unit");
    if (parallelism < 1) throw std::invalid_argument("sweep: parallelism must be at least 1");
    if (algorithms.empty()) throw std::invalid_argument("sweep: no algorithms");
    for (const auto& a : algorithms)
        if (a != "vpvi" && a != "apvi" && a != "af_apvi") throw std::invalid_argument("sweep: unknown algorithm '" + a + "'");
    planner.validate();
}

namespace {

int int_param(const InstanceSpec& spec, const std::string& key, int fallback) {
    const double v = spec.param(key, fallback);
    if (v != std::floor(v)) throw std::invalid_argument("instance parameter '" + key + "' must be an integer");
    return static_cast<int>(v);
}

std::uint64_t seed_param(const InstanceSpec& spec) {
    const double v = spec.param("seed", 0.0);
    if (v < 0.0 || v != std::floor(v)) throw std::invalid_argument("instance parameter 'seed' must be a nonnegative integer");
    return static_cast<std::uint64_t>(v);
}

Instance build_instance(const InstanceSpec& spec, std::int64_t n) {
    const double nd = static_cast<double>(n);
    const std::string& f = spec.family;
    if (f == "hard") {
        HardInstanceParams p;
        p.num_actions = int_param(spec, "actions", 2);
        p.horizon = int_param(spec, "horizon", 5);
        p.p = spec.param("p", 0.25);
        p.shift = int_param(spec, "shift", 1);
        p.which_optimal = int_param(spec, "optimal_arm", 1) == 2 ? OptimalArm::A2 : OptimalArm::A1;
        // s1 is reached surely and the behavior is uniform at the decision step.
        const double per_arm = nd / p.num_actions;
        p.p_star = spec.has("p_star") ? spec.param("p_star", 0.75) : p.p + minimax_separation(per_arm, per_arm);
        return hard_minimax_instance(p);
    }
    if (f == "two_branch") {
        TwoBranchParams p;
        p.horizon = int_param(spec, "horizon", 5);
        p.num_actions = int_param(spec, "actions", 2);
        p.q = spec.param("q", 0.5);
        p.p = spec.param("p", 0.5);
        const double per_arm = nd * (1.0 - p.q) / p.num_actions;
        p.p_star = spec.has("p_star") ? spec.param("p_star", 0.75)
                                      : std::min(1.0, p.p + minimax_separation(per_arm, per_arm));
        return two_branch_blind(p);
    }
    Mdp m;
    if (f == "random") {
        m = random_mdp(int_param(spec, "states", 5), int_param(spec, "actions", 2), int_param(spec, "horizon", 5),
                       seed_param(spec), spec.param("alpha", 1.0),
                       spec.param("bernoulli", 0.0) != 0.0 ? RewardNoise::Bernoulli : RewardNoise::Deterministic);
    } else if (f == "deterministic") {
        m = deterministic_system(int_param(spec, "states", 6), int_param(spec, "actions", 3),
                                 int_param(spec, "horizon", 8), seed_param(spec));
    } else if (f == "partially_deterministic") {
        m = partially_deterministic(int_param(spec, "states", 5), int_param(spec, "actions", 2),
                                    int_param(spec, "horizon", 5), int_param(spec, "stochastic_steps", 2),
                                    seed_param(spec));
    } else if (f == "fast_mixing") {
        m = fast_mixing(int_param(spec, "states", 5), int_param(spec, "actions", 2), int_param(spec, "horizon", 5),
                        seed_param(spec));
    } else if (f == "bandit") {
        m = contextual_bandit(int_param(spec, "states", 3), int_param(spec, "actions", 2), seed_param(spec));
    } else if (f == "file") {
        if (spec.path.empty()) throw std::invalid_argument("instance family 'file' needs a path");
        m = load_mdp(spec.path);
    } else {
        throw std::invalid_argument("unknown instance family '" + f + "'");
    }
    Policy mu = uniform_policy(m);
    return {std::move(m), std::move(mu)};
}

}  // namespace

ResolvedInstance resolve_instance(const SweepConfig& cfg, std::int64_t n) {
    Instance inst = build_instance(cfg.instance, n);
    const auto& b = cfg.behavior;
    if (b.kind == "uniform") {
        inst.mu = uniform_policy(inst.mdp);
    } else if (b.kind == "epsilon_greedy") {
        inst.mu = epsilon_greedy_of_optimal(inst.mdp, b.epsilon);
    } else if (b.kind == "file") {
        inst.mu = load_policy(b.path);
    } else if (b.kind != "instance") {
        throw std::invalid_argument("unknown behavior kind '" + b.kind + "'");
    }
    validate_mdp(inst.mdp);
    validate_policy(inst.mdp, inst.mu);
    auto optimal = optimal_planning(inst.mdp);
    return {std::move(inst), std::move(optimal)};
}

std::uint64_t trial_seed(std::uint64_t master_seed, const std::string& algorithm, std::int64_t n, int seed_index) {
    std::uint64_t s = combine_seed(master_seed, fnv1a(algorithm));
    s = combine_seed(s, static_cast<std::uint64_t>(n));
    return combine_seed(s, static_cast<std::uint64_t>(seed_index));
}

void sort_rows(std::vector<SweepRow>& rows) {
    std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
        return std::tie(a.algorithm, a.n, a.seed_index) < std::tie(b.algorithm, b.n, b.seed_index);
    });
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of an empty set");
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

std::vector<std::pair<double, double>> median_gaps(const std::vector<SweepRow>& rows, const std::string& algorithm) {
    std::map<std::int64_t, std::vector<double>> by_n;
    for (const auto& r : rows)
        if (r.algorithm == algorithm) by_n[r.n].push_back(r.gap);
    std::vector<std::pair<double, double>> out;
    for (auto& [n, gaps] : by_n) out.emplace_back(static_cast<double>(n), median(std::move(gaps)));
    return out;
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& points) {
    RateFit fit;
    std::vector<double> xs, ys;
    for (const auto& [n, stat] : points) {
        if (!(n > 0.0)) throw std::invalid_argument("fit_rate: n must be positive");
        if (!(stat > 0.0) || !std::isfinite(stat)) {
            fit.warnings.push_back("dropped nonpositive statistic at n=" + format_double(n));
            continue;
        }
        xs.push_back(std::log(n));
        ys.push_back(std::log(stat));
    }
    fit.points_used = static_cast<int>(xs.size());
    if (xs.size() < 3) throw std::invalid_argument("fit_rate: fewer than 3 usable points");
    const double k = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= k;
    my /= k;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_rate: all n are equal");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy == 0.0 ? 1.0 : sxy * sxy / (sxx * syy);
    return fit;
}

void fit_slopes(SweepResult& result) {
    result.slopes.clear();
    result.notes.clear();
    std::vector<std::string> algorithms;
    for (const auto& r : result.rows)
        if (std::find(algorithms.begin(), algorithms.end(), r.algorithm) == algorithms.end())
            algorithms.push_back(r.algorithm);
    for (const auto& alg : algorithms) {
        try {
            result.slopes[alg] = fit_rate(median_gaps(result.rows, alg));
        } catch (const std::invalid_argument& e) {
            result.notes[alg] = e.what();
        }
    }
}

namespace {

PlannerOutput run_planner(const std::string& algorithm, const EmpiricalModel& em, const PlannerConfig& cfg) {
    if (algorithm == "vpvi") return vpvi(em, cfg);
    if (algorithm == "apvi") return apvi(em, cfg);
    return af_apvi(em, cfg);
}

template <typename Fn>
void parallel_for(std::size_t count, int parallelism, Fn&& fn) {
    const int workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(parallelism), count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = count;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

struct PerN {
    ResolvedInstance resolved;
    BoundBreakdown bounds;
};

}  // namespace

SweepResult run_sweep(const SweepConfig& cfg) {
    cfg.validate();
    const BoundConstants constants = cfg.constants == "theory" ? BoundConstants::theory() : BoundConstants::unit();
    PlannerConfig planner = cfg.planner;
    planner.delta = cfg.delta;

    std::vector<PerN> per_n;
    for (auto n : cfg.n_grid) {
        auto resolved = resolve_instance(cfg, n);
        auto bounds = intrinsic_bound(resolved.instance.mdp, resolved.instance.mu, n, cfg.delta, constants);
        per_n.push_back({std::move(resolved), std::move(bounds)});
    }

    struct Job {
        std::size_t alg, n_index;
        int seed_index;
    };
    std::vector<Job> jobs;
    for (std::size_t a = 0; a < cfg.algorithms.size(); ++a)
        for (std::size_t i = 0; i < cfg.n_grid.size(); ++i)
            for (int k = 0; k < cfg.num_seeds; ++k) jobs.push_back({a, i, k});

    SweepResult result;
    result.rows.resize(jobs.size());
    parallel_for(jobs.size(), cfg.parallelism, [&](std::size_t j) {
        const auto start = std::chrono::steady_clock::now();
        const Job& job = jobs[j];
        const auto& alg = cfg.algorithms[job.alg];
        const std::int64_t n = cfg.n_grid[job.n_index];
        const auto& ctx = per_n[job.n_index];
        const Mdp& m = ctx.resolved.instance.mdp;

        SweepRow row;
        row.algorithm = alg;
        row.n = n;
        row.seed_index = job.seed_index;
        row.trial_seed = trial_seed(cfg.master_seed, alg, n, job.seed_index);
        const auto data = rollout(m, ctx.resolved.instance.mu, n, row.trial_seed);
        const auto em = fit_empirical_model(count(data));
        const auto plan = run_planner(alg, em, planner);
        const auto eval = policy_evaluation(m, plan.policy);

        row.v_star = ctx.resolved.optimal.values.value;
        row.v_pihat = eval.value;
        row.gap = row.v_star - row.v_pihat;
        row.v_hat_pessimistic = plan.pessimistic_value(m.initial());
        row.pessimism_holds = true;
        for (int s = 0; s < m.num_states(); ++s)
            if (plan.v_hat(0, s) > eval.V(0, s) + kDerivedTolerance) row.pessimism_holds = false;
        const auto& b = ctx.bounds;
        row.bound_main = b.main_term;
        row.apvi_bound = b.apvi_bound;
        row.vpvi_bound = b.vpvi_bound;
        row.uniform_bound = b.uniform_bound;
        row.concentrability_bound = b.concentrability_bound;
        row.horizon_free_bound = b.horizon_free_bound;
        row.af_gap = b.af_gap;
        if (cfg.record_wall_time)
            row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.rows[j] = std::move(row);
    });

    sort_rows(result.rows);
    fit_slopes(result);
    return result;
}

MultiRewardResult multi_reward_experiment(const Mdp& m, const Policy& mu, const std::vector<SATable>& rewards,
                                          std::int64_t n, std::uint64_t seed) {
    if (rewards.empty()) throw std::invalid_argument("multi_reward_experiment: no reward tables");
    for (const auto& r : rewards) {
        if (!r.same_shape(m.rewards())) throw std::invalid_argument("multi_reward_experiment: reward shape mismatch");
        for (double x : r.data())
            if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("multi_reward_experiment: reward outside [0, 1]");
    }
    // Exploration data: only states and actions are used.
    const auto data = rollout(m, mu, n, seed);
    const auto em = fit_empirical_model(count(data));
    Mdp empirical = em.to_mdp(m.initial());

    MultiRewardResult out;
    for (const auto& r : rewards) {
        Mdp task = m;
        task.rewards() = r;
        empirical.rewards() = r;
        const auto optimal = optimal_planning(task);
        const auto plan = optimal_planning(empirical);
        const auto eval = policy_evaluation(task, plan.policy);
        double gap = 0.0;
        for (int s = 0; s < m.num_states(); ++s) gap = std::max(gap, optimal.values.V(0, s) - eval.V(0, s));
        out.gaps.push_back(gap);
        out.max_gap = std::max(out.max_gap, gap);
    }
    return out;
}

}  // namespace offrl
