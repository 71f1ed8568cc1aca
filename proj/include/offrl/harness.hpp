#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "offrl/bounds.hpp"
#include "offrl/instances.hpp"
#include "offrl/planners.hpp"

namespace offrl {

/// Named instance family plus numeric parameters, or an MDP file.
///
/// Families: hard, two_branch, random, deterministic, partially_deterministic,
/// fast_mixing, bandit, file. For hard and two_branch an absent p_star is
/// resolved per n as p + minimax_separation of the expected arm counts, so
/// the instance tightens as data grows.
struct InstanceSpec {
    std::string family = "random";
    std::map<std::string, double> params;
    std::string path;  // family == "file"

    double param(const std::string& key, double fallback) const;
    bool has(const std::string& key) const { return params.count(key) != 0; }
};

/// "instance" uses the behavior the family was designed with (uniform for
/// plain generators).
struct BehaviorSpec {
    std::string kind = "instance";  // instance | uniform | epsilon_greedy | file
    double epsilon = 0.1;
    std::string path;
};

struct SweepConfig {
    InstanceSpec instance;
    BehaviorSpec behavior;
    std::vector<std::string> algorithms{"apvi"};
    std::vector<std::int64_t> n_grid;
    int num_seeds = 1;
    double delta = 0.1;
    std::string constants = "theory";  // theory | unit
    PlannerConfig planner;
    std::uint64_t master_seed = 0;
    int parallelism = 1;
    bool record_wall_time = true;

    void validate() const;
};

struct SweepRow {
    std::string algorithm;
    std::int64_t n = 0;
    int seed_index = 0;
    std::uint64_t trial_seed = 0;
    double v_star = 0.0;
    double v_pihat = 0.0;
    double gap = 0.0;
    double v_hat_pessimistic = 0.0;
    bool pessimism_holds = false;  // Vhat_1(s) <= V^pihat_1(s) for every s
    double bound_main = 0.0;
    double apvi_bound = 0.0;
    double vpvi_bound = 0.0;
    double uniform_bound = 0.0;
    double concentrability_bound = 0.0;
    double horizon_free_bound = 0.0;
    double af_gap = 0.0;
    double wall_time = 0.0;
};

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    int points_used = 0;
    std::vector<std::string> warnings;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::map<std::string, RateFit> slopes;     // per algorithm, on the median gap
    std::map<std::string, std::string> notes;  // per algorithm, why a slope is missing
};

struct ResolvedInstance {
    Instance instance;
    OptimalSolution optimal;
};

/// Builds the MDP and behavior policy a sweep uses at sample size n.
ResolvedInstance resolve_instance(const SweepConfig& cfg, std::int64_t n);

std::uint64_t trial_seed(std::uint64_t master_seed, const std::string& algorithm, std::int64_t n, int seed_index);

SweepResult run_sweep(const SweepConfig& cfg);

/// Sorted by (algorithm, n, seed_index).
void sort_rows(std::vector<SweepRow>& rows);

/// Median gap per n for one algorithm, in ascending n.
std::vector<std::pair<double, double>> median_gaps(const std::vector<SweepRow>& rows, const std::string& algorithm);

/// Recomputes slopes from rows.
void fit_slopes(SweepResult& result);

/// OLS of log(statistic) on log(n). Nonpositive statistics are dropped with a
/// warning; fewer than three usable points throws std::invalid_argument.
RateFit fit_rate(const std::vector<std::pair<double, double>>& points);

double median(std::vector<double> values);

struct MultiRewardResult {
    std::vector<double> gaps;  // per reward, max_s (V*_1(s) - V^pihat_1(s))
    double max_gap = 0.0;
};

/// One exploration dataset from mu; the transition model is fit once and each
/// reward is planned on the empirical MDP with that reward.
MultiRewardResult multi_reward_experiment(const Mdp& m, const Policy& mu, const std::vector<SATable>& rewards,
                                          std::int64_t n, std::uint64_t seed);

}  // namespace offrl
