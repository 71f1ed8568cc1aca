#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "offrl/mdp.hpp"

namespace offrl {

struct Transition {
    int state = 0;
    int action = 0;
    double reward = 0.0;
    int next_state = 0;

    friend bool operator==(const Transition&, const Transition&) = default;
};

struct DatasetMeta {
    std::int64_t num_episodes = 0;
    int horizon = 0;
    int num_states = 0;
    int num_actions = 0;
    std::uint64_t seed = 0;

    friend bool operator==(const DatasetMeta&, const DatasetMeta&) = default;
};

/// n offline episodes of length H, stored episode-major.
struct Dataset {
    DatasetMeta meta;
    std::vector<Transition> steps;

    std::span<const Transition> episode(std::int64_t i) const {
        return {steps.data() + i * meta.horizon, static_cast<std::size_t>(meta.horizon)};
    }
    const Transition& at(std::int64_t episode, int h) const { return steps[episode * meta.horizon + h]; }

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Throws std::invalid_argument if an index or reward is out of range.
void validate_dataset(const Dataset& d);

struct CountTable {
    int horizon = 0;
    int num_states = 0;
    int num_actions = 0;
    std::int64_t num_episodes = 0;
    StepStateActionTable<std::int64_t> n_sa;
    std::vector<std::int64_t> n_sas;  // [h][s][a][s']
    SATable reward_sum;

    std::int64_t visits(int h, int s, int a) const { return n_sa(h, s, a); }
    std::span<const std::int64_t> next_counts(int h, int s, int a) const {
        return {n_sas.data() + n_sa.index(h, s, a) * num_states, static_cast<std::size_t>(num_states)};
    }
    std::span<std::int64_t> next_counts(int h, int s, int a) {
        return {n_sas.data() + n_sa.index(h, s, a) * num_states, static_cast<std::size_t>(num_states)};
    }
};

/// Rolls out n i.i.d. episodes of mu. Episode i draws from the stream
/// (seed, i), so the result does not depend on `threads`.
Dataset rollout(const Mdp& m, const Policy& mu, std::int64_t n, std::uint64_t seed, int threads = 1);

CountTable count(const Dataset& d);

struct CoverageReport {
    double d_m = 0.0;     // min behavior occupancy over reachable cells (0 if one is missed)
    double dbar_m = 0.0;  // min positive behavior occupancy
    SAMask trackable;     // d^mu_h(s, a) > 0
    double c_star = 0.0;  // max d^{pi*}/d^mu, +inf if pi* leaves the support
    double c_mu = 0.0;    // sup over all policies, computed exactly by max-reach DP
    double tau_s = 0.0;
    double tau_a = 0.0;
    bool uniform_coverage = false;         // d_m > 0
    bool uniform_concentrability = false;  // c_mu finite
    bool single_concentrability = false;   // supp d^{pi*} within supp d^mu
};

/// Reachability of (h, s) under some policy, by forward boolean propagation.
StepStateTable<std::uint8_t> reachable_states(const Mdp& m);

/// max over policies of P(s_h = s), for every (h, s).
StateTable max_reach_probability(const Mdp& m);

CoverageReport coverage_report(const Mdp& m, const Policy& mu, const Policy& pi_star);

}  // namespace offrl
