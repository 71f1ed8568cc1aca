#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "offrl/mdp.hpp"
#include "offrl/sampling.hpp"

namespace offrl {

/// The log factor log(H S A / delta), natural log.
double iota(int horizon, int num_states, int num_actions, double delta);

/// Plug-in estimates from offline counts. Unvisited cells get a uniform
/// next-state row and zero reward.
struct EmpiricalModel {
    int horizon = 0;
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> p_hat;  // [h][s][a][s']
    SATable r_hat;
    CountTable counts;

    std::span<const double> transition(int h, int s, int a) const {
        return {p_hat.data() + r_hat.index(h, s, a) * num_states, static_cast<std::size_t>(num_states)};
    }
    std::int64_t visits(int h, int s, int a) const { return counts.n_sa(h, s, a); }

    /// The estimated MDP with the given initial distribution.
    Mdp to_mdp(std::span<const double> initial) const;
};

EmpiricalModel fit_empirical_model(const CountTable& c);

/// Empirical initial-state frequencies of a dataset.
std::vector<double> empirical_initial_distribution(const Dataset& d);

/// sum dist*f^2 - (sum dist*f)^2, clamped at zero.
double empirical_variance(std::span<const double> dist, std::span<const double> f);

/// sqrt(2 V log(2/delta) / n) + 7 xi log(2/delta) / (3 n).
double empirical_bernstein_radius(double sample_variance, double range_bound, std::int64_t n, double delta);

/// True where n_{h,s,a} >= n d^mu_h(s,a) / 2; cells outside the behavior
/// support are vacuously true.
SAMask chernoff_event_diagnostic(const CountTable& c, const Occupancy& occ_mu, std::int64_t n);

}  // namespace offrl
