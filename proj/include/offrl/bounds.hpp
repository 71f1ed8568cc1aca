#pragma once

#include <cstdint>
#include <vector>

#include "offrl/mdp.hpp"
#include "offrl/sampling.hpp"

namespace offrl {

/// Multiplicative constants for the closed-form bounds. The theory only
/// asserts these exist, so rate experiments use unit().
struct BoundConstants {
    double c_prime = 16.0;  // upper-bound constant
    double lower_c = 0.0;   // lower-bound constant

    static BoundConstants theory();
    static BoundConstants unit();
};

struct BoundBreakdown {
    SATable per_cell;  // d*_h(s,a) sqrt(Var / (n d^mu_h(s,a))) on the trackable set, else 0
    double iota = 0.0;
    double main_term = 0.0;     // sqrt(iota) * sum(per_cell)
    double higher_order = 0.0;  // H^3 iota / (n dbar_m)
    double apvi_bound = 0.0;    // c_prime * main_term + higher_order
    double vpvi_bound = 0.0;
    double uniform_bound = 0.0;         // sqrt(H^3 iota / (n d_m))
    double horizon_free_bound = 0.0;    // sqrt(H B^2 iota / (n d_m))
    double concentrability_bound = 0.0; // sqrt(H^3 S C* iota / n)
    double env_norm_bound = 0.0;        // sum_h sqrt(Q*_h iota / (n dbar_m))
    double af_gap = 0.0;
    double lower_bound_value = 0.0;     // lower_c sum d* sqrt(Var / (zeta d^mu)), zeta = H / dbar_m
    double zeta = 0.0;
    double xi = 0.0;
    double trajectory_reward_cap = 0.0;  // B
    std::vector<double> q_star_per_h;    // max_{s,a} Var(r_h + V*_{h+1})
    double d_m = 0.0;
    double dbar_m = 0.0;
    double c_star = 0.0;
    double v_star = 0.0;
};

BoundBreakdown intrinsic_bound(const Mdp& m, const Policy& mu, std::int64_t n, double delta,
                               const BoundConstants& constants = BoundConstants::theory());

/// c_prime H sum_{h, (s,a) in C_h} d*_h(s,a) sqrt(iota / (n d^mu_h(s,a))).
double vpvi_bound(const Mdp& m, const Policy& mu, std::int64_t n, double delta,
                  const BoundConstants& constants = BoundConstants::theory());

/// Absorbed mass of the (original) optimal policy in the augmented MDP built
/// from the behavior support, summed over steps 2..H+1.
double af_gap(const Mdp& m, const Policy& mu);

/// sqrt((1/n) sum_h sum_{s,a} d^pi^2 / d^mu Var(r_h + V^pi_{h+1})); +inf when pi
/// visits a cell mu never does.
double ope_error_bound(const Mdp& m, const Policy& mu, const Policy& pi, std::int64_t n);

}  // namespace offrl
