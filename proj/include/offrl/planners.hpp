#pragma once

#include <vector>

#include "offrl/estimation.hpp"
#include "offrl/mdp.hpp"

namespace offrl {

struct PlannerConfig {
    double delta = 0.1;
    double c_vpvi = 2.0;  // Hoeffding-scale constant of the vanilla planner
    double c1 = 2.0;      // Bernstein standard-deviation coefficient
    double c2 = 14.0;     // Bernstein range coefficient
    bool clip_enabled = true;

    void validate() const;
};

struct PlannerOutput {
    Policy policy;        // deterministic greedy on the clipped Q
    StateTable v_hat;     // (H+1) x S pessimistic values
    SATable q_bar;        // clipped pessimistic Q
    SATable bonus;        // penalty Gamma_h(s, a)
    /// Value of the absorbing state per step; only filled by af_apvi.
    std::vector<double> absorbing_value;

    /// <initial, Vhat_1>.
    double pessimistic_value(std::span<const double> initial) const;

    friend bool operator==(const PlannerOutput&, const PlannerOutput&) = default;
};

/// Penalty C H iota / sqrt(n), or C H iota at unvisited cells.
PlannerOutput vpvi(const EmpiricalModel& em, const PlannerConfig& cfg);

/// Empirical-Bernstein penalty c1 sqrt(Var_Phat(Vhat_{h+1}) iota / n) + c2 H iota / n.
/// Unvisited cells get c1 H sqrt(iota) + c2 H iota.
PlannerOutput apvi(const EmpiricalModel& em, const PlannerConfig& cfg);

/// apvi on the empirical augmented model: unvisited cells move to the
/// absorbing state with zero reward and zero penalty.
PlannerOutput af_apvi(const EmpiricalModel& em, const PlannerConfig& cfg);

/// MDP with one extra zero-reward absorbing state (index S) that swallows
/// every cell outside the trackable mask.
struct AugmentedMdp {
    Mdp mdp;  // S+1 states
    SAMask trackable;
    int absorbing_state = 0;

    int original_states() const { return absorbing_state; }
};

AugmentedMdp augment_mdp(const Mdp& m, const SAMask& trackable);

/// Extends a policy on the original states to the augmented state space;
/// the absorbing state plays action 0.
Policy embed_policy(const Policy& pi);

/// Mass on the absorbing state at steps 0..H (entry H is the post-horizon step).
std::vector<double> absorbing_mass(const AugmentedMdp& aug, const Policy& embedded);

}  // namespace offrl
