#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "offrl/mdp.hpp"
#include "offrl/sampling.hpp"

namespace offrl {

/// An MDP paired with the behavior policy it was designed for.
struct Instance {
    Mdp mdp;
    Policy mu;
};

enum class OptimalArm { A1, A2 };

/// Three-state two-point family: s1 (index 0) branches to s+ (index 1,
/// reward 1, absorbing) or s- (index 2, absorbing) at the decision step.
struct HardInstanceParams {
    int num_actions = 2;
    int horizon = 2;
    double p_star = 0.75;
    double p = 0.25;
    OptimalArm which_optimal = OptimalArm::A1;
    int shift = 1;                   // 1-based decision step
    std::vector<double> mu_weights;  // behavior at (decision step, s1); empty means uniform

    void validate() const;
};

Instance hard_minimax_instance(const HardInstanceParams& params);

/// Separation p* - p at which the two instances M(p*, p) and M(p, p*) cannot be
/// told apart from n1 + n2 samples of the two arms.
double minimax_separation(double n1, double n2);

struct ExpectedCounts {
    std::int64_t n = 0;
    Policy mu;  // counts are n * d^mu_h(s, a)
};
struct DatasetCounts {
    CountTable counts;
};

struct LocalInstanceParams {
    double zeta = 0.0;  // H / dbar_m
    std::variant<ExpectedCounts, DatasetCounts> counts;
};

class NonnegativityViolation : public std::domain_error {
public:
    NonnegativityViolation(int step, int state, int action, int next_state, double value);
    int step, state, action, next_state;
};

/// H / dbar_m for the behavior policy mu.
double local_zeta(const Mdp& m, const Policy& mu);

/// Perturbed kernel P'_h(s'|s,a) = P (1 + (V*(s') - E_P V*) / (8 sqrt(zeta n_sa Var_P V*))).
/// Cells with zero variance or zero count are left unchanged.
Mdp local_alternative(const Mdp& m, const LocalInstanceParams& params);

/// Smallest n for which local_alternative with ExpectedCounts(n, mu) has no
/// negative entry.
double local_alternative_threshold(const Mdp& m, const Policy& mu, double zeta);

/// 1 - sum sqrt(p q).
double hellinger_sq(std::span<const double> p, std::span<const double> q);

Mdp deterministic_system(int num_states, int num_actions, int horizon, std::uint64_t seed);
/// The first `stochastic_steps` steps draw Dirichlet rows; the rest are
/// deterministic. Needs stochastic_steps < horizon, since the last step's
/// successor value is identically zero.
Mdp partially_deterministic(int num_states, int num_actions, int horizon, int stochastic_steps, std::uint64_t seed);
/// P_h(.|s, a) = nu_h for every (s, a).
Mdp fast_mixing(int num_states, int num_actions, int horizon, std::uint64_t seed);
/// H = 1, uniform contexts, Bernoulli rewards.
Mdp contextual_bandit(int num_states, int num_actions, std::uint64_t seed);
Mdp random_mdp(int num_states, int num_actions, int horizon, std::uint64_t seed, double dirichlet_alpha = 1.0,
               RewardNoise noise = RewardNoise::Deterministic);

/// Every transition row at step h is a point mass.
bool is_deterministic_step(const Mdp& m, int h);
/// Every transition row at step h is the same distribution.
bool is_state_action_independent_step(const Mdp& m, int h);

/// Root -> {X w.p. q, Y w.p. 1-q}. At X the last action earns 1 and leads to
/// the rewarding absorbing state G; the other actions lead to the empty state
/// Z, and the behavior policy never plays the last action. At Y, the last arm
/// reaches G w.p. p_star and every other arm w.p. p, so a planner whose values
/// tie (all clipped to 0) does not land on the good arm by index order.
/// States: root 0, X 1, Y 2, G 3, Z 4.
struct TwoBranchParams {
    int horizon = 5;
    int num_actions = 2;
    double q = 1.0;
    double p_star = 0.75;
    double p = 0.25;
};

Instance two_branch_blind(const TwoBranchParams& params);

/// Behavior policy presets.
Policy uniform_policy(const Mdp& m);
Policy epsilon_greedy_of_optimal(const Mdp& m, double epsilon);

}  // namespace offrl
