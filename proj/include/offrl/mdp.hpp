#pragma once

// Finite-horizon, time-inhomogeneous tabular MDPs and their exact dynamic
// programming machinery.
//
// Indexing convention: steps are 0-based, h = 0 .. H-1. Value tables carry an
// extra row h = H that is identically zero.

#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "offrl/tables.hpp"

namespace offrl {

enum class RewardNoise { Deterministic, Bernoulli };

/// Tolerance on row sums of user-supplied distributions.
inline constexpr double kInputTolerance = 1e-12;
/// Tolerance on identities between derived quantities.
inline constexpr double kDerivedTolerance = 1e-10;

enum class ViolationKind {
    NegativeMass,
    BadRowSum,
    RewardOutOfRange,
    BadInitialDistribution,
    ShapeMismatch,
};

const char* to_string(ViolationKind kind);

/// Raised when an MDP or policy breaks one of its invariants. Carries the
/// (step, state, action) of the first offending row; -1 marks an axis that
/// does not apply.
class ValidationError : public std::invalid_argument {
public:
    ValidationError(ViolationKind kind, int step, int state, int action, const std::string& what);

    ViolationKind kind() const { return kind_; }
    int step() const { return step_; }
    int state() const { return state_; }
    int action() const { return action_; }

private:
    ViolationKind kind_;
    int step_;
    int state_;
    int action_;
};

class Mdp {
public:
    Mdp() = default;
    Mdp(int horizon, int num_states, int num_actions, RewardNoise noise = RewardNoise::Deterministic);

    int horizon() const { return horizon_; }
    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }
    RewardNoise reward_noise() const { return noise_; }
    void set_reward_noise(RewardNoise noise) { noise_ = noise; }

    std::span<double> transition(int h, int s, int a);
    std::span<const double> transition(int h, int s, int a) const;
    double& reward(int h, int s, int a) { return rewards_(h, s, a); }
    double reward(int h, int s, int a) const { return rewards_(h, s, a); }
    const SATable& rewards() const { return rewards_; }
    SATable& rewards() { return rewards_; }

    std::vector<double>& initial() { return initial_; }
    const std::vector<double>& initial() const { return initial_; }

    /// Raw transition storage, layout [h][s][a][s'].
    const std::vector<double>& transitions() const { return transitions_; }
    std::vector<double>& transitions() { return transitions_; }

    /// Variance of the realized reward at (h, s, a) under the noise model.
    double reward_variance(int h, int s, int a) const;

    friend bool operator==(const Mdp&, const Mdp&) = default;

private:
    int horizon_ = 0;
    int num_states_ = 0;
    int num_actions_ = 0;
    RewardNoise noise_ = RewardNoise::Deterministic;
    std::vector<double> transitions_;
    SATable rewards_;
    std::vector<double> initial_;
};

/// Per-step stochastic action distributions pi_h(a | s).
class Policy {
public:
    Policy() = default;
    Policy(int horizon, int num_states, int num_actions) : probs_(horizon, num_states, num_actions, 0.0) {}

    static Policy uniform(int horizon, int num_states, int num_actions);
    /// actions(h, s) gives the chosen action index.
    static Policy deterministic(const StepStateTable<int>& actions, int num_actions);

    int horizon() const { return probs_.steps(); }
    int num_states() const { return probs_.states(); }
    int num_actions() const { return probs_.actions(); }

    double& operator()(int h, int s, int a) { return probs_(h, s, a); }
    double operator()(int h, int s, int a) const { return probs_(h, s, a); }
    std::span<double> row(int h, int s) { return probs_.row(h, s); }
    std::span<const double> row(int h, int s) const { return probs_.row(h, s); }

    const SATable& probs() const { return probs_; }
    SATable& probs() { return probs_; }

    bool is_deterministic() const;

    friend bool operator==(const Policy&, const Policy&) = default;

private:
    SATable probs_;
};

struct ValueSolution {
    StateTable V;  // (H+1) x S, last row zero
    SATable Q;     // H x S x A
    double value = 0.0;
};

struct OptimalSolution {
    ValueSolution values;
    Policy policy;
};

/// d_h(s, a): probability of visiting (s, a) at step h.
struct Occupancy {
    SATable d;

    double state(int h, int s) const;
};

void validate_mdp(const Mdp& m);
void validate_policy(const Mdp& m, const Policy& pi);

/// Q_h(s, a) = r_h(s, a) + <P_h(.|s, a), next_value> for every (s, a).
std::vector<double> bellman_backup(const Mdp& m, int h, std::span<const double> next_value);

ValueSolution policy_evaluation(const Mdp& m, const Policy& pi);

/// Backward optimality recursion; greedy ties go to the lowest action index.
OptimalSolution optimal_planning(const Mdp& m);

/// Index of the largest entry, lowest index on ties.
int argmax_lowest(std::span<const double> values);

Occupancy occupancy_measure(const Mdp& m, const Policy& pi);

/// Occupancy conditioned on a fixed start state.
Occupancy occupancy_from_state(const Mdp& m, const Policy& pi, int start_state);

/// Var over s' ~ P_h(.|s, a) of next_value(s') plus the reward-noise variance,
/// laid out [s][a].
std::vector<double> conditional_variance(const Mdp& m, std::span<const double> next_value, int h);

/// Per-step conditional variances of r_h + V_{h+1} for a full value table.
SATable variance_table(const Mdp& m, const StateTable& V);

/// Law-of-total-variance pieces of Var_pi(sum_h r_h).
struct ReturnVarianceParts {
    double transition_term = 0.0;  // sum_h E[Var(r_h + V_{h+1}(s') | s_h, a_h)]
    double action_term = 0.0;      // sum_h E[Var_{a ~ pi}(Q_h(s_h, a)) | s_h]
    double initial_term = 0.0;     // Var_{s_1 ~ d1}(V_1(s_1))

    double total() const { return transition_term + action_term + initial_term; }
};

ReturnVarianceParts return_variance_parts(const Mdp& m, const Policy& pi);
double return_variance(const Mdp& m, const Policy& pi);

/// Both sides of the extended value difference identity, evaluated exactly.
struct ValueDifference {
    std::vector<double> lhs;   // Vhat_1(s) - V^{pi'}_1(s)
    StateTable policy_term;    // [h][s]: E_{pi'}[<Qhat_h(s_h,.), pi_h - pi'_h> | s_1 = s]
    StateTable model_term;     // [h][s]: E_{pi'}[Qhat_h - (r_h + P_h Vhat_{h+1}) | s_1 = s]

    /// sum over h of both terms for start state s.
    double rhs(int s) const;
};

ValueDifference extended_value_difference(const Mdp& m, const SATable& qhat, const Policy& pi,
                                          const Policy& pi_prime);

/// Largest total reward collectable along any trajectory.
double max_trajectory_reward(const Mdp& m);

}  // namespace offrl
