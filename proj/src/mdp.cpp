#include "offrl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace offrl {

const char* to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::NegativeMass: return "negative_mass";
        case ViolationKind::BadRowSum: return "bad_row_sum";
        case ViolationKind::RewardOutOfRange: return "reward_out_of_range";
        case ViolationKind::BadInitialDistribution: return "bad_initial_distribution";
        case ViolationKind::ShapeMismatch: return "shape_mismatch";
    }
    return "unknown";
}

ValidationError::ValidationError(ViolationKind kind, int step, int state, int action, const std::string& what)
    : std::invalid_argument(what), kind_(kind), step_(step), state_(state), action_(action) {}

namespace {

[[noreturn]] void fail(ViolationKind kind, int h, int s, int a, const std::string& detail) {
    std::ostringstream os;
    os << to_string(kind) << " at (" << h << "," << s << "," << a << "): " << detail;
    throw ValidationError(kind, h, s, a, os.str());
}

void check_distribution(std::span<const double> row, int h, int s, int a, ViolationKind sum_kind) {
    double total = 0.0;
    for (double p : row) {
        if (!(p >= 0.0)) fail(ViolationKind::NegativeMass, h, s, a, "entry " + std::to_string(p));
        total += p;
    }
    if (std::abs(total - 1.0) > kInputTolerance) fail(sum_kind, h, s, a, "sums to " + std::to_string(total));
}

}  // namespace

Mdp::Mdp(int horizon, int num_states, int num_actions, RewardNoise noise)
    : horizon_(horizon), num_states_(num_states), num_actions_(num_actions), noise_(noise),
      transitions_(static_cast<std::size_t>(horizon) * num_states * num_actions * num_states, 0.0),
      rewards_(horizon, num_states, num_actions, 0.0),
      initial_(static_cast<std::size_t>(num_states), 0.0) {
    if (horizon <= 0 || num_states <= 0 || num_actions <= 0)
        throw std::invalid_argument("Mdp: horizon, states and actions must be positive");
}

std::span<double> Mdp::transition(int h, int s, int a) {
    return {transitions_.data() + rewards_.index(h, s, a) * num_states_, static_cast<std::size_t>(num_states_)};
}

std::span<const double> Mdp::transition(int h, int s, int a) const {
    return {transitions_.data() + rewards_.index(h, s, a) * num_states_, static_cast<std::size_t>(num_states_)};
}

double Mdp::reward_variance(int h, int s, int a) const {
    if (noise_ == RewardNoise::Deterministic) return 0.0;
    const double r = rewards_(h, s, a);
    return r * (1.0 - r);
}

Policy Policy::uniform(int horizon, int num_states, int num_actions) {
    Policy pi(horizon, num_states, num_actions);
    std::fill(pi.probs_.data().begin(), pi.probs_.data().end(), 1.0 / num_actions);
    return pi;
}

Policy Policy::deterministic(const StepStateTable<int>& actions, int num_actions) {
    Policy pi(actions.steps(), actions.states(), num_actions);
    for (int h = 0; h < actions.steps(); ++h)
        for (int s = 0; s < actions.states(); ++s) pi(h, s, actions(h, s)) = 1.0;
    return pi;
}

bool Policy::is_deterministic() const {
    return std::all_of(probs_.data().begin(), probs_.data().end(), [](double p) { return p == 0.0 || p == 1.0; });
}

double Occupancy::state(int h, int s) const {
    double total = 0.0;
    for (double x : d.row(h, s)) total += x;
    return total;
}

void validate_mdp(const Mdp& m) {
    const int H = m.horizon(), S = m.num_states(), A = m.num_actions();
    if (m.transitions().size() != static_cast<std::size_t>(H) * S * A * S || m.initial().size() != static_cast<std::size_t>(S))
        fail(ViolationKind::ShapeMismatch, -1, -1, -1, "storage does not match (H, S, A)");
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                check_distribution(m.transition(h, s, a), h, s, a, ViolationKind::BadRowSum);
                const double r = m.reward(h, s, a);
                if (!(r >= 0.0 && r <= 1.0)) fail(ViolationKind::RewardOutOfRange, h, s, a, "reward " + std::to_string(r));
            }
    check_distribution(m.initial(), -1, -1, -1, ViolationKind::BadInitialDistribution);
}

void validate_policy(const Mdp& m, const Policy& pi) {
    if (pi.horizon() != m.horizon() || pi.num_states() != m.num_states() || pi.num_actions() != m.num_actions())
        fail(ViolationKind::ShapeMismatch, -1, -1, -1, "policy shape does not match the MDP");
    for (int h = 0; h < pi.horizon(); ++h)
        for (int s = 0; s < pi.num_states(); ++s) check_distribution(pi.row(h, s), h, s, -1, ViolationKind::BadRowSum);
}

std::vector<double> bellman_backup(const Mdp& m, int h, std::span<const double> next_value) {
    const int S = m.num_states(), A = m.num_actions();
    std::vector<double> q(static_cast<std::size_t>(S) * A);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) q[s * A + a] = m.reward(h, s, a) + dot(m.transition(h, s, a), next_value);
    return q;
}

ValueSolution policy_evaluation(const Mdp& m, const Policy& pi) {
    validate_policy(m, pi);
    const int H = m.horizon(), S = m.num_states(), A = m.num_actions();
    ValueSolution sol{StateTable(H + 1, S, 0.0), SATable(H, S, A, 0.0), 0.0};
    for (int h = H - 1; h >= 0; --h) {
        const auto q = bellman_backup(m, h, sol.V.row(h + 1));
        for (int s = 0; s < S; ++s) {
            double v = 0.0;
            for (int a = 0; a < A; ++a) {
                sol.Q(h, s, a) = q[s * A + a];
                v += pi(h, s, a) * q[s * A + a];
            }
            sol.V(h, s) = v;
        }
    }
    sol.value = dot(m.initial(), sol.V.row(0));
    return sol;
}

int argmax_lowest(std::span<const double> values) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

OptimalSolution optimal_planning(const Mdp& m) {
    const int H = m.horizon(), S = m.num_states(), A = m.num_actions();
    ValueSolution sol{StateTable(H + 1, S, 0.0), SATable(H, S, A, 0.0), 0.0};
    StepStateTable<int> greedy(H, S, 0);
    for (int h = H - 1; h >= 0; --h) {
        const auto q = bellman_backup(m, h, sol.V.row(h + 1));
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) sol.Q(h, s, a) = q[s * A + a];
            const int best = argmax_lowest(sol.Q.row(h, s));
            greedy(h, s) = best;
            sol.V(h, s) = sol.Q(h, s, best);
        }
    }
    sol.value = dot(m.initial(), sol.V.row(0));
    return {std::move(sol), Policy::deterministic(greedy, A)};
}

namespace {

Occupancy forward_occupancy(const Mdp& m, const Policy& pi, std::vector<double> state_dist) {
    const int H = m.horizon(), S = m.num_states(), A = m.num_actions();
    Occupancy occ{SATable(H, S, A, 0.0)};
    std::vector<double> next(S);
    for (int h = 0; h < H; ++h) {
        std::fill(next.begin(), next.end(), 0.0);
        for (int s = 0; s < S; ++s) {
            if (state_dist[s] == 0.0) continue;
            for (int a = 0; a < A; ++a) {
                const double mass = state_dist[s] * pi(h, s, a);
                occ.d(h, s, a) = mass;
                if (mass == 0.0) continue;
                const auto row = m.transition(h, s, a);
                for (int sp = 0; sp < S; ++sp) next[sp] += mass * row[sp];
            }
        }
        state_dist.swap(next);
    }
    return occ;
}

}  // namespace

Occupancy occupancy_measure(const Mdp& m, const Policy& pi) {
    validate_policy(m, pi);
    return forward_occupancy(m, pi, m.initial());
}

Occupancy occupancy_from_state(const Mdp& m, const Policy& pi, int start_state) {
    validate_policy(m, pi);
    std::vector<double> start(m.num_states(), 0.0);
    start.at(start_state) = 1.0;
    return forward_occupancy(m, pi, std::move(start));
}

std::vector<double> conditional_variance(const Mdp& m, std::span<const double> next_value, int h) {
    const int S = m.num_states(), A = m.num_actions();
    if (next_value.size() != static_cast<std::size_t>(S)) throw std::invalid_argument("conditional_variance: size mismatch");
    for (double v : next_value)
        if (!(v >= -kDerivedTolerance && v <= m.horizon() + kDerivedTolerance))
            throw std::out_of_range("conditional_variance: next value " + std::to_string(v) + " outside [0, H]");
    std::vector<double> var(static_cast<std::size_t>(S) * A);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
            const auto row = m.transition(h, s, a);
            double mean = 0.0, second = 0.0;
            for (int sp = 0; sp < S; ++sp) {
                mean += row[sp] * next_value[sp];
                second += row[sp] * next_value[sp] * next_value[sp];
            }
            var[s * A + a] = std::max(0.0, second - mean * mean) + m.reward_variance(h, s, a);
        }
    return var;
}

SATable variance_table(const Mdp& m, const StateTable& V) {
    const int H = m.horizon(), S = m.num_states(), A = m.num_actions();
    SATable out(H, S, A, 0.0);
    for (int h = 0; h < H; ++h) {
        const auto slice = conditional_variance(m, V.row(h + 1), h);
        std::copy(slice.begin(), slice.end(), out.row(h, 0).data());
    }
    return out;
}

ReturnVarianceParts return_variance_parts(const Mdp& m, const Policy& pi) {
    const auto sol = policy_evaluation(m, pi);
    const auto occ = occupancy_measure(m, pi);
    const auto var = variance_table(m, sol.V);
    const int H = m.horizon(), S = m.num_states(), A = m.num_actions();
    ReturnVarianceParts parts;
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s) {
            double state_mass = 0.0, mean = 0.0, second = 0.0;
            for (int a = 0; a < A; ++a) {
                parts.transition_term += occ.d(h, s, a) * var(h, s, a);
                const double q = sol.Q(h, s, a);
                state_mass += occ.d(h, s, a);
                mean += pi(h, s, a) * q;
                second += pi(h, s, a) * q * q;
            }
            parts.action_term += state_mass * std::max(0.0, second - mean * mean);
        }
    double mean = 0.0, second = 0.0;
    for (int s = 0; s < S; ++s) {
        mean += m.initial()[s] * sol.V(0, s);
        second += m.initial()[s] * sol.V(0, s) * sol.V(0, s);
    }
    parts.initial_term = std::max(0.0, second - mean * mean);
    return parts;
}

double return_variance(const Mdp& m, const Policy& pi) { return return_variance_parts(m, pi).total(); }

double ValueDifference::rhs(int s) const {
    double total = 0.0;
    for (int h = 0; h < policy_term.steps(); ++h) total += policy_term(h, s) + model_term(h, s);
    return total;
}

ValueDifference extended_value_difference(const Mdp& m, const SATable& qhat, const Policy& pi,
                                          const Policy& pi_prime) {
    const int H = m.horizon(), S = m.num_states(), A = m.num_actions();
    if (qhat.steps() != H || qhat.states() != S || qhat.actions() != A)
        throw ValidationError(ViolationKind::ShapeMismatch, -1, -1, -1, "qhat shape does not match the MDP");
    validate_policy(m, pi);
    validate_policy(m, pi_prime);

    StateTable vhat(H + 1, S, 0.0);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s) vhat(h, s) = dot(qhat.row(h, s), pi.row(h, s));

    // Per-cell integrands of the two sums.
    SATable model_gap(H, S, A, 0.0);
    for (int h = 0; h < H; ++h) {
        const auto backup = bellman_backup(m, h, vhat.row(h + 1));
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) model_gap(h, s, a) = qhat(h, s, a) - backup[s * A + a];
    }
    StateTable policy_gap(H, S, 0.0);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) policy_gap(h, s) += qhat(h, s, a) * (pi(h, s, a) - pi_prime(h, s, a));

    const auto reference = policy_evaluation(m, pi_prime);
    ValueDifference out{std::vector<double>(S), StateTable(H, S, 0.0), StateTable(H, S, 0.0)};
    for (int start = 0; start < S; ++start) {
        out.lhs[start] = vhat(0, start) - reference.V(0, start);
        const auto occ = occupancy_from_state(m, pi_prime, start);
        for (int h = 0; h < H; ++h)
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a) {
                    const double w = occ.d(h, s, a);
                    out.model_term(h, start) += w * model_gap(h, s, a);
                    out.policy_term(h, start) += w * policy_gap(h, s);
                }
    }
    return out;
}

double max_trajectory_reward(const Mdp& m) {
    const int H = m.horizon(), S = m.num_states(), A = m.num_actions();
    std::vector<double> next(S, 0.0), cur(S);
    for (int h = H - 1; h >= 0; --h) {
        for (int s = 0; s < S; ++s) {
            double best = 0.0;
            for (int a = 0; a < A; ++a) {
                double succ = 0.0;
                const auto row = m.transition(h, s, a);
                for (int sp = 0; sp < S; ++sp)
                    if (row[sp] > 0.0) succ = std::max(succ, next[sp]);
                const double r = m.reward_noise() == RewardNoise::Bernoulli && m.reward(h, s, a) > 0.0 ? 1.0 : m.reward(h, s, a);
                best = std::max(best, r + succ);
            }
            cur[s] = best;
        }
        next.swap(cur);
    }
    double best = 0.0;
    for (int s = 0; s < S; ++s)
        if (m.initial()[s] > 0.0) best = std::max(best, next[s]);
    return best;
}

}  // namespace offrl
