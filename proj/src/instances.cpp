#include "offrl/instances.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "offrl/estimation.hpp"
#include "offrl/rng.hpp"

namespace offrl {

void HardInstanceParams::validate() const {
    if (num_actions < 2) throw std::invalid_argument("hard instance: need at least two actions");
    if (horizon < 2) throw std::invalid_argument("hard instance: need horizon >= 2");
    auto in_range = [](double x) { return x >= 0.25 && x <= 0.75; };
    if (!in_range(p_star) || !in_range(p)) throw std::invalid_argument("hard instance: probabilities must lie in [1/4, 3/4]");
    if (!(p_star > p)) throw std::invalid_argument("hard instance: p_star must exceed p");
    if (shift < 1 || shift > horizon - 1) throw std::invalid_argument("hard instance: decision step must lie in [1, H-1]");
    if (!mu_weights.empty()) {
        if (static_cast<int>(mu_weights.size()) != num_actions)
            throw std::invalid_argument("hard instance: mu_weights needs one entry per action");
        double total = 0.0;
        for (double w : mu_weights) {
            if (w < 0.0) throw std::invalid_argument("hard instance: negative behavior weight");
            total += w;
        }
        if (std::abs(total - 1.0) > kInputTolerance) throw std::invalid_argument("hard instance: mu_weights must sum to 1");
        if (!(mu_weights[0] > 0.0 && mu_weights[1] > 0.0))
            throw std::invalid_argument("hard instance: behavior must play both a1 and a2");
    }
}

Instance hard_minimax_instance(const HardInstanceParams& params) {
    params.validate();
    constexpr int s1 = 0, plus = 1, minus = 2;
    const int H = params.horizon, A = params.num_actions, decision = params.shift - 1;
    const int best = params.which_optimal == OptimalArm::A1 ? 0 : 1;

    Mdp m(H, 3, A);
    m.initial()[s1] = 1.0;
    for (int h = 0; h < H; ++h)
        for (int a = 0; a < A; ++a) {
            m.transition(h, plus, a)[plus] = 1.0;
            m.transition(h, minus, a)[minus] = 1.0;
            m.reward(h, plus, a) = 1.0;
            if (h == decision) {
                const double up = a == best ? params.p_star : params.p;
                m.transition(h, s1, a)[plus] = up;
                m.transition(h, s1, a)[minus] = 1.0 - up;
            } else {
                m.transition(h, s1, a)[s1] = 1.0;
            }
        }
    Policy mu = Policy::uniform(H, 3, A);
    if (!params.mu_weights.empty())
        std::copy(params.mu_weights.begin(), params.mu_weights.end(), mu.row(decision, s1).begin());
    return {std::move(m), std::move(mu)};
}

double minimax_separation(double n1, double n2) { return std::sqrt(3.0) / (4.0 * std::sqrt(2.0 * (n1 + n2))); }

NonnegativityViolation::NonnegativityViolation(int step_, int state_, int action_, int next_state_, double value)
    : std::domain_error("local alternative: entry (" + std::to_string(step_) + "," + std::to_string(state_) + "," +
                        std::to_string(action_) + "," + std::to_string(next_state_) + ") would be " +
                        std::to_string(value) + "; raise n"),
      step(step_), state(state_), action(action_), next_state(next_state_) {}

double local_zeta(const Mdp& m, const Policy& mu) {
    const auto occ = occupancy_measure(m, mu);
    double dbar = std::numeric_limits<double>::infinity();
    for (double x : occ.d.data())
        if (x > 0.0) dbar = std::min(dbar, x);
    return m.horizon() / dbar;
}

Mdp local_alternative(const Mdp& m, const LocalInstanceParams& params) {
    if (!(params.zeta > 0.0)) throw std::invalid_argument("local alternative: zeta must be positive");
    const int H = m.horizon(), S = m.num_states(), A = m.num_actions();
    const auto optimal = optimal_planning(m);

    SATable counts(H, S, A, 0.0);
    if (const auto* expected = std::get_if<ExpectedCounts>(&params.counts)) {
        const auto occ = occupancy_measure(m, expected->mu);
        for (std::size_t i = 0; i < counts.data().size(); ++i)
            counts.data()[i] = static_cast<double>(expected->n) * occ.d.data()[i];
    } else {
        const auto& table = std::get<DatasetCounts>(params.counts).counts;
        if (table.horizon != H || table.num_states != S || table.num_actions != A)
            throw std::invalid_argument("local alternative: count table shape does not match the MDP");
        for (std::size_t i = 0; i < counts.data().size(); ++i)
            counts.data()[i] = static_cast<double>(table.n_sa.data()[i]);
    }

    Mdp out = m;
    for (int h = 0; h < H; ++h) {
        const auto next = optimal.values.V.row(h + 1);
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                const auto row = m.transition(h, s, a);
                const double var = empirical_variance(row, next);
                const double n_sa = counts(h, s, a);
                if (var <= 0.0 || n_sa <= 0.0) continue;
                const double mean = dot(row, next);
                const double scale = 8.0 * std::sqrt(params.zeta * n_sa * var);
                auto target = out.transition(h, s, a);
                for (int sp = 0; sp < S; ++sp) {
                    const double value = row[sp] * (1.0 + (next[sp] - mean) / scale);
                    if (value < 0.0) throw NonnegativityViolation(h, s, a, sp, value);
                    target[sp] = value;
                }
            }
    }
    return out;
}

double local_alternative_threshold(const Mdp& m, const Policy& mu, double zeta) {
    const int H = m.horizon(), S = m.num_states(), A = m.num_actions();
    const auto optimal = optimal_planning(m);
    const auto occ = occupancy_measure(m, mu);
    double threshold = 0.0;
    for (int h = 0; h < H; ++h) {
        const auto next = optimal.values.V.row(h + 1);
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                const auto row = m.transition(h, s, a);
                const double var = empirical_variance(row, next);
                const double dmu = occ.d(h, s, a);
                if (var <= 0.0 || dmu <= 0.0) continue;
                const double mean = dot(row, next);
                for (int sp = 0; sp < S; ++sp) {
                    if (row[sp] <= 0.0 || next[sp] >= mean) continue;
                    const double gap = mean - next[sp];
                    threshold = std::max(threshold, gap * gap / (64.0 * zeta * dmu * var));
                }
            }
    }
    return threshold;
}

double hellinger_sq(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw std::invalid_argument("hellinger_sq: size mismatch");
    double affinity = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) affinity += std::sqrt(p[i] * q[i]);
    return std::clamp(1.0 - affinity, 0.0, 1.0);
}

namespace {

// Stream ids keep the generator families independent under the same seed.
enum GeneratorStream : std::uint64_t { kDeterministic = 1, kPartial, kFastMixing, kBandit, kRandom };

void dirichlet(StreamRng& rng, double alpha, std::span<double> out) {
    std::gamma_distribution<double> gamma(alpha, 1.0);
    double total = 0.0;
    for (double& x : out) {
        x = gamma(rng.engine());
        total += x;
    }
    if (total <= 0.0) {
        std::fill(out.begin(), out.end(), 0.0);
        out[static_cast<std::size_t>(rng.uniform() * out.size())] = 1.0;
        return;
    }
    for (double& x : out) x /= total;
}

int uniform_index(StreamRng& rng, int n) { return std::min(n - 1, static_cast<int>(rng.uniform() * n)); }

void uniform_initial(Mdp& m) { std::fill(m.initial().begin(), m.initial().end(), 1.0 / m.num_states()); }

void fill_uniform_rewards(Mdp& m, StreamRng& rng) {
    for (double& r : m.rewards().data()) r = rng.uniform();
}

}  // namespace

Mdp deterministic_system(int num_states, int num_actions, int horizon, std::uint64_t seed) {
    StreamRng rng(seed, kDeterministic);
    Mdp m(horizon, num_states, num_actions);
    for (int h = 0; h < horizon; ++h)
        for (int s = 0; s < num_states; ++s)
            for (int a = 0; a < num_actions; ++a) m.transition(h, s, a)[uniform_index(rng, num_states)] = 1.0;
    fill_uniform_rewards(m, rng);
    uniform_initial(m);
    return m;
}

Mdp partially_deterministic(int num_states, int num_actions, int horizon, int stochastic_steps, std::uint64_t seed) {
    if (stochastic_steps < 0 || stochastic_steps >= horizon)
        throw std::invalid_argument("partially_deterministic: need 0 <= stochastic steps < horizon");
    StreamRng rng(seed, kPartial);
    Mdp m(horizon, num_states, num_actions);
    for (int h = 0; h < horizon; ++h)
        for (int s = 0; s < num_states; ++s)
            for (int a = 0; a < num_actions; ++a) {
                if (h < stochastic_steps)
                    dirichlet(rng, 1.0, m.transition(h, s, a));
                else
                    m.transition(h, s, a)[uniform_index(rng, num_states)] = 1.0;
            }
    fill_uniform_rewards(m, rng);
    uniform_initial(m);
    return m;
}

Mdp fast_mixing(int num_states, int num_actions, int horizon, std::uint64_t seed) {
    StreamRng rng(seed, kFastMixing);
    Mdp m(horizon, num_states, num_actions);
    std::vector<double> nu(num_states);
    for (int h = 0; h < horizon; ++h) {
        dirichlet(rng, 1.0, nu);
        for (int s = 0; s < num_states; ++s)
            for (int a = 0; a < num_actions; ++a) std::copy(nu.begin(), nu.end(), m.transition(h, s, a).begin());
    }
    fill_uniform_rewards(m, rng);
    uniform_initial(m);
    return m;
}

Mdp contextual_bandit(int num_states, int num_actions, std::uint64_t seed) {
    StreamRng rng(seed, kBandit);
    Mdp m(1, num_states, num_actions, RewardNoise::Bernoulli);
    for (int s = 0; s < num_states; ++s)
        for (int a = 0; a < num_actions; ++a) m.transition(0, s, a)[s] = 1.0;
    fill_uniform_rewards(m, rng);
    uniform_initial(m);
    return m;
}

Mdp random_mdp(int num_states, int num_actions, int horizon, std::uint64_t seed, double dirichlet_alpha,
               RewardNoise noise) {
    if (!(dirichlet_alpha > 0.0)) throw std::invalid_argument("random_mdp: alpha must be positive");
    StreamRng rng(seed, kRandom);
    Mdp m(horizon, num_states, num_actions, noise);
    for (int h = 0; h < horizon; ++h)
        for (int s = 0; s < num_states; ++s)
            for (int a = 0; a < num_actions; ++a) dirichlet(rng, dirichlet_alpha, m.transition(h, s, a));
    fill_uniform_rewards(m, rng);
    dirichlet(rng, dirichlet_alpha, m.initial());
    return m;
}

bool is_deterministic_step(const Mdp& m, int h) {
    for (int s = 0; s < m.num_states(); ++s)
        for (int a = 0; a < m.num_actions(); ++a) {
            const auto row = m.transition(h, s, a);
            if (std::count(row.begin(), row.end(), 1.0) != 1) return false;
        }
    return true;
}

bool is_state_action_independent_step(const Mdp& m, int h) {
    const auto first = m.transition(h, 0, 0);
    for (int s = 0; s < m.num_states(); ++s)
        for (int a = 0; a < m.num_actions(); ++a)
            if (!std::equal(first.begin(), first.end(), m.transition(h, s, a).begin())) return false;
    return true;
}

Instance two_branch_blind(const TwoBranchParams& params) {
    if (params.horizon < 3) throw std::invalid_argument("two_branch_blind: need horizon >= 3");
    if (params.num_actions < 2) throw std::invalid_argument("two_branch_blind: need at least two actions");
    if (!(params.q > 0.0 && params.q <= 1.0)) throw std::invalid_argument("two_branch_blind: q must lie in (0, 1]");
    if (!(params.p_star >= 0.0 && params.p_star <= 1.0 && params.p >= 0.0 && params.p <= 1.0))
        throw std::invalid_argument("two_branch_blind: arm probabilities must lie in [0, 1]");
    constexpr int root = 0, x = 1, y = 2, good = 3, empty = 4;
    const int H = params.horizon, A = params.num_actions, blind = A - 1;

    Mdp m(H, 5, A);
    m.initial()[root] = 1.0;
    for (int h = 0; h < H; ++h)
        for (int a = 0; a < A; ++a) {
            m.transition(h, good, a)[good] = 1.0;
            m.reward(h, good, a) = 1.0;
            m.transition(h, empty, a)[empty] = 1.0;
            if (h == 0) {
                m.transition(h, root, a)[x] = params.q;
                m.transition(h, root, a)[y] = 1.0 - params.q;
            } else {
                m.transition(h, root, a)[root] = 1.0;
            }
            if (h == 1) {
                m.transition(h, x, a)[a == blind ? good : empty] = 1.0;
                m.reward(h, x, a) = a == blind ? 1.0 : 0.0;
                const double up = a == A - 1 ? params.p_star : params.p;
                m.transition(h, y, a)[good] = up;
                m.transition(h, y, a)[empty] += 1.0 - up;
            } else {
                m.transition(h, x, a)[x] = 1.0;
                m.transition(h, y, a)[y] = 1.0;
            }
        }
    Policy mu = Policy::uniform(H, 5, A);
    for (int a = 0; a < A; ++a) mu(1, x, a) = a == blind ? 0.0 : 1.0 / (A - 1);
    return {std::move(m), std::move(mu)};
}

Policy uniform_policy(const Mdp& m) { return Policy::uniform(m.horizon(), m.num_states(), m.num_actions()); }

Policy epsilon_greedy_of_optimal(const Mdp& m, double epsilon) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1]");
    const auto optimal = optimal_planning(m);
    Policy mu = uniform_policy(m);
    for (double& x : mu.probs().data()) x *= epsilon;
    for (std::size_t i = 0; i < mu.probs().data().size(); ++i)
        mu.probs().data()[i] += (1.0 - epsilon) * optimal.policy.probs().data()[i];
    return mu;
}

}  // namespace offrl
