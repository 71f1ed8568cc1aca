#include "offrl/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace offrl {

double iota(int horizon, int num_states, int num_actions, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("iota: delta must lie in (0, 1)");
    return std::log(static_cast<double>(horizon) * num_states * num_actions / delta);
}

Mdp EmpiricalModel::to_mdp(std::span<const double> initial) const {
    Mdp m(horizon, num_states, num_actions, RewardNoise::Deterministic);
    m.transitions() = p_hat;
    m.rewards() = r_hat;
    m.initial().assign(initial.begin(), initial.end());
    return m;
}

EmpiricalModel fit_empirical_model(const CountTable& c) {
    const int H = c.horizon, S = c.num_states, A = c.num_actions;
    EmpiricalModel em{H, S, A, std::vector<double>(static_cast<std::size_t>(H) * S * A * S, 0.0), SATable(H, S, A, 0.0), c};
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                double* row = em.p_hat.data() + em.r_hat.index(h, s, a) * S;
                const std::int64_t n = c.n_sa(h, s, a);
                if (n == 0) {
                    std::fill(row, row + S, 1.0 / S);
                    continue;
                }
                const auto next = c.next_counts(h, s, a);
                for (int sp = 0; sp < S; ++sp) row[sp] = static_cast<double>(next[sp]) / static_cast<double>(n);
                em.r_hat(h, s, a) = c.reward_sum(h, s, a) / static_cast<double>(n);
            }
    return em;
}

std::vector<double> empirical_initial_distribution(const Dataset& d) {
    std::vector<double> out(d.meta.num_states, 0.0);
    for (std::int64_t i = 0; i < d.meta.num_episodes; ++i) out[d.at(i, 0).state] += 1.0;
    for (double& x : out) x /= static_cast<double>(d.meta.num_episodes);
    return out;
}

double empirical_variance(std::span<const double> dist, std::span<const double> f) {
    double mean = 0.0, second = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        mean += dist[i] * f[i];
        second += dist[i] * f[i] * f[i];
    }
    return std::max(0.0, second - mean * mean);
}

double empirical_bernstein_radius(double sample_variance, double range_bound, std::int64_t n, double delta) {
    if (n < 1 || !(range_bound > 0.0) || !(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("empirical_bernstein_radius: need n >= 1, range > 0, delta in (0, 1)");
    const double log_term = std::log(2.0 / delta);
    const double nn = static_cast<double>(n);
    return std::sqrt(2.0 * std::max(0.0, sample_variance) * log_term / nn) + 7.0 * range_bound * log_term / (3.0 * nn);
}

SAMask chernoff_event_diagnostic(const CountTable& c, const Occupancy& occ_mu, std::int64_t n) {
    SAMask mask(c.horizon, c.num_states, c.num_actions, 1);
    for (int h = 0; h < c.horizon; ++h)
        for (int s = 0; s < c.num_states; ++s)
            for (int a = 0; a < c.num_actions; ++a) {
                const double dmu = occ_mu.d(h, s, a);
                if (dmu > 0.0) mask(h, s, a) = static_cast<double>(c.n_sa(h, s, a)) >= static_cast<double>(n) * dmu / 2.0;
            }
    return mask;
}

}  // namespace offrl
