#include "offrl/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "offrl/estimation.hpp"
#include "offrl/planners.hpp"

namespace offrl {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_sqrt_ratio(double numerator, double denominator) {
    if (denominator <= 0.0) return numerator > 0.0 ? kInf : 0.0;
    return std::sqrt(numerator / denominator);
}
}  // namespace

BoundConstants BoundConstants::theory() { return {16.0, 1.0 / (2.0 * std::sqrt(96.0))}; }
BoundConstants BoundConstants::unit() { return {1.0, 1.0}; }

BoundBreakdown intrinsic_bound(const Mdp& m, const Policy& mu, std::int64_t n, double delta,
                               const BoundConstants& constants) {
    if (n < 1) throw std::invalid_argument("intrinsic_bound: n must be positive");
    const int H = m.horizon(), S = m.num_states(), A = m.num_actions();
    const double Hd = H, nd = static_cast<double>(n);
    const auto optimal = optimal_planning(m);
    const auto occ_star = occupancy_measure(m, optimal.policy);
    const auto occ_mu = occupancy_measure(m, mu);
    const auto var = variance_table(m, optimal.values.V);
    const auto coverage = coverage_report(m, mu, optimal.policy);

    BoundBreakdown b;
    b.iota = iota(H, S, A, delta);
    b.d_m = coverage.d_m;
    b.dbar_m = coverage.dbar_m;
    b.c_star = coverage.c_star;
    b.v_star = optimal.values.value;
    b.per_cell = SATable(H, S, A, 0.0);
    b.zeta = Hd / b.dbar_m;
    b.q_star_per_h.assign(H, 0.0);

    double cell_sum = 0.0, vpvi_sum = 0.0;
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                b.q_star_per_h[h] = std::max(b.q_star_per_h[h], var(h, s, a));
                const double dmu = occ_mu.d(h, s, a);
                if (dmu <= 0.0) continue;
                const double dstar = occ_star.d(h, s, a);
                b.per_cell(h, s, a) = dstar * std::sqrt(var(h, s, a) / (nd * dmu));
                cell_sum += b.per_cell(h, s, a);
                vpvi_sum += dstar * std::sqrt(b.iota / (nd * dmu));
            }

    b.main_term = std::sqrt(b.iota) * cell_sum;
    b.higher_order = Hd * Hd * Hd * b.iota / (nd * b.dbar_m);
    b.apvi_bound = constants.c_prime * b.main_term + b.higher_order;
    b.vpvi_bound = constants.c_prime * Hd * vpvi_sum;
    b.trajectory_reward_cap = max_trajectory_reward(m);
    b.uniform_bound = safe_sqrt_ratio(Hd * Hd * Hd * b.iota, nd * b.d_m);
    b.horizon_free_bound = safe_sqrt_ratio(Hd * b.trajectory_reward_cap * b.trajectory_reward_cap * b.iota, nd * b.d_m);
    b.concentrability_bound = std::isinf(b.c_star) ? kInf : std::sqrt(Hd * Hd * Hd * S * b.c_star * b.iota / nd);
    for (int h = 0; h < H; ++h) b.env_norm_bound += std::sqrt(b.q_star_per_h[h] * b.iota / (nd * b.dbar_m));
    // Same per-cell table with n d^mu replaced by zeta d^mu.
    b.lower_bound_value = constants.lower_c * cell_sum * std::sqrt(nd / b.zeta);
    b.af_gap = af_gap(m, mu);

    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                const double dmu = occ_mu.d(h, s, a);
                const auto row = m.transition(h, s, a);
                const auto next = optimal.values.V.row(h + 1);
                const double var_v = empirical_variance(row, next);
                if (dmu * var_v <= 0.0) continue;
                const double mean = dot(row, next);
                for (int sp = 0; sp < S; ++sp)
                    b.xi = std::max(b.xi, row[sp] * (next[sp] - mean) / std::sqrt(2.0 * dmu * var_v));
            }
    return b;
}

double vpvi_bound(const Mdp& m, const Policy& mu, std::int64_t n, double delta, const BoundConstants& constants) {
    return intrinsic_bound(m, mu, n, delta, constants).vpvi_bound;
}

double af_gap(const Mdp& m, const Policy& mu) {
    const auto optimal = optimal_planning(m);
    const auto occ_mu = occupancy_measure(m, mu);
    SAMask mask(m.horizon(), m.num_states(), m.num_actions(), 0);
    for (std::size_t i = 0; i < mask.data().size(); ++i) mask.data()[i] = occ_mu.d.data()[i] > 0.0;
    const auto aug = augment_mdp(m, mask);
    const auto mass = absorbing_mass(aug, embed_policy(optimal.policy));
    // Steps 2..H+1 in 1-based terms.
    return std::accumulate(mass.begin() + 1, mass.end(), 0.0);
}

double ope_error_bound(const Mdp& m, const Policy& mu, const Policy& pi, std::int64_t n) {
    if (n < 1) throw std::invalid_argument("ope_error_bound: n must be positive");
    const int H = m.horizon(), S = m.num_states(), A = m.num_actions();
    const auto occ_pi = occupancy_measure(m, pi);
    const auto occ_mu = occupancy_measure(m, mu);
    const auto var = variance_table(m, policy_evaluation(m, pi).V);
    double total = 0.0;
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                const double dpi = occ_pi.d(h, s, a);
                if (dpi <= 0.0) continue;
                const double dmu = occ_mu.d(h, s, a);
                if (dmu <= 0.0) return kInf;
                total += dpi * dpi / dmu * var(h, s, a);
            }
    return std::sqrt(total / static_cast<double>(n));
}

}  // namespace offrl
