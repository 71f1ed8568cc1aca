#include "offrl/ope.hpp"

#include <algorithm>
#include <stdexcept>

namespace offrl {

OpeResult tmis_estimate(const Dataset& d, const Policy& pi) {
    const auto& meta = d.meta;
    if (meta.num_episodes < 1) throw std::invalid_argument("tmis_estimate: empty dataset");
    if (pi.horizon() != meta.horizon || pi.num_states() != meta.num_states || pi.num_actions() != meta.num_actions)
        throw std::invalid_argument("tmis_estimate: policy shape does not match the dataset");
    const int H = meta.horizon, S = meta.num_states, A = meta.num_actions;
    const CountTable c = count(d);
    const double n = static_cast<double>(meta.num_episodes);

    OpeResult out{0.0, 0.0, StateTable(H, S, 0.0), StateTable(H, S, 0.0), StateTable(H, S, 0.0), {}, {}};
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s) {
            std::int64_t visits = 0;
            for (int a = 0; a < A; ++a) {
                const auto n_sa = c.visits(h, s, a);
                visits += n_sa;
                if (n_sa > 0) out.r_hat_pi(h, s) += pi(h, s, a) * c.reward_sum(h, s, a) / static_cast<double>(n_sa);
            }
            out.d_hat_mu(h, s) = static_cast<double>(visits) / n;
        }

    for (int s = 0; s < S; ++s) out.d_hat_pi(0, s) = out.d_hat_mu(0, s);
    for (int h = 1; h < H; ++h)
        for (int s = 0; s < S; ++s) {
            const double mass = out.d_hat_pi(h - 1, s);
            if (mass == 0.0) continue;
            for (int a = 0; a < A; ++a) {
                const auto n_sa = c.visits(h - 1, s, a);
                if (n_sa == 0 || pi(h - 1, s, a) == 0.0) continue;
                const double w = mass * pi(h - 1, s, a) / static_cast<double>(n_sa);
                const auto next = c.next_counts(h - 1, s, a);
                for (int sp = 0; sp < S; ++sp) out.d_hat_pi(h, sp) += w * static_cast<double>(next[sp]);
            }
        }

    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s) out.v_hat_raw += out.d_hat_pi(h, s) * out.r_hat_pi(h, s);
    out.v_hat = std::clamp(out.v_hat_raw, 0.0, static_cast<double>(H));
    return out;
}

void attach_weight_bounds(OpeResult& result, const Mdp& m, const Policy& mu, const Policy& pi) {
    const auto rep = coverage_report(m, mu, pi);
    result.tau_s = rep.tau_s;
    result.tau_a = rep.tau_a;
}

}  // namespace offrl
