#pragma once

#include <optional>

#include "offrl/mdp.hpp"
#include "offrl/sampling.hpp"

namespace offrl {

/// Tabular marginalized importance sampling estimate with its intermediate
/// tables. Unvisited (s, a) cells contribute zero transition mass and zero
/// reward, so d_hat_pi can leak mass.
struct OpeResult {
    double v_hat = 0.0;      // clamped to [0, H]
    double v_hat_raw = 0.0;
    StateTable d_hat_pi;     // H x S
    StateTable d_hat_mu;     // H x S, empirical state frequencies
    StateTable r_hat_pi;     // H x S
    std::optional<double> tau_s;
    std::optional<double> tau_a;
};

OpeResult tmis_estimate(const Dataset& d, const Policy& pi);

/// Fills tau_s, tau_a from the exact occupancies of pi and mu on m.
void attach_weight_bounds(OpeResult& result, const Mdp& m, const Policy& mu, const Policy& pi);

}  // namespace offrl
