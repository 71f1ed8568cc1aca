#include "offrl/planners.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace offrl {

void PlannerConfig::validate() const {
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("planner: delta must lie in (0, 1)");
    if (!(c_vpvi > 0.0 && c1 > 0.0 && c2 > 0.0)) throw std::invalid_argument("planner: constants must be positive");
}

double PlannerOutput::pessimistic_value(std::span<const double> initial) const {
    double v = 0.0;
    for (std::size_t s = 0; s < initial.size(); ++s) v += initial[s] * v_hat(0, static_cast<int>(s));
    return v;
}

namespace {

enum class PenaltyKind { Hoeffding, Bernstein };

// Model tables the recursion reads; lets the augmented model reuse the loop.
struct ModelTables {
    int horizon;
    int num_states;
    int num_actions;
    const std::vector<double>& p;  // [h][s][a][s']
    const SATable& r;
    const StepStateActionTable<std::int64_t>& n;
};

PlannerOutput pessimistic_value_iteration(const ModelTables& model, const PlannerConfig& cfg, PenaltyKind kind,
                                          double log_factor, double unvisited_penalty) {
    const int H = model.horizon, S = model.num_states, A = model.num_actions;
    const double Hd = static_cast<double>(H);
    PlannerOutput out{Policy(H, S, A), StateTable(H + 1, S, 0.0), SATable(H, S, A, 0.0), SATable(H, S, A, 0.0), {}};
    StepStateTable<int> greedy(H, S, 0);

    for (int h = H - 1; h >= 0; --h) {
        const auto next_value = out.v_hat.row(h + 1);
        const double cap = static_cast<double>(H - h);
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                const std::span<const double> row{model.p.data() + model.r.index(h, s, a) * S, static_cast<std::size_t>(S)};
                const double q_hat = model.r(h, s, a) + dot(row, next_value);
                const std::int64_t visits = model.n(h, s, a);
                double gamma = unvisited_penalty;
                if (visits >= 1) {
                    const double nn = static_cast<double>(visits);
                    if (kind == PenaltyKind::Hoeffding) {
                        gamma = cfg.c_vpvi * Hd * log_factor / std::sqrt(nn);
                    } else {
                        const double var = empirical_variance(row, next_value);
                        gamma = cfg.c1 * std::sqrt(var * log_factor / nn) + cfg.c2 * Hd * log_factor / nn;
                    }
                }
                double q = q_hat - gamma;
                if (cfg.clip_enabled) q = std::max(0.0, std::min(q, cap));
                out.bonus(h, s, a) = gamma;
                out.q_bar(h, s, a) = q;
            }
            const int best = argmax_lowest(out.q_bar.row(h, s));
            greedy(h, s) = best;
            out.v_hat(h, s) = out.q_bar(h, s, best);
        }
    }
    out.policy = Policy::deterministic(greedy, A);
    return out;
}

}  // namespace

PlannerOutput vpvi(const EmpiricalModel& em, const PlannerConfig& cfg) {
    cfg.validate();
    const double log_factor = iota(em.horizon, em.num_states, em.num_actions, cfg.delta);
    const ModelTables model{em.horizon, em.num_states, em.num_actions, em.p_hat, em.r_hat, em.counts.n_sa};
    return pessimistic_value_iteration(model, cfg, PenaltyKind::Hoeffding, log_factor,
                                       cfg.c_vpvi * em.horizon * log_factor);
}

PlannerOutput apvi(const EmpiricalModel& em, const PlannerConfig& cfg) {
    cfg.validate();
    const double log_factor = iota(em.horizon, em.num_states, em.num_actions, cfg.delta);
    const ModelTables model{em.horizon, em.num_states, em.num_actions, em.p_hat, em.r_hat, em.counts.n_sa};
    const double unvisited = cfg.c1 * em.horizon * std::sqrt(log_factor) + cfg.c2 * em.horizon * log_factor;
    return pessimistic_value_iteration(model, cfg, PenaltyKind::Bernstein, log_factor, unvisited);
}

PlannerOutput af_apvi(const EmpiricalModel& em, const PlannerConfig& cfg) {
    cfg.validate();
    const int H = em.horizon, S = em.num_states, A = em.num_actions, S2 = S + 1;
    // The union bound behind iota ranges over the original S states only.
    const double log_factor = iota(H, S, A, cfg.delta);

    std::vector<double> p(static_cast<std::size_t>(H) * S2 * A * S2, 0.0);
    SATable r(H, S2, A, 0.0);
    StepStateActionTable<std::int64_t> n(H, S2, A, 0);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S2; ++s)
            for (int a = 0; a < A; ++a) {
                double* row = p.data() + r.index(h, s, a) * S2;
                if (s < S && em.visits(h, s, a) > 0) {
                    const auto src = em.transition(h, s, a);
                    std::copy(src.begin(), src.end(), row);
                    r(h, s, a) = em.r_hat(h, s, a);
                    n(h, s, a) = em.visits(h, s, a);
                } else {
                    row[S] = 1.0;
                }
            }
    const ModelTables model{H, S2, A, p, r, n};
    auto full = pessimistic_value_iteration(model, cfg, PenaltyKind::Bernstein, log_factor, 0.0);

    PlannerOutput out{Policy(H, S, A), StateTable(H + 1, S, 0.0), SATable(H, S, A, 0.0), SATable(H, S, A, 0.0),
                      std::vector<double>(static_cast<std::size_t>(H) + 1, 0.0)};
    for (int h = 0; h <= H; ++h) {
        for (int s = 0; s < S; ++s) out.v_hat(h, s) = full.v_hat(h, s);
        out.absorbing_value[h] = full.v_hat(h, S);
    }
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                out.policy(h, s, a) = full.policy(h, s, a);
                out.q_bar(h, s, a) = full.q_bar(h, s, a);
                out.bonus(h, s, a) = full.bonus(h, s, a);
            }
    return out;
}

AugmentedMdp augment_mdp(const Mdp& m, const SAMask& trackable) {
    const int H = m.horizon(), S = m.num_states(), A = m.num_actions();
    if (trackable.steps() != H || trackable.states() != S || trackable.actions() != A)
        throw std::invalid_argument("augment_mdp: mask shape does not match the MDP");
    AugmentedMdp aug{Mdp(H, S + 1, A, m.reward_noise()), trackable, S};
    for (int h = 0; h < H; ++h)
        for (int s = 0; s <= S; ++s)
            for (int a = 0; a < A; ++a) {
                auto row = aug.mdp.transition(h, s, a);
                if (s < S && trackable(h, s, a)) {
                    const auto src = m.transition(h, s, a);
                    std::copy(src.begin(), src.end(), row.begin());
                    aug.mdp.reward(h, s, a) = m.reward(h, s, a);
                } else {
                    row[S] = 1.0;
                }
            }
    std::copy(m.initial().begin(), m.initial().end(), aug.mdp.initial().begin());
    return aug;
}

Policy embed_policy(const Policy& pi) {
    const int H = pi.horizon(), S = pi.num_states(), A = pi.num_actions();
    Policy out(H, S + 1, A);
    for (int h = 0; h < H; ++h) {
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) out(h, s, a) = pi(h, s, a);
        out(h, S, 0) = 1.0;
    }
    return out;
}

std::vector<double> absorbing_mass(const AugmentedMdp& aug, const Policy& embedded) {
    const int H = aug.mdp.horizon(), A = aug.mdp.num_actions(), dag = aug.absorbing_state;
    const auto occ = occupancy_measure(aug.mdp, embedded);
    std::vector<double> mass(static_cast<std::size_t>(H) + 1, 0.0);
    for (int h = 0; h < H; ++h) mass[h] = occ.state(h, dag);
    // Post-horizon mass: everything at s-dagger or in an untracked cell at the last step.
    double last = mass[H - 1];
    for (int s = 0; s < dag; ++s)
        for (int a = 0; a < A; ++a)
            if (!aug.trackable(H - 1, s, a)) last += occ.d(H - 1, s, a);
    mass[H] = last;
    return mass;
}

}  // namespace offrl
