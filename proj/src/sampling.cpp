#include "offrl/sampling.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>

#include "offrl/rng.hpp"

namespace offrl {

namespace {

void simulate_episode(const Mdp& m, const Policy& mu, StreamRng& rng, std::span<Transition> out) {
    int s = rng.categorical(m.initial());
    for (int h = 0; h < m.horizon(); ++h) {
        const int a = rng.categorical(mu.row(h, s));
        double r = m.reward(h, s, a);
        if (m.reward_noise() == RewardNoise::Bernoulli) r = rng.bernoulli(r) ? 1.0 : 0.0;
        const int next = rng.categorical(m.transition(h, s, a));
        out[h] = {s, a, r, next};
        s = next;
    }
}

}  // namespace

void validate_dataset(const Dataset& d) {
    const auto& meta = d.meta;
    if (meta.num_episodes < 1 || meta.horizon < 1 || meta.num_states < 1 || meta.num_actions < 1)
        throw std::invalid_argument("dataset: meta must be positive");
    if (d.steps.size() != static_cast<std::size_t>(meta.num_episodes) * meta.horizon)
        throw std::invalid_argument("dataset: expected " + std::to_string(meta.num_episodes * meta.horizon) + " steps, got " +
                                    std::to_string(d.steps.size()));
    for (std::size_t i = 0; i < d.steps.size(); ++i) {
        const auto& t = d.steps[i];
        if (t.state < 0 || t.state >= meta.num_states || t.next_state < 0 || t.next_state >= meta.num_states ||
            t.action < 0 || t.action >= meta.num_actions || !(t.reward >= 0.0 && t.reward <= 1.0))
            throw std::invalid_argument("dataset: step " + std::to_string(i) + " out of range");
    }
}

Dataset rollout(const Mdp& m, const Policy& mu, std::int64_t n, std::uint64_t seed, int threads) {
    if (n < 1) throw std::invalid_argument("rollout: need at least one episode");
    validate_policy(m, mu);
    const int H = m.horizon();
    Dataset d{{n, H, m.num_states(), m.num_actions(), seed}, std::vector<Transition>(static_cast<std::size_t>(n) * H)};

    auto run_range = [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t i = begin; i < end; ++i) {
            StreamRng rng(seed, static_cast<std::uint64_t>(i));
            simulate_episode(m, mu, rng, {d.steps.data() + i * H, static_cast<std::size_t>(H)});
        }
    };

    threads = std::max(1, std::min<int>(threads, static_cast<int>(std::min<std::int64_t>(n, 64))));
    if (threads == 1) {
        run_range(0, n);
        return d;
    }
    std::vector<std::thread> pool;
    const std::int64_t chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const std::int64_t begin = t * chunk, end = std::min(n, begin + chunk);
        if (begin < end) pool.emplace_back(run_range, begin, end);
    }
    for (auto& th : pool) th.join();
    return d;
}

CountTable count(const Dataset& d) {
    validate_dataset(d);
    const auto& meta = d.meta;
    const int H = meta.horizon, S = meta.num_states, A = meta.num_actions;
    CountTable c{H, S, A, meta.num_episodes, StepStateActionTable<std::int64_t>(H, S, A, 0),
                 std::vector<std::int64_t>(static_cast<std::size_t>(H) * S * A * S, 0), SATable(H, S, A, 0.0)};
    for (std::int64_t i = 0; i < meta.num_episodes; ++i)
        for (int h = 0; h < H; ++h) {
            const auto& t = d.at(i, h);
            ++c.n_sa(h, t.state, t.action);
            ++c.next_counts(h, t.state, t.action)[t.next_state];
            c.reward_sum(h, t.state, t.action) += t.reward;
        }
    return c;
}

StepStateTable<std::uint8_t> reachable_states(const Mdp& m) {
    const int H = m.horizon(), S = m.num_states(), A = m.num_actions();
    StepStateTable<std::uint8_t> reach(H, S, 0);
    for (int s = 0; s < S; ++s) reach(0, s) = m.initial()[s] > 0.0;
    for (int h = 0; h + 1 < H; ++h)
        for (int s = 0; s < S; ++s) {
            if (!reach(h, s)) continue;
            for (int a = 0; a < A; ++a) {
                const auto row = m.transition(h, s, a);
                for (int sp = 0; sp < S; ++sp)
                    if (row[sp] > 0.0) reach(h + 1, sp) = 1;
            }
        }
    return reach;
}

StateTable max_reach_probability(const Mdp& m) {
    const int H = m.horizon(), S = m.num_states(), A = m.num_actions();
    StateTable out(H, S, 0.0);
    std::vector<double> next(S), cur(S);
    for (int target_h = 0; target_h < H; ++target_h)
        for (int target = 0; target < S; ++target) {
            std::fill(next.begin(), next.end(), 0.0);
            next[target] = 1.0;
            for (int h = target_h - 1; h >= 0; --h) {
                for (int s = 0; s < S; ++s) {
                    double best = 0.0;
                    for (int a = 0; a < A; ++a) best = std::max(best, dot(m.transition(h, s, a), next));
                    cur[s] = best;
                }
                next.swap(cur);
            }
            out(target_h, target) = dot(m.initial(), next);
        }
    return out;
}

CoverageReport coverage_report(const Mdp& m, const Policy& mu, const Policy& pi_star) {
    const int H = m.horizon(), S = m.num_states(), A = m.num_actions();
    constexpr double inf = std::numeric_limits<double>::infinity();
    const auto occ_mu = occupancy_measure(m, mu);
    const auto occ_star = occupancy_measure(m, pi_star);
    const auto reach = reachable_states(m);
    const auto max_reach = max_reach_probability(m);

    CoverageReport rep;
    rep.trackable = SAMask(H, S, A, 0);
    rep.d_m = inf;
    rep.dbar_m = inf;
    rep.c_star = 0.0;
    rep.c_mu = 0.0;
    rep.single_concentrability = true;
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                const double dmu = occ_mu.d(h, s, a);
                const double dstar = occ_star.d(h, s, a);
                rep.trackable(h, s, a) = dmu > 0.0;
                if (reach(h, s)) rep.d_m = std::min(rep.d_m, dmu);
                if (dmu > 0.0) {
                    rep.dbar_m = std::min(rep.dbar_m, dmu);
                    rep.c_star = std::max(rep.c_star, dstar / dmu);
                    rep.c_mu = std::max(rep.c_mu, max_reach(h, s) / dmu);
                } else {
                    if (dstar > 0.0) {
                        rep.c_star = inf;
                        rep.single_concentrability = false;
                    }
                    if (max_reach(h, s) > 0.0) rep.c_mu = inf;
                }
            }
    if (rep.d_m == inf) rep.d_m = 0.0;
    if (rep.dbar_m == inf) rep.dbar_m = 0.0;
    rep.uniform_coverage = rep.d_m > 0.0;
    rep.uniform_concentrability = rep.c_mu < inf;

    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s) {
            const double dpi = occ_star.state(h, s), dmu = occ_mu.state(h, s);
            if (dpi > 0.0) rep.tau_s = std::max(rep.tau_s, dmu > 0.0 ? dpi / dmu : inf);
            for (int a = 0; a < A; ++a)
                if (pi_star(h, s, a) > 0.0)
                    rep.tau_a = std::max(rep.tau_a, mu(h, s, a) > 0.0 ? pi_star(h, s, a) / mu(h, s, a) : inf);
        }
    return rep;
}

}  // namespace offrl
