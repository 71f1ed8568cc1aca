// offrl: command-line front end for the offline RL lab.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "offrl/bounds.hpp"
#include "offrl/estimation.hpp"
#include "offrl/harness.hpp"
#include "offrl/instances.hpp"
#include "offrl/io.hpp"
#include "offrl/ope.hpp"
#include "offrl/planners.hpp"
#include "offrl/sampling.hpp"

using namespace offrl;

namespace {

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty() || out_path == "-")
        std::cout << text;
    else
        write_text(out_path, text);
}

std::map<std::string, double> parse_params(const std::vector<std::string>& raw) {
    std::map<std::string, double> out;
    for (const auto& kv : raw) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw std::invalid_argument("--param expects key=value, got '" + kv + "'");
        std::size_t used = 0;
        const std::string value = kv.substr(eq + 1);
        double x = 0.0;
        try {
            x = std::stod(value, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != value.size()) throw std::invalid_argument("--param value is not a number: '" + kv + "'");
        out[kv.substr(0, eq)] = x;
    }
    return out;
}

Policy behavior_or_uniform(const std::string& path, const Mdp& m) {
    if (path.empty()) return uniform_policy(m);
    Policy mu = load_policy(path);
    validate_policy(m, mu);
    return mu;
}

int error_document(const std::string& type, const std::string& message, int code, const Json& extra = Json::object()) {
    Json doc{{"error", {{"type", type}, {"message", message}}}};
    for (const auto& [k, v] : extra.items()) doc["error"][k] = v;
    std::cerr << doc.dump(2) << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pessimistic offline RL lab for tabular finite-horizon MDPs"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Emit an MDP from a named instance family");
    std::string gen_family, gen_out, gen_mu_out;
    std::vector<std::string> gen_params;
    std::optional<std::uint64_t> gen_seed;
    std::int64_t gen_n = 1000;
    gen->add_option("--family", gen_family,
                    "hard | two_branch | random | deterministic | partially_deterministic | fast_mixing | bandit")
        ->required();
    gen->add_option("--param", gen_params, "Family parameter key=value (repeatable)");
    gen->add_option("--seed", gen_seed, "Instance seed (required for randomized families)");
    gen->add_option("--n", gen_n, "Sample size used to resolve n-dependent parameters");
    gen->add_option("-o,--out", gen_out, "Output MDP JSON (default stdout)");
    gen->add_option("--mu-out", gen_mu_out, "Also write the family's behavior policy");

    // sample
    auto* sample = app.add_subcommand("sample", "Roll out a behavior policy into an offline dataset");
    std::string sample_mdp, sample_policy, sample_out;
    std::int64_t sample_n = 0;
    std::uint64_t sample_seed = 0;
    int sample_threads = 1;
    sample->add_option("--mdp", sample_mdp, "MDP JSON")->required()->check(CLI::ExistingFile);
    sample->add_option("--policy", sample_policy, "Behavior policy JSON (default uniform)")->check(CLI::ExistingFile);
    sample->add_option("-n,--episodes", sample_n, "Number of episodes")->required()->check(CLI::PositiveNumber);
    sample->add_option("--seed", sample_seed, "Master seed")->required();
    sample->add_option("--threads", sample_threads, "Worker threads")->check(CLI::PositiveNumber);
    sample->add_option("-o,--out", sample_out, "Output dataset; .bin selects the binary format (default CSV on stdout)");

    // plan
    auto* plan = app.add_subcommand("plan", "Run a pessimistic planner on a dataset");
    std::string plan_data, plan_alg = "apvi", plan_out, plan_mdp;
    PlannerConfig plan_cfg;
    bool plan_no_clip = false;
    plan->add_option("--dataset", plan_data, "Dataset (CSV or binary)")->required()->check(CLI::ExistingFile);
    plan->add_option("--algorithm", plan_alg, "vpvi | apvi | af_apvi")
        ->check(CLI::IsMember({"vpvi", "apvi", "af_apvi"}));
    plan->add_option("--delta", plan_cfg.delta, "Failure probability");
    plan->add_option("--c-vpvi", plan_cfg.c_vpvi, "Hoeffding constant");
    plan->add_option("--c1", plan_cfg.c1, "Bernstein variance coefficient");
    plan->add_option("--c2", plan_cfg.c2, "Bernstein range coefficient");
    plan->add_flag("--no-clip", plan_no_clip, "Disable clipping of the pessimistic Q");
    plan->add_option("--mdp", plan_mdp, "True MDP; adds the exact value and gap of the learned policy")
        ->check(CLI::ExistingFile);
    plan->add_option("-o,--out", plan_out, "Output JSON (default stdout)");

    // bound
    auto* bound = app.add_subcommand("bound", "Evaluate the intrinsic bound and its specializations");
    std::string bound_mdp, bound_mu, bound_out, bound_cells, bound_constants = "theory";
    std::int64_t bound_n = 0;
    double bound_delta = 0.1;
    bound->add_option("--mdp", bound_mdp, "MDP JSON")->required()->check(CLI::ExistingFile);
    bound->add_option("--mu", bound_mu, "Behavior policy JSON (default uniform)")->check(CLI::ExistingFile);
    bound->add_option("-n,--episodes", bound_n, "Number of episodes")->required()->check(CLI::PositiveNumber);
    bound->add_option("--delta", bound_delta, "Failure probability");
    bound->add_option("--constants", bound_constants, "theory | unit")->check(CLI::IsMember({"theory", "unit"}));
    bound->add_option("--per-cell-csv", bound_cells, "Write the per-cell table as CSV");
    bound->add_option("-o,--out", bound_out, "Output JSON (default stdout)");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Run a seeded sweep over n and seeds");
    std::string sweep_config, sweep_out, sweep_csv;
    std::uint64_t sweep_seed = 0;
    std::optional<int> sweep_parallelism;
    bool sweep_no_wall_time = false;
    sweep->add_option("--config", sweep_config, "Sweep config JSON")->required()->check(CLI::ExistingFile);
    sweep->add_option("--seed", sweep_seed, "Master seed")->required();
    sweep->add_option("--parallelism", sweep_parallelism, "Override the configured worker count")
        ->check(CLI::PositiveNumber);
    sweep->add_flag("--no-wall-time", sweep_no_wall_time, "Write zeros in the wall_time column");
    sweep->add_option("-o,--out", sweep_out, "Output JSON (default stdout)");
    sweep->add_option("--csv", sweep_csv, "Also write the rows as CSV");

    // ope
    auto* ope = app.add_subcommand("ope", "Tabular marginalized importance sampling estimate");
    std::string ope_data, ope_policy, ope_out, ope_mdp, ope_mu;
    ope->add_option("--dataset", ope_data, "Dataset (CSV or binary)")->required()->check(CLI::ExistingFile);
    ope->add_option("--policy", ope_policy, "Target policy JSON")->required()->check(CLI::ExistingFile);
    ope->add_option("--mdp", ope_mdp, "True MDP; with --mu attaches the weight bounds")->check(CLI::ExistingFile);
    ope->add_option("--mu", ope_mu, "Behavior policy JSON (default uniform)")->check(CLI::ExistingFile);
    ope->add_option("-o,--out", ope_out, "Output JSON (default stdout)");

    // perturb
    auto* perturb = app.add_subcommand("perturb", "Build the local alternative kernel P'");
    std::string perturb_mdp, perturb_mu, perturb_data, perturb_out;
    std::int64_t perturb_n = 0;
    std::optional<double> perturb_zeta;
    perturb->add_option("--mdp", perturb_mdp, "MDP JSON")->required()->check(CLI::ExistingFile);
    perturb->add_option("--mu", perturb_mu, "Behavior policy JSON (default uniform)")->check(CLI::ExistingFile);
    auto* perturb_n_opt =
        perturb->add_option("-n,--episodes", perturb_n, "Use expected counts n d^mu")->check(CLI::PositiveNumber);
    auto* perturb_data_opt =
        perturb->add_option("--dataset", perturb_data, "Use the counts of a dataset")->check(CLI::ExistingFile);
    perturb_n_opt->excludes(perturb_data_opt);
    perturb->add_option("--zeta", perturb_zeta, "Override zeta (default H / dbar_m)");
    perturb->add_option("-o,--out", perturb_out, "Output MDP JSON (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return error_document("usage", e.what(), 2);
    }
    if (*gen && gen_family != "hard" && gen_family != "two_branch" && !gen_seed)
        return error_document("usage", "family '" + gen_family + "' requires --seed", 2);

    try {
        if (*gen) {
            SweepConfig cfg;
            cfg.instance.family = gen_family;
            cfg.instance.params = parse_params(gen_params);
            if (gen_seed) cfg.instance.params["seed"] = static_cast<double>(*gen_seed);
            if (gen_family == "file") throw std::invalid_argument("gen does not accept the 'file' family");
            const auto resolved = resolve_instance(cfg, gen_n);
            emit(gen_out, to_json(resolved.instance.mdp).dump(2) + "\n");
            if (!gen_mu_out.empty()) save_policy(gen_mu_out, resolved.instance.mu);
        } else if (*sample) {
            const Mdp m = load_mdp(sample_mdp);
            const Policy mu = behavior_or_uniform(sample_policy, m);
            const Dataset d = rollout(m, mu, sample_n, sample_seed, sample_threads);
            if (sample_out.empty() || sample_out == "-")
                std::cout << dataset_to_csv(d);
            else
                save_dataset(sample_out, d);
        } else if (*plan) {
            plan_cfg.clip_enabled = !plan_no_clip;
            const Dataset d = load_dataset(plan_data);
            const auto em = fit_empirical_model(count(d));
            const PlannerOutput result = plan_alg == "vpvi" ? vpvi(em, plan_cfg)
                                         : plan_alg == "apvi" ? apvi(em, plan_cfg)
                                                              : af_apvi(em, plan_cfg);
            Json doc = to_json(result);
            doc["algorithm"] = plan_alg;
            doc["pessimistic_value"] = result.pessimistic_value(empirical_initial_distribution(d));
            if (!plan_mdp.empty()) {
                const Mdp m = load_mdp(plan_mdp);
                validate_policy(m, result.policy);
                const double v_star = optimal_planning(m).values.value;
                const double v_pi = policy_evaluation(m, result.policy).value;
                doc["v_star"] = v_star;
                doc["v_pihat"] = v_pi;
                doc["gap"] = v_star - v_pi;
            }
            emit(plan_out, doc.dump(2) + "\n");
        } else if (*bound) {
            const Mdp m = load_mdp(bound_mdp);
            const Policy mu = behavior_or_uniform(bound_mu, m);
            const auto constants = bound_constants == "theory" ? BoundConstants::theory() : BoundConstants::unit();
            const auto b = intrinsic_bound(m, mu, bound_n, bound_delta, constants);
            if (!bound_cells.empty()) write_text(bound_cells, per_cell_csv(b.per_cell));
            emit(bound_out, to_json(b).dump(2) + "\n");
        } else if (*sweep) {
            SweepConfig cfg = sweep_config_from_json(parse_json(read_text(sweep_config), sweep_config), sweep_config);
            cfg.master_seed = sweep_seed;
            if (sweep_parallelism) cfg.parallelism = *sweep_parallelism;
            if (sweep_no_wall_time) cfg.record_wall_time = false;
            const auto result = run_sweep(cfg);
            for (const auto& [alg, fit] : result.slopes)
                for (const auto& w : fit.warnings) std::cerr << "warning: " << alg << ": " << w << "\n";
            for (const auto& [alg, note] : result.notes) std::cerr << "warning: " << alg << ": no slope: " << note << "\n";
            if (!sweep_csv.empty()) write_text(sweep_csv, sweep_rows_csv(result));
            emit(sweep_out, to_json(result).dump(2) + "\n");
        } else if (*ope) {
            const Dataset d = load_dataset(ope_data);
            const Policy pi = load_policy(ope_policy);
            OpeResult r = tmis_estimate(d, pi);
            if (!ope_mdp.empty()) {
                const Mdp m = load_mdp(ope_mdp);
                validate_policy(m, pi);
                attach_weight_bounds(r, m, behavior_or_uniform(ope_mu, m), pi);
            }
            emit(ope_out, to_json(r).dump(2) + "\n");
        } else if (*perturb) {
            const Mdp m = load_mdp(perturb_mdp);
            const Policy mu = behavior_or_uniform(perturb_mu, m);
            LocalInstanceParams params;
            params.zeta = perturb_zeta ? *perturb_zeta : local_zeta(m, mu);
            if (!perturb_data.empty())
                params.counts = DatasetCounts{count(load_dataset(perturb_data))};
            else if (perturb_n > 0)
                params.counts = ExpectedCounts{perturb_n, mu};
            else
                throw std::invalid_argument("perturb needs -n or --dataset");
            emit(perturb_out, to_json(local_alternative(m, params)).dump(2) + "\n");
        }
    } catch (const ParseError& e) {
        return error_document("parse", e.what(), 1, Json{{"source", e.source()}, {"location", e.location()}});
    } catch (const ValidationError& e) {
        return error_document("validation", e.what(), 1,
                              Json{{"kind", to_string(e.kind())},
                                   {"step", e.step()},
                                   {"state", e.state()},
                                   {"action", e.action()}});
    } catch (const NonnegativityViolation& e) {
        return error_document("nonnegativity", e.what(), 1,
                              Json{{"step", e.step}, {"state", e.state}, {"action", e.action}, {"next_state", e.next_state}});
    } catch (const std::exception& e) {
        return error_document("runtime", e.what(), 1);
    }
    return 0;
}
