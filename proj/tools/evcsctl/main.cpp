// SPDX-License-Identifier: Apache-2.0
//
// evcsctl: command-line front end of the charging-station control testbed.
//
//   evcsctl synth    --config cfg.json --out sessions.csv
//   evcsctl ingest   --config cfg.json --sessions sessions.csv --out-dir data/
//   evcsctl train    --config cfg.json --trace data/train.trace --out model.ebm
//   evcsctl simulate --config cfg.json --policy mpc --trace data/test.trace \
//                    --model model.ebm [--alpha 5000] [--seed 1] --out out/
//   evcsctl sweep    --config cfg.json --out out/

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "evcs/config.hpp"
#include "evcs/data_io.hpp"
#include "evcs/policy.hpp"
#include "evcs/sim.hpp"
#include "evcs/sweep.hpp"
#include "evcs/synthetic.hpp"

using namespace evcs;

namespace {

ExperimentConfig load_config(const std::string& path) {
    if (path.empty()) return ExperimentConfig::from_json_text("{}");
    return ExperimentConfig::from_json_file(path);
}

DiscretizedTrace synth_trace(const ExperimentConfig& cfg, std::uint64_t seed) {
    auto sessions = generate_synthetic(cfg.synthetic, seed);
    DiscretizedTrace tr = discretize(sessions, cfg.synthetic.dt_minutes, cfg.synthetic.n);
    StationConfig st = cfg.station;
    st.n = cfg.synthetic.n;
    st.dt_minutes = cfg.synthetic.dt_minutes;
    return preprocess_requests(tr, st);
}

int cmd_synth(const std::string& config_path, std::uint64_t seed_override, bool has_seed,
              const std::string& out) {
    ExperimentConfig cfg = load_config(config_path);
    if (!cfg.has_synthetic) throw ConfigError("synth: config has no synthetic block");
    const std::uint64_t seed = has_seed ? seed_override : cfg.synthetic_seed;
    auto sessions = generate_synthetic(cfg.synthetic, seed);
    write_sessions_csv(sessions, out);
    std::cout << "wrote " << sessions.size() << " sessions to " << out << " (seed " << seed
              << ")\n";
    return 0;
}

int cmd_ingest(const std::string& config_path, const std::string& sessions_path,
               const std::string& format, const std::string& out_dir) {
    ExperimentConfig cfg = load_config(config_path);
    ParseReport rep;
    auto sessions = parse_sessions(sessions_path, format, &rep);
    if (!rep.errors.empty()) {
        std::cerr << rep.rejected_rows << " malformed rows skipped:\n";
        for (const auto& e : rep.errors) std::cerr << "  " << e << "\n";
    }
    DiscretizeReport drep;
    DiscretizedTrace trace = discretize(sessions, cfg.station.dt_minutes, cfg.station.n, &drep);
    std::size_t dropped = 0;
    trace = preprocess_requests(trace, cfg.station, &dropped);
    std::cout << "sessions: " << trace.sessions.size() << " (dropped " << dropped
              << " unsatisfiable, " << drep.dropped_sessions << " degenerate, "
              << drep.overlap_truncations << " overlap truncations)\n";

    std::filesystem::create_directories(out_dir);
    if (!cfg.split_date.empty()) {
        auto boundary = parse_timestamp(cfg.split_date);
        if (!boundary) throw ConfigError("ingest: bad split_date in config");
        auto [train, test] = split(trace, *boundary);
        save_trace(train, out_dir + "/train.trace");
        save_trace(test, out_dir + "/test.trace");
        std::cout << "train: " << train.sessions.size() << " sessions over " << train.steps.size()
                  << " steps -> " << out_dir << "/train.trace\n";
        std::cout << "test:  " << test.sessions.size() << " sessions over " << test.steps.size()
                  << " steps -> " << out_dir << "/test.trace\n";
    } else {
        save_trace(trace, out_dir + "/full.trace");
        std::cout << "trace: " << trace.steps.size() << " steps -> " << out_dir << "/full.trace\n";
    }
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& trace_path,
              const std::string& out) {
    ExperimentConfig cfg = load_config(config_path);
    DiscretizedTrace trace = load_trace(trace_path);
    BinnedBehaviorModel model = BinnedBehaviorModel::fit(trace, cfg.behavior);
    model.save(out);
    std::cout << "fitted behavior model on " << trace.sessions.size() << " sessions, saved to "
              << out << "\n";
    return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& policy_name,
                 const std::string& trace_path, const std::string& model_path,
                 const std::string& train_trace_path, double alpha_override, bool has_alpha,
                 int horizon_override, std::uint64_t seed, const std::string& out_dir,
                 const std::string& dump_lp_path, const std::string& dump_scenario_path,
                 long dump_step) {
    ExperimentConfig cfg = load_config(config_path);
    StationConfig st = cfg.station;
    if (has_alpha) st.alpha = alpha_override;
    if (horizon_override > 0) st.horizon_R = horizon_override;

    auto trace = std::make_shared<DiscretizedTrace>(load_trace(trace_path));
    std::shared_ptr<const UserBehaviorModel> model;
    if (!model_path.empty())
        model = std::make_shared<BinnedBehaviorModel>(BinnedBehaviorModel::load(model_path));

    std::unique_ptr<Policy> policy;
    if (policy_name == "2s") {
        if (!model) throw ConfigError("simulate: 2s needs --model");
        policy = make_2s_policy(model, st, cfg.scenario_K, cfg.scenario_K_prime, seed, cfg.solver);
    } else if (policy_name == "mpc") {
        if (!model) throw ConfigError("simulate: mpc needs --model");
        policy = make_mpc_policy(model, st, cfg.solver);
    } else if (policy_name == "rmpc") {
        if (train_trace_path.empty()) throw ConfigError("simulate: rmpc needs --train-trace");
        DiscretizedTrace train = load_trace(train_trace_path);
        policy = make_rmpc_policy(build_avg_load_table(train, st, cfg.solver), st, cfg.solver);
    } else if (policy_name == "pmpc") {
        policy = make_pmpc_policy(trace, st, cfg.solver);
    } else {
        throw ConfigError("simulate: unknown policy '" + policy_name + "'");
    }

    if (!dump_lp_path.empty() || !dump_scenario_path.empty()) {
        // replay the closed loop to the requested step and dump the program
        // this policy would solve there
        StationState state = StationState::empty(st, trace->start_step);
        for (long k = 0; k < dump_step && k < static_cast<long>(trace->steps.size()) - 1; ++k) {
            const ExogenousInput& w = trace->steps[static_cast<std::size_t>(k)];
            StepResult r = step(state, policy->decide(state, w), w, st);
            state = std::move(r.state);
        }
        const ExogenousInput& w = trace->at(state.t);
        StochasticProgram program = policy->plan(state, w);
        if (!dump_lp_path.empty()) {
            std::ofstream os(dump_lp_path);
            os << program.dump_lp();
            std::cout << "program at step " << state.t << " -> " << dump_lp_path << "\n";
        }
        if (!dump_scenario_path.empty()) {
            std::ofstream os(dump_scenario_path);
            for (const Scenario& sc : program.scenarios()) {
                os << "# scenario weight " << sc.weight << "\n";
                dump_scenario(sc, os);
            }
            std::cout << "scenarios at step " << state.t << " -> " << dump_scenario_path << "\n";
        }
    }

    RunResult run = simulate(*trace, *policy, st);
    MetricsSummary m = compute_metrics(run);
    std::cout << "policy " << policy->name() << ", alpha " << st.alpha << ", steps "
              << run.steps.size() << ", sessions " << m.session_count << "\n";
    std::cout << "electricity cost (EUR): " << m.electricity_cost_eur << "\n";
    if (m.filling_rate_pct) {
        std::cout << "filling rate (%): " << *m.filling_rate_pct << "\n";
        std::cout << "full satisfaction (%): " << *m.full_satisfaction_pct << "\n";
    }
    std::cout << "penalty steps: " << m.penalty_step_count << ", mean decide (ms): "
              << m.mean_decide_ms << "\n";

    if (!out_dir.empty()) {
        SweepResult one;
        SweepCell cell;
        cell.policy = policy->name();
        cell.alpha = st.alpha;
        cell.seed = seed;
        cell.metrics = m;
        cell.totals = run.totals;
        cell.run = std::move(run);
        one.cells.push_back(std::move(cell));
        ExperimentConfig report_cfg = cfg;
        report_cfg.station = st;
        report_cfg.sweep_policies = {policy->name()};
        report_cfg.sweep_alphas = {st.alpha};
        report_cfg.sweep_seeds = {seed};
        emit_reports(one, report_cfg, out_dir);
        std::cout << "reports -> " << out_dir << "\n";
    }
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_override,
              std::uint64_t seed_override, bool has_seed) {
    ExperimentConfig cfg = load_config(config_path);
    if (has_seed) cfg.sweep_seeds = {seed_override};
    const std::string out_dir = out_override.empty() ? cfg.out_dir : out_override;

    SweepPlan plan;
    plan.config = cfg;

    const bool needs_model =
        std::find(cfg.sweep_policies.begin(), cfg.sweep_policies.end(), "2s") !=
            cfg.sweep_policies.end() ||
        std::find(cfg.sweep_policies.begin(), cfg.sweep_policies.end(), "mpc") !=
            cfg.sweep_policies.end();
    const bool needs_train =
        std::find(cfg.sweep_policies.begin(), cfg.sweep_policies.end(), "rmpc") !=
        cfg.sweep_policies.end();

    if (cfg.has_synthetic && cfg.test_trace_path.empty()) {
        // one training world, one test world per sweep seed
        StationConfig st = cfg.station;
        SyntheticConfig train_world = cfg.synthetic;
        train_world.days = std::max(train_world.days * 8, 30);  // longer history to learn from
        auto train = std::make_shared<DiscretizedTrace>(
            [&] {
                auto sessions = generate_synthetic(train_world, derive_stream(cfg.synthetic_seed, {0x7EA1}));
                return preprocess_requests(discretize(sessions, train_world.dt_minutes, train_world.n), st);
            }());
        plan.train_trace = train;
        if (needs_model)
            plan.model = std::make_shared<BinnedBehaviorModel>(
                BinnedBehaviorModel::fit(*train, cfg.behavior));
        const ExperimentConfig cfg_copy = cfg;
        plan.test_trace_for = [cfg_copy](std::uint64_t seed) {
            return synth_trace(cfg_copy, derive_stream(cfg_copy.synthetic_seed, {0x7E57, seed}));
        };
    } else {
        if (cfg.test_trace_path.empty()) throw ConfigError("sweep: no test trace configured");
        auto test = std::make_shared<DiscretizedTrace>(load_trace(cfg.test_trace_path));
        if (needs_train || needs_model) {
            if (cfg.train_trace_path.empty())
                throw ConfigError("sweep: policies need a training trace in the config");
            plan.train_trace =
                std::make_shared<DiscretizedTrace>(load_trace(cfg.train_trace_path));
        }
        if (needs_model) {
            if (!cfg.model_path.empty())
                plan.model = std::make_shared<BinnedBehaviorModel>(
                    BinnedBehaviorModel::load(cfg.model_path));
            else
                plan.model = std::make_shared<BinnedBehaviorModel>(
                    BinnedBehaviorModel::fit(*plan.train_trace, cfg.behavior));
        }
        plan.test_trace_for = [test](std::uint64_t) { return *test; };
    }

    SweepResult result = run_sweep(plan);
    emit_reports(result, cfg, out_dir);
    int failed = 0;
    for (const auto& c : result.cells) failed += c.failed ? 1 : 0;
    std::cout << "sweep: " << result.cells.size() << " cells, " << failed << " failed, reports -> "
              << out_dir << "\n";
    return failed == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"EV charging station control testbed"};
    app.require_subcommand(1);

    std::string config_path, out, sessions_path, format = "auto", trace_path, model_path,
                train_trace_path, policy = "mpc", out_dir;
    std::uint64_t seed = 1;
    double alpha = 0.0;
    int horizon = 0;

    auto* synth = app.add_subcommand("synth", "generate a synthetic session dataset");
    synth->add_option("--config", config_path, "experiment config (JSON)");
    synth->add_option("--seed", seed, "generator seed");
    synth->add_option("--out", out, "output CSV path")->required();

    auto* ingest = app.add_subcommand("ingest", "parse, discretize, preprocess and split");
    ingest->add_option("--config", config_path, "experiment config (JSON)");
    ingest->add_option("--sessions", sessions_path, "raw session file")->required();
    ingest->add_option("--format", format, "csv | acn-json | auto");
    ingest->add_option("--out-dir", out_dir, "output directory")->required();

    auto* train = app.add_subcommand("train", "fit the behavior model from a trace");
    train->add_option("--config", config_path, "experiment config (JSON)");
    train->add_option("--trace", trace_path, "training trace file")->required();
    train->add_option("--out", out, "output model path")->required();

    auto* sim = app.add_subcommand("simulate", "closed-loop run of one policy on one trace");
    sim->add_option("--config", config_path, "experiment config (JSON)");
    sim->add_option("--policy", policy, "2s | mpc | rmpc | pmpc");
    sim->add_option("--trace", trace_path, "test trace file")->required();
    sim->add_option("--model", model_path, "behavior model file (2s, mpc)");
    sim->add_option("--train-trace", train_trace_path, "training trace (rmpc)");
    auto* alpha_opt = sim->add_option("--alpha", alpha, "satisfaction weight override");
    sim->add_option("--horizon", horizon, "control horizon override");
    sim->add_option("--seed", seed, "policy seed (2s sampling)");
    sim->add_option("--out", out_dir, "report directory (optional)");
    std::string dump_lp_path, dump_scenario_path;
    long dump_step = 0;
    sim->add_option("--dump-lp", dump_lp_path, "write the step's program in LP format");
    sim->add_option("--dump-scenarios", dump_scenario_path, "write the step's scenarios");
    sim->add_option("--dump-step", dump_step, "step index for the dumps (default 0)");

    auto* sweep = app.add_subcommand("sweep", "full policy x alpha x seed experiment");
    sweep->add_option("--config", config_path, "experiment config (JSON)")->required();
    auto* sweep_seed = sweep->add_option("--seed", seed, "restrict to a single seed");
    sweep->add_option("--out", out, "output directory override");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(config_path, seed, synth->count("--seed") > 0, out);
        if (ingest->parsed()) return cmd_ingest(config_path, sessions_path, format, out_dir);
        if (train->parsed()) return cmd_train(config_path, trace_path, out);
        if (sim->parsed())
            return cmd_simulate(config_path, policy, trace_path, model_path, train_trace_path,
                                alpha, alpha_opt->count() > 0, horizon, seed, out_dir,
                                dump_lp_path, dump_scenario_path, dump_step);
        if (sweep->parsed()) return cmd_sweep(config_path, out, seed, sweep_seed->count() > 0);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
