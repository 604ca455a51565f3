// SPDX-License-Identifier: Apache-2.0
#include "evcs/policy.hpp"

#include <chrono>

#include "evcs/errors.hpp"
#include "evcs/sim.hpp"

namespace evcs {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

ControlAction solve_and_extract(const StochasticProgram& program, const StationState& state,
                                const StationConfig& config, const SolveOptions& solver,
                                PolicyDiagnostics* diag) {
    SolverSolution sol = solve(program, solver);
    if (sol.status == MilpStatus::Infeasible)
        throw ModelConsistencyError("policy: solver reported an infeasible program");
    if (diag) {
        diag->status = sol.status;
        diag->objective = sol.objective;
        diag->gap = sol.gap;
        diag->nodes = sol.nodes;
        diag->lp_iterations = sol.lp_iterations;
    }
    return extract_first_stage(program, sol, state, config);
}

class TwoStagePolicy : public Policy {
public:
    TwoStagePolicy(std::shared_ptr<const UserBehaviorModel> model, StationConfig config, int K,
                   int K_prime, std::uint64_t seed, SolveOptions solver)
        : model_(std::move(model)), config_(std::move(config)), k_(K), k_prime_(K_prime),
          seed_(seed), solver_(solver) {}

    std::string name() const override { return "2s"; }

    StochasticProgram plan(const StationState& state,
                           const ExogenousInput& observed) const override {
        const std::uint64_t step_seed =
            derive_stream(seed_, {0x25AE, static_cast<std::uint64_t>(state.t)});
        auto samples = sample_set(state, observed, *model_, config_.horizon_R, k_, config_, step_seed);
        Rng cluster_rng(derive_stream(step_seed, {0xC1A5}));
        ReducedScenarioSet reduced = reduce(samples, k_prime_, cluster_rng);
        return StochasticProgram::build(state, std::move(reduced.scenarios), config_);
    }

    ControlAction decide(const StationState& state, const ExogenousInput& observed,
                         PolicyDiagnostics* diag) const override {
        const auto start = Clock::now();
        auto program = plan(state, observed);
        ControlAction act = solve_and_extract(program, state, config_, solver_, diag);
        if (diag) {
            diag->scenario_count = static_cast<int>(program.scenarios().size());
            diag->decide_ms = ms_since(start);
        }
        return act;
    }

private:
    std::shared_ptr<const UserBehaviorModel> model_;
    StationConfig config_;
    int k_;
    int k_prime_;
    std::uint64_t seed_;
    SolveOptions solver_;
};

class MpcPolicy : public Policy {
public:
    MpcPolicy(std::shared_ptr<const UserBehaviorModel> model, StationConfig config,
              SolveOptions solver)
        : model_(std::move(model)), config_(std::move(config)), solver_(solver) {}

    std::string name() const override { return "mpc"; }

    StochasticProgram plan(const StationState& state,
                           const ExogenousInput& observed) const override {
        Scenario forecast = point_forecast(state, observed, *model_, config_.horizon_R, config_);
        return StochasticProgram::build(state, {std::move(forecast)}, config_);
    }

    ControlAction decide(const StationState& state, const ExogenousInput& observed,
                         PolicyDiagnostics* diag) const override {
        const auto start = Clock::now();
        auto program = plan(state, observed);
        ControlAction act = solve_and_extract(program, state, config_, solver_, diag);
        if (diag) {
            diag->scenario_count = 1;
            diag->decide_ms = ms_since(start);
        }
        return act;
    }

private:
    std::shared_ptr<const UserBehaviorModel> model_;
    StationConfig config_;
    SolveOptions solver_;
};

class RequestMpcPolicy : public Policy {
public:
    RequestMpcPolicy(AvgLoadTable table, StationConfig config, SolveOptions solver)
        : table_(std::move(table)), config_(std::move(config)), solver_(solver) {}

    std::string name() const override { return "rmpc"; }

    StochasticProgram plan(const StationState& state,
                           const ExogenousInput& observed) const override {
        RequestBasedForecast f =
            request_based_forecast(state, observed, table_, config_.horizon_R, config_);
        std::vector<std::vector<double>> totals(1);
        totals[0].reserve(f.uncontrollable_kwh.size());
        for (const auto& per_slot : f.uncontrollable_kwh) {
            double sum = 0.0;
            for (double u : per_slot) sum += u;
            totals[0].push_back(sum);
        }
        return StochasticProgram::build(state, {std::move(f.scenario)}, config_, std::move(totals));
    }

    ControlAction decide(const StationState& state, const ExogenousInput& observed,
                         PolicyDiagnostics* diag) const override {
        const auto start = Clock::now();
        auto program = plan(state, observed);
        ControlAction act = solve_and_extract(program, state, config_, solver_, diag);
        if (diag) {
            diag->scenario_count = 1;
            diag->decide_ms = ms_since(start);
        }
        return act;
    }

private:
    AvgLoadTable table_;
    StationConfig config_;
    SolveOptions solver_;
};

class PerfectMpcPolicy : public Policy {
public:
    PerfectMpcPolicy(std::shared_ptr<const DiscretizedTrace> trace, StationConfig config,
                     SolveOptions solver)
        : trace_(std::move(trace)), config_(std::move(config)), solver_(solver) {}

    std::string name() const override { return "pmpc"; }

    StochasticProgram plan(const StationState& state,
                           const ExogenousInput& observed) const override {
        Scenario forecast = perfect_forecast(*trace_, state.t, config_.horizon_R);
        if (!(forecast.steps.front() == observed))
            throw ModelConsistencyError("pmpc: observed input does not match the trace");
        return StochasticProgram::build(state, {std::move(forecast)}, config_);
    }

    ControlAction decide(const StationState& state, const ExogenousInput& observed,
                         PolicyDiagnostics* diag) const override {
        const auto start = Clock::now();
        auto program = plan(state, observed);
        ControlAction act = solve_and_extract(program, state, config_, solver_, diag);
        if (diag) {
            diag->scenario_count = 1;
            diag->decide_ms = ms_since(start);
        }
        return act;
    }

private:
    std::shared_ptr<const DiscretizedTrace> trace_;
    StationConfig config_;
    SolveOptions solver_;
};

} // namespace

std::unique_ptr<Policy> make_2s_policy(std::shared_ptr<const UserBehaviorModel> model,
                                       const StationConfig& config, int K, int K_prime,
                                       std::uint64_t seed, SolveOptions solver) {
    if (!model) throw ConfigError("make_2s_policy: missing model");
    if (K < 1 || K_prime < 1 || K_prime > K) throw ConfigError("make_2s_policy: bad K/K'");
    return std::make_unique<TwoStagePolicy>(std::move(model), config, K, K_prime, seed, solver);
}

std::unique_ptr<Policy> make_mpc_policy(std::shared_ptr<const UserBehaviorModel> model,
                                        const StationConfig& config, SolveOptions solver) {
    if (!model) throw ConfigError("make_mpc_policy: missing model");
    return std::make_unique<MpcPolicy>(std::move(model), config, solver);
}

std::unique_ptr<Policy> make_rmpc_policy(AvgLoadTable table, const StationConfig& config,
                                         SolveOptions solver) {
    if (table.n != config.n) throw ConfigError("make_rmpc_policy: table does not match station");
    return std::make_unique<RequestMpcPolicy>(std::move(table), config, solver);
}

std::unique_ptr<Policy> make_pmpc_policy(std::shared_ptr<const DiscretizedTrace> trace,
                                         const StationConfig& config, SolveOptions solver) {
    if (!trace) throw ConfigError("make_pmpc_policy: missing trace");
    return std::make_unique<PerfectMpcPolicy>(std::move(trace), config, solver);
}

AvgLoadTable build_avg_load_table(const DiscretizedTrace& training_trace,
                                  const StationConfig& config, SolveOptions solver) {
    if (training_trace.steps.empty())
        throw ModelConsistencyError("build_avg_load_table: empty training trace");
    auto trace_ptr = std::make_shared<DiscretizedTrace>(training_trace);
    auto pmpc = make_pmpc_policy(trace_ptr, config, solver);
    RunResult run = simulate(training_trace, *pmpc, config);

    // mean delivered kWh over every step of the run, idle ones included
    std::vector<long> counts(static_cast<std::size_t>(config.n) * 24, 0);
    std::vector<double> sums(static_cast<std::size_t>(config.n) * 24, 0.0);
    for (const StepRecord& rec : run.steps) {
        const int hour = hour_of_day(config.clock_at(rec.t));
        for (int i = 0; i < config.n; ++i) {
            const std::size_t key = static_cast<std::size_t>(i) * 24 + static_cast<std::size_t>(hour);
            sums[key] += rec.action.energy_kwh[static_cast<std::size_t>(i)];
            ++counts[key];
        }
    }
    AvgLoadTable table = AvgLoadTable::zeros(config.n);
    for (std::size_t key = 0; key < sums.size(); ++key)
        if (counts[key] > 0) table.mean_kwh[key] = sums[key] / static_cast<double>(counts[key]);
    return table;
}

} // namespace evcs
