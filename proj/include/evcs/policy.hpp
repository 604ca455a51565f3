// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>

#include "evcs/avg_load.hpp"
#include "evcs/behavior.hpp"
#include "evcs/core.hpp"
#include "evcs/program.hpp"
#include "evcs/scenario.hpp"
#include "evcs/trace.hpp"

namespace evcs {

struct PolicyDiagnostics {
    MilpStatus status = MilpStatus::Optimal;
    double objective = 0.0;
    double gap = 0.0;
    long nodes = 0;
    long lp_iterations = 0;
    double decide_ms = 0.0;  // full decision incl. sampling and reduction
    int scenario_count = 0;
};

/// A controller: maps the current state and the observed exogenous input to
/// a feasible action. Immutable after construction; replans every step.
class Policy {
public:
    virtual ~Policy() = default;
    virtual std::string name() const = 0;
    virtual ControlAction decide(const StationState& state, const ExogenousInput& observed,
                                 PolicyDiagnostics* diag = nullptr) const = 0;
    /// The program this policy would solve at the given state; the debug
    /// surface behind the LP and scenario dump flags.
    virtual StochasticProgram plan(const StationState& state,
                                   const ExogenousInput& observed) const = 0;
};

/// Two-stage stochastic programming: K sampled scenarios reduced to K'
/// weighted representatives, shared first stage.
std::unique_ptr<Policy> make_2s_policy(std::shared_ptr<const UserBehaviorModel> model,
                                       const StationConfig& config, int K, int K_prime,
                                       std::uint64_t seed, SolveOptions solver = {});

/// Model predictive control on the model's point forecast.
std::unique_ptr<Policy> make_mpc_policy(std::shared_ptr<const UserBehaviorModel> model,
                                        const StationConfig& config, SolveOptions solver = {});

/// Request-based baseline: announced end times trusted, empty slots carry
/// the average-load table as uncontrollable demand.
std::unique_ptr<Policy> make_rmpc_policy(AvgLoadTable table, const StationConfig& config,
                                         SolveOptions solver = {});

/// Perfect-information baseline: the realized trace as forecast.
std::unique_ptr<Policy> make_pmpc_policy(std::shared_ptr<const DiscretizedTrace> trace,
                                         const StationConfig& config, SolveOptions solver = {});

/// Mean delivered kWh per (slot, hour) from a closed-loop run of P-MPC over
/// the training trace. Throws on an empty trace.
AvgLoadTable build_avg_load_table(const DiscretizedTrace& training_trace,
                                  const StationConfig& config, SolveOptions solver = {});

} // namespace evcs
