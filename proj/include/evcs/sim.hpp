// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "evcs/core.hpp"
#include "evcs/policy.hpp"
#include "evcs/trace.hpp"

namespace evcs {

struct StepRecord {
    StepIndex t = 0;
    ControlAction action;
    double load_kwh = 0.0;
    int active_slots = 0;
    StageCostBreakdown cost;
    PolicyDiagnostics diag;
};

struct SessionOutcome {
    int slot = -1;
    StepIndex end_t = 0;
    double initial_request_kwh = 0.0;
    double final_remaining_kwh = 0.0;
    double satisfaction = 0.0;  // 1 - final/initial
};

struct RunTotals {
    double energy_cost_eur = 0.0;
    double penalty_eur = 0.0;
    double dissatisfaction_units = 0.0;
    double weighted_total_eur = 0.0;
    long penalty_steps = 0;
    double mean_decide_ms = 0.0;
};

struct RunResult {
    std::vector<StepRecord> steps;
    std::vector<SessionOutcome> sessions;
    RunTotals totals;
    int ignored_end_events = 0;
};

/// Raised when a policy returns an action the station rejects.
class SimulationError : public std::runtime_error {
public:
    explicit SimulationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Closed-loop run of a policy over a trace. Every action is validated and
/// an infeasible one aborts with a full context dump. Sessions still active
/// at the end of the trace are closed at its final step.
RunResult simulate(const DiscretizedTrace& trace, const Policy& policy,
                   const StationConfig& config);

struct MetricsSummary {
    double electricity_cost_eur = 0.0;            // energy plus penalties
    std::optional<double> filling_rate_pct;       // mean session-end satisfaction
    std::optional<double> full_satisfaction_pct;  // share of fully served sessions
    long penalty_step_count = 0;
    double mean_decide_ms = 0.0;
    long session_count = 0;
};

MetricsSummary compute_metrics(const RunResult& result);

} // namespace evcs
