// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <vector>

#include "evcs/avg_load.hpp"
#include "evcs/behavior.hpp"
#include "evcs/core.hpp"
#include "evcs/rng.hpp"
#include "evcs/trace.hpp"

namespace evcs {

/// One chargeable window of one session inside a scenario horizon.
/// Charging is possible on every step in [charge_begin, charge_end]; the
/// session contributes dissatisfaction on exactly those steps.
struct ScenarioSession {
    int slot = -1;
    StepIndex charge_begin = 0;
    StepIndex charge_end = 0;           // inclusive
    double start_remaining_kwh = 0.0;   // remaining energy entering the window
    double initial_request_kwh = 0.0;   // z of the session
    bool first_stage = false;           // window contains t0
};

/// A sampled or forecast realization of the exogenous inputs over the
/// control horizon. steps[0] is always the observed w_{t0}.
struct Scenario {
    StepIndex t0 = 0;
    int horizon = 0;  // R
    std::vector<ExogenousInput> steps;       // R + 1 entries
    std::vector<ScenarioSession> sessions;   // derived charge windows
    double weight = 1.0;
};

struct ReducedScenarioSet {
    std::vector<Scenario> scenarios;  // weights sum to 1
};

/// Replays the scenario events from the current state and produces the
/// canonical charge windows (announced elapse applied, horizon truncation).
/// Throws ModelConsistencyError on a start aimed at an active slot.
std::vector<ScenarioSession> derive_charge_windows(const StationState& state,
                                                   const std::vector<ExogenousInput>& steps,
                                                   const StationConfig& config);

/// Monte-Carlo scenario: per slot, walks the switching process with the
/// model's hazards. Ends of sessions already announced are capped at the
/// announced elapse. Deterministic given the rng state.
Scenario sample_scenario(const StationState& state, const ExogenousInput& observed,
                         const UserBehaviorModel& model, int R, const StationConfig& config,
                         Rng& rng);

/// K independent draws on streams derived from master_seed; results do not
/// depend on num_threads.
std::vector<Scenario> sample_set(const StationState& state, const ExogenousInput& observed,
                                 const UserBehaviorModel& model, int R, int K,
                                 const StationConfig& config, std::uint64_t master_seed,
                                 int num_threads = 1);

/// k-means (seeded k-means++ init, <= 100 iterations) in the demand-profile
/// embedding: per-step newly requested kWh and per-step active-slot counts.
/// Keeps the member scenario nearest each centroid, weight = cluster share.
ReducedScenarioSet reduce(const std::vector<Scenario>& set, int k_prime, Rng& rng);

/// Deterministic forecast: a switch is predicted at the first step where the
/// cumulative switch probability crosses 0.5.
Scenario point_forecast(const StationState& state, const ExogenousInput& observed,
                        const UserBehaviorModel& model, int R, const StationConfig& config);

struct RequestBasedForecast {
    Scenario scenario;                            // announced ends trusted, no arrivals
    std::vector<std::vector<double>> uncontrollable_kwh;  // [step][slot]
};

/// Forecast used by the request-based baseline: sessions end exactly at the
/// announced time, no future sessions; slots without a session carry the
/// average-load table value as uncontrollable demand.
RequestBasedForecast request_based_forecast(const StationState& state,
                                            const ExogenousInput& observed,
                                            const AvgLoadTable& table, int R,
                                            const StationConfig& config);

/// Oracle forecast from the realized trace; truncated (padded with empty
/// inputs) at the trace end. Throws if t0 lies outside the trace.
Scenario perfect_forecast(const DiscretizedTrace& trace, StepIndex t0, int R);

/// Debug dump, one line per slot event: t slot a q k delta.
void dump_scenario(const Scenario& s, std::ostream& os);

} // namespace evcs
