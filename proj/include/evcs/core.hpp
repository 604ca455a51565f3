// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evcs/errors.hpp"
#include "evcs/timeutil.hpp"

namespace evcs {

/// Step index counting dt-steps since the Unix epoch, so step mod
/// steps_per_day gives the step-of-day directly.
using StepIndex = std::int64_t;

/// Remaining energies below this are treated as zero (float dust guard in
/// satisfaction metrics).
inline constexpr double kRemainingDustKwh = 1e-6;

/// Physical and economic parameters of the station.
struct StationConfig {
    int n = 32;                          // number of charging slots
    int dt_minutes = 15;                 // control step length
    double e_max = 3.0;                  // max energy per slot per step (kWh)
    double c_max = 7.68;                 // grid import threshold per step (kWh)
    double xi = 14.31;                   // overrun penalty (EUR per offending step)
    double eta = 0.91;                   // charge efficiency
    double alpha = 5000.0;               // satisfaction weight (EUR per unit per step)
    std::vector<double> price_schedule;  // EUR/kWh per step-of-day, size steps_per_day
    int horizon_R = 40;                  // control horizon (steps)

    int steps_per_day() const { return 24 * 60 / dt_minutes; }
    int seconds_per_step() const { return dt_minutes * 60; }

    /// Price for an absolute step index.
    double price_at(StepIndex t) const {
        const int spd = steps_per_day();
        std::int64_t s = t % spd;
        if (s < 0) s += spd;
        return price_schedule[static_cast<std::size_t>(s)];
    }

    EpochSeconds clock_at(StepIndex t) const { return t * seconds_per_step(); }

    /// Throws ConfigError on any violated range.
    void validate() const;
};

/// Off-peak/peak price table for the given intervals (hours, [begin, end)).
std::vector<double> make_price_schedule(int dt_minutes, double offpeak_price, double peak_price,
                                        const std::vector<std::pair<int, int>>& peak_hours);

/// No announced end-of-parking tracked (inactive slot).
inline constexpr int kNoAnnouncedEnd = -1;

struct SlotState {
    bool active = false;
    double remaining_kwh = 0.0;        // energy still to deliver (net of losses)
    double initial_request_kwh = 0.0;  // request at session start
    int announced_steps_left = kNoAnnouncedEnd;
    std::int64_t sojourn_steps = 0;    // steps since the last activation switch
};

struct StationState {
    StepIndex t = 0;
    std::vector<SlotState> slots;

    static StationState empty(const StationConfig& cfg, StepIndex t0) {
        StationState s;
        s.t = t0;
        s.slots.assign(static_cast<std::size_t>(cfg.n), SlotState{});
        return s;
    }
};

/// Exogenous events on one slot at one step.
struct SlotEvent {
    bool start = false;
    bool end = false;
    double request_kwh = 0.0;          // meaningful only when start
    int announced_duration_steps = 0;  // meaningful only when start

    bool operator==(const SlotEvent&) const = default;
};

struct ExogenousInput {
    StepIndex t = 0;
    std::vector<SlotEvent> events;

    static ExogenousInput empty(int n, StepIndex t) {
        ExogenousInput w;
        w.t = t;
        w.events.assign(static_cast<std::size_t>(n), SlotEvent{});
        return w;
    }

    bool operator==(const ExogenousInput&) const = default;
};

struct ControlAction {
    std::vector<double> energy_kwh;  // per slot, in [0, e_max]

    static ControlAction zeros(int n) {
        ControlAction a;
        a.energy_kwh.assign(static_cast<std::size_t>(n), 0.0);
        return a;
    }
};

struct StageCostBreakdown {
    double energy_cost_eur = 0.0;
    double penalty_eur = 0.0;
    double dissatisfaction_units = 0.0;
    double total_weighted_eur = 0.0;
};

struct ActionViolation {
    int slot = -1;
    std::string reason;
};

/// Stage cost on an infeasible action.
class ActionViolationError : public std::runtime_error {
public:
    ActionViolationError(std::string msg, std::vector<ActionViolation> v)
        : std::runtime_error(std::move(msg)), violations(std::move(v)) {}
    std::vector<ActionViolation> violations;
};

/// Record emitted when a session ends (disconnect or announced elapse).
struct SessionEndRecord {
    int slot = -1;
    StepIndex t = 0;                   // step at which the end was applied
    double final_remaining_kwh = 0.0;  // post-charge remaining at that step
    double initial_request_kwh = 0.0;
};

struct StepResult {
    StationState state;
    StageCostBreakdown cost;
    std::vector<SessionEndRecord> ended_sessions;
    int ignored_end_events = 0;  // end events seen on inactive slots
};

/// Total station load of an action (sum of per-slot energies, kWh).
double station_load(const ControlAction& action);

/// Satisfaction score of an active slot: 1 - remaining/initial, in [0,1].
/// Throws std::domain_error on an inactive slot or zero initial request.
double satisfaction(const SlotState& slot);

/// Checks an action against the state: 0 <= e <= e_max, e = 0 on inactive
/// slots, eta*e <= remaining. Returns every violation, not just the first.
std::vector<ActionViolation> validate_action(const StationState& state, const ControlAction& action,
                                             const StationConfig& config);

/// Stage cost of an action at the state's step, evaluated on the post-charge
/// remaining energies. Throws ActionViolationError if the action is
/// infeasible.
StageCostBreakdown stage_cost(const StationState& state, const ControlAction& action,
                              const StationConfig& config);

/// One simulation step. Ordering within the step: apply charge, compute the
/// stage cost on the post-charge state, apply session ends (explicit event or
/// announced elapse), apply session starts, then advance clocks (announced
/// countdown on sessions that stayed active, sojourn on slots that did not
/// switch). Throws ActionViolationError / ModelConsistencyError.
StepResult step(const StationState& state, const ControlAction& action, const ExogenousInput& w,
                const StationConfig& config);

} // namespace evcs
