// SPDX-License-Identifier: Apache-2.0
#include "evcs/core.hpp"

#include <cmath>
#include <sstream>

namespace evcs {

namespace {
constexpr double kFeasEps = 1e-9;  // slack granted to solver/float dust
}

void StationConfig::validate() const {
    std::ostringstream bad;
    if (n < 1) bad << "n must be >= 1; ";
    if (dt_minutes <= 0 || 60 % dt_minutes != 0) bad << "dt_minutes must divide 60; ";
    if (!(e_max > 0)) bad << "e_max must be > 0; ";
    if (!(c_max > 0)) bad << "c_max must be > 0; ";
    if (!(xi > 0)) bad << "xi must be > 0; ";
    if (!(eta > 0 && eta <= 1)) bad << "eta must be in (0,1]; ";
    if (!(alpha > 0)) bad << "alpha must be > 0; ";
    if (horizon_R < 1) bad << "horizon_R must be >= 1; ";
    if (price_schedule.size() != static_cast<std::size_t>(steps_per_day()))
        bad << "price_schedule must have one entry per step of day; ";
    for (double p : price_schedule)
        if (!(p >= 0)) { bad << "prices must be >= 0; "; break; }
    const std::string msg = bad.str();
    if (!msg.empty()) throw ConfigError("invalid station config: " + msg);
}

std::vector<double> make_price_schedule(int dt_minutes, double offpeak_price, double peak_price,
                                        const std::vector<std::pair<int, int>>& peak_hours) {
    const int spd = 24 * 60 / dt_minutes;
    std::vector<double> sched(static_cast<std::size_t>(spd), offpeak_price);
    for (int s = 0; s < spd; ++s) {
        const int hour = s * dt_minutes / 60;
        for (const auto& [b, e] : peak_hours)
            if (hour >= b && hour < e) { sched[static_cast<std::size_t>(s)] = peak_price; break; }
    }
    return sched;
}

double station_load(const ControlAction& action) {
    double c = 0.0;
    for (double e : action.energy_kwh) c += e;
    return c;
}

double satisfaction(const SlotState& slot) {
    if (!slot.active) throw std::domain_error("satisfaction: slot is inactive");
    if (!(slot.initial_request_kwh > 0))
        throw std::domain_error("satisfaction: initial request is zero");
    return 1.0 - slot.remaining_kwh / slot.initial_request_kwh;
}

std::vector<ActionViolation> validate_action(const StationState& state, const ControlAction& action,
                                             const StationConfig& config) {
    std::vector<ActionViolation> out;
    if (action.energy_kwh.size() != state.slots.size()) {
        out.push_back({-1, "action length does not match slot count"});
        return out;
    }
    for (int i = 0; i < static_cast<int>(state.slots.size()); ++i) {
        const double e = action.energy_kwh[static_cast<std::size_t>(i)];
        const SlotState& s = state.slots[static_cast<std::size_t>(i)];
        if (!(e >= -kFeasEps))
            out.push_back({i, "negative energy"});
        if (e > config.e_max + kFeasEps)
            out.push_back({i, "exceeds per-slot maximum"});
        if (!s.active && e > kFeasEps)
            out.push_back({i, "inactive slot charged"});
        if (s.active && config.eta * e > s.remaining_kwh + kFeasEps)
            out.push_back({i, "overcharge past the remaining request"});
    }
    return out;
}

namespace {

std::string violations_text(const std::vector<ActionViolation>& v) {
    std::ostringstream os;
    os << "infeasible action:";
    for (const auto& x : v) os << " [slot " << x.slot << ": " << x.reason << "]";
    return os.str();
}

double clamp_dust(double r) { return r < kRemainingDustKwh ? 0.0 : r; }

} // namespace

StageCostBreakdown stage_cost(const StationState& state, const ControlAction& action,
                              const StationConfig& config) {
    auto violations = validate_action(state, action, config);
    if (!violations.empty())
        throw ActionViolationError(violations_text(violations), std::move(violations));

    StageCostBreakdown b;
    const double load = station_load(action);
    b.energy_cost_eur = config.price_at(state.t) * load;
    b.penalty_eur = load > config.c_max ? config.xi : 0.0;
    for (std::size_t i = 0; i < state.slots.size(); ++i) {
        const SlotState& s = state.slots[i];
        if (!s.active) continue;
        const double post = clamp_dust(s.remaining_kwh - config.eta * action.energy_kwh[i]);
        b.dissatisfaction_units += post / s.initial_request_kwh;
    }
    b.total_weighted_eur = b.energy_cost_eur + b.penalty_eur + config.alpha * b.dissatisfaction_units;
    return b;
}

StepResult step(const StationState& state, const ControlAction& action, const ExogenousInput& w,
                const StationConfig& config) {
    if (w.t != state.t)
        throw ModelConsistencyError("step: exogenous input step index does not match state");
    if (w.events.size() != state.slots.size())
        throw ModelConsistencyError("step: exogenous input slot count does not match state");

    StepResult out;
    out.cost = stage_cost(state, action, config);  // also validates the action

    out.state = state;
    StationState& next = out.state;
    std::vector<bool> switched(state.slots.size(), false);

    // (i) charge
    for (std::size_t i = 0; i < next.slots.size(); ++i) {
        SlotState& s = next.slots[i];
        if (s.active) {
            s.remaining_kwh = clamp_dust(s.remaining_kwh - config.eta * action.energy_kwh[i]);
            if (s.remaining_kwh < 0) s.remaining_kwh = 0;
        }
    }

    // (iii) ends: explicit event or announced time elapsed
    for (std::size_t i = 0; i < next.slots.size(); ++i) {
        SlotState& s = next.slots[i];
        const SlotEvent& ev = w.events[i];
        if (!s.active) {
            if (ev.end) ++out.ignored_end_events;
            continue;
        }
        const bool elapsed = s.announced_steps_left != kNoAnnouncedEnd && s.announced_steps_left <= 1;
        if (ev.end || elapsed) {
            out.ended_sessions.push_back({static_cast<int>(i), state.t, s.remaining_kwh,
                                          s.initial_request_kwh});
            s = SlotState{};  // inactive, r = 0, no announced end
            switched[i] = true;
        }
    }

    // (iv) starts
    for (std::size_t i = 0; i < next.slots.size(); ++i) {
        const SlotEvent& ev = w.events[i];
        if (!ev.start) continue;
        SlotState& s = next.slots[i];
        if (s.active)
            throw ModelConsistencyError("step: start event on an already-active slot " +
                                        std::to_string(i));
        if (!(ev.request_kwh > 0) || ev.announced_duration_steps < 1)
            throw ModelConsistencyError("step: start event with invalid request on slot " +
                                        std::to_string(i));
        s.active = true;
        s.remaining_kwh = ev.request_kwh;
        s.initial_request_kwh = ev.request_kwh;
        s.announced_steps_left = ev.announced_duration_steps;
        s.sojourn_steps = 0;
        switched[i] = true;
    }

    // (v) clocks: announced countdown on sessions that stayed active, sojourn
    // on slots that did not switch this step
    for (std::size_t i = 0; i < next.slots.size(); ++i) {
        SlotState& s = next.slots[i];
        if (switched[i]) continue;
        if (s.active && s.announced_steps_left != kNoAnnouncedEnd) --s.announced_steps_left;
        ++s.sojourn_steps;
    }
    next.t = state.t + 1;
    return out;
}

} // namespace evcs
