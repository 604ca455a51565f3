// SPDX-License-Identifier: Apache-2.0
#include "evcs/sim.hpp"

#include <sstream>

namespace evcs {

RunResult simulate(const DiscretizedTrace& trace, const Policy& policy,
                   const StationConfig& config) {
    if (trace.n != config.n)
        throw SimulationError("simulate: trace slot count does not match the station config");
    if (trace.dt_minutes != config.dt_minutes)
        throw SimulationError("simulate: trace step length does not match the station config");

    RunResult out;
    StationState state = StationState::empty(config, trace.start_step);
    const std::size_t T = trace.steps.size();
    out.steps.reserve(T);

    for (std::size_t si = 0; si < T; ++si) {
        const ExogenousInput& w = trace.steps[si];
        PolicyDiagnostics diag;
        ControlAction action = policy.decide(state, w, &diag);

        auto violations = validate_action(state, action, config);
        if (!violations.empty()) {
            std::ostringstream os;
            os << "simulate: policy '" << policy.name() << "' returned an infeasible action at step "
               << state.t << ":";
            for (const auto& v : violations) os << " [slot " << v.slot << ": " << v.reason << "]";
            os << "; action =";
            for (double e : action.energy_kwh) os << " " << e;
            os << "; remaining =";
            for (const SlotState& s : state.slots) os << " " << (s.active ? s.remaining_kwh : -1.0);
            throw SimulationError(os.str());
        }

        StepRecord rec;
        rec.t = state.t;
        rec.action = action;
        rec.load_kwh = station_load(action);
        for (const SlotState& s : state.slots) rec.active_slots += s.active ? 1 : 0;
        rec.diag = diag;

        StepResult step_result = step(state, action, w, config);
        rec.cost = step_result.cost;
        out.steps.push_back(std::move(rec));
        out.ignored_end_events += step_result.ignored_end_events;
        for (const SessionEndRecord& e : step_result.ended_sessions) {
            SessionOutcome o;
            o.slot = e.slot;
            o.end_t = e.t;
            o.initial_request_kwh = e.initial_request_kwh;
            o.final_remaining_kwh = e.final_remaining_kwh;
            o.satisfaction =
                e.initial_request_kwh > 0 ? 1.0 - e.final_remaining_kwh / e.initial_request_kwh : 1.0;
            out.sessions.push_back(o);
        }
        state = std::move(step_result.state);
    }

    // close sessions still running at the end of the trace
    for (int i = 0; i < config.n; ++i) {
        const SlotState& s = state.slots[static_cast<std::size_t>(i)];
        if (!s.active) continue;
        SessionOutcome o;
        o.slot = i;
        o.end_t = state.t - 1;
        o.initial_request_kwh = s.initial_request_kwh;
        o.final_remaining_kwh = s.remaining_kwh;
        o.satisfaction = s.initial_request_kwh > 0 ? 1.0 - s.remaining_kwh / s.initial_request_kwh : 1.0;
        out.sessions.push_back(o);
    }

    RunTotals& tot = out.totals;
    double ms = 0.0;
    for (const StepRecord& r : out.steps) {
        tot.energy_cost_eur += r.cost.energy_cost_eur;
        tot.penalty_eur += r.cost.penalty_eur;
        tot.dissatisfaction_units += r.cost.dissatisfaction_units;
        tot.weighted_total_eur += r.cost.total_weighted_eur;
        if (r.cost.penalty_eur > 0) ++tot.penalty_steps;
        ms += r.diag.decide_ms;
    }
    tot.mean_decide_ms = out.steps.empty() ? 0.0 : ms / static_cast<double>(out.steps.size());
    return out;
}

MetricsSummary compute_metrics(const RunResult& result) {
    MetricsSummary m;
    m.electricity_cost_eur = result.totals.energy_cost_eur + result.totals.penalty_eur;
    m.penalty_step_count = result.totals.penalty_steps;
    m.mean_decide_ms = result.totals.mean_decide_ms;
    m.session_count = static_cast<long>(result.sessions.size());
    if (!result.sessions.empty()) {
        double fill = 0.0;
        long full = 0;
        for (const SessionOutcome& s : result.sessions) {
            fill += s.satisfaction;
            if (s.final_remaining_kwh <= 1e-6) ++full;
        }
        m.filling_rate_pct = 100.0 * fill / static_cast<double>(result.sessions.size());
        m.full_satisfaction_pct = 100.0 * static_cast<double>(full) / static_cast<double>(result.sessions.size());
    }
    return m;
}

} // namespace evcs
