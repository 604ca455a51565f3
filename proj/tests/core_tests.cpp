// SPDX-License-Identifier: Apache-2.0
#include "evcs/core.hpp"

#include <vector>

#include "evcs/rng.hpp"
#include "test_util.hpp"

using namespace evcs;

namespace {

// Station settings used throughout: 32 slots, 15-minute steps, peak price
// 06-09 / 11-13 / 17-21.
StationConfig paper_config() {
    StationConfig cfg;
    cfg.n = 32;
    cfg.dt_minutes = 15;
    cfg.e_max = 3.0;
    cfg.c_max = 7.68;
    cfg.xi = 14.31;
    cfg.eta = 0.91;
    cfg.alpha = 5000.0;
    cfg.horizon_R = 40;
    cfg.price_schedule = make_price_schedule(15, 0.102, 0.153, {{6, 9}, {11, 13}, {17, 21}});
    cfg.validate();
    return cfg;
}

StationState one_active_slot(const StationConfig& cfg, StepIndex t, int slot, double r, double z,
                             int m) {
    StationState s = StationState::empty(cfg, t);
    auto& sl = s.slots[static_cast<std::size_t>(slot)];
    sl.active = true;
    sl.remaining_kwh = r;
    sl.initial_request_kwh = z;
    sl.announced_steps_left = m;
    return s;
}

void test_station_load() {
    StationConfig cfg = paper_config();
    CHECK(station_load(ControlAction::zeros(cfg.n)) == 0.0);

    ControlAction full = ControlAction::zeros(cfg.n);
    for (auto& e : full.energy_kwh) e = 3.0;
    CHECK_NEAR(station_load(full), 96.0, 1e-12);
    CHECK_NEAR(0.08 * 32 * 3.0, cfg.c_max, 1e-12);

    ControlAction two = ControlAction::zeros(cfg.n);
    two.energy_kwh[0] = 2.0;
    two.energy_kwh[5] = 1.5;
    CHECK_NEAR(station_load(two), 3.5, 1e-12);
    test_pass("station_load");
}

void test_satisfaction() {
    SlotState s;
    s.active = true;
    s.initial_request_kwh = 10.0;
    s.remaining_kwh = 10.0;
    CHECK_NEAR(satisfaction(s), 0.0, 1e-15);
    s.remaining_kwh = 0.0;
    CHECK_NEAR(satisfaction(s), 1.0, 1e-15);
    s.remaining_kwh = 3.0;
    CHECK_NEAR(satisfaction(s), 0.7, 1e-15);

    SlotState inactive;
    CHECK_THROWS(satisfaction(inactive), std::domain_error);
    SlotState zero_req;
    zero_req.active = true;
    CHECK_THROWS(satisfaction(zero_req), std::domain_error);
    test_pass("satisfaction");
}

void test_price_schedule() {
    StationConfig cfg = paper_config();
    // hour 7 is peak, hour 10 off-peak; schedule repeats daily
    CHECK_NEAR(cfg.price_at(7 * 4), 0.153, 1e-15);
    CHECK_NEAR(cfg.price_at(10 * 4), 0.102, 1e-15);
    CHECK_NEAR(cfg.price_at(96 * 12 + 7 * 4), 0.153, 1e-15);
    CHECK_NEAR(cfg.price_at(0), 0.102, 1e-15);
    test_pass("price_schedule");
}

void test_stage_cost() {
    StationConfig cfg = paper_config();
    const StepIndex peak_step = 7 * 4;  // 07:00, peak

    // load 4 kWh at peak price
    StationState st = one_active_slot(cfg, peak_step, 0, 20.0, 20.0, 40);
    st.slots[1] = st.slots[0];
    ControlAction a = ControlAction::zeros(cfg.n);
    a.energy_kwh[0] = 3.0;
    a.energy_kwh[1] = 1.0;
    StageCostBreakdown b = stage_cost(st, a, cfg);
    CHECK_NEAR(b.energy_cost_eur, 0.612, 1e-12);
    CHECK_NEAR(b.penalty_eur, 0.0, 1e-12);

    // load 8 kWh > 7.68 -> one fixed penalty
    StationState st8 = StationState::empty(cfg, peak_step);
    ControlAction a8 = ControlAction::zeros(cfg.n);
    for (int i = 0; i < 4; ++i) {
        auto& sl = st8.slots[static_cast<std::size_t>(i)];
        sl.active = true;
        sl.remaining_kwh = sl.initial_request_kwh = 20.0;
        sl.announced_steps_left = 40;
        a8.energy_kwh[static_cast<std::size_t>(i)] = 2.0;
    }
    StageCostBreakdown b8 = stage_cost(st8, a8, cfg);
    CHECK_NEAR(b8.penalty_eur, 14.31, 1e-12);

    // exactly at the threshold: no penalty (strict overrun)
    ControlAction at = ControlAction::zeros(cfg.n);
    at.energy_kwh[0] = 1.92;
    at.energy_kwh[1] = 1.92;
    at.energy_kwh[2] = 1.92;
    at.energy_kwh[3] = 1.92;
    CHECK_NEAR(stage_cost(st8, at, cfg).penalty_eur, 0.0, 1e-12);

    // empty station, zero action
    StationState empty = StationState::empty(cfg, peak_step);
    StageCostBreakdown b0 = stage_cost(empty, ControlAction::zeros(cfg.n), cfg);
    CHECK(b0.total_weighted_eur == 0.0);

    // decomposition identity
    CHECK_NEAR(b8.total_weighted_eur,
               b8.energy_cost_eur + b8.penalty_eur + cfg.alpha * b8.dissatisfaction_units, 1e-12);

    // infeasible action -> error listing offenders
    ControlAction bad = ControlAction::zeros(cfg.n);
    bad.energy_kwh[10] = 1.0;  // inactive slot
    CHECK_THROWS(stage_cost(empty, bad, cfg), ActionViolationError);
    test_pass("stage_cost");
}

void test_validate_action() {
    StationConfig cfg = paper_config();
    StationState st = StationState::empty(cfg, 0);

    ControlAction a = ControlAction::zeros(cfg.n);
    a.energy_kwh[3] = 1.0;
    auto v = validate_action(st, a, cfg);
    CHECK(v.size() == 1);
    CHECK(v[0].slot == 3);
    CHECK(v[0].reason == "inactive slot charged");

    // overcharge: eta*e = 1.092 > r = 1.0
    StationState st2 = one_active_slot(cfg, 0, 0, 1.0, 5.0, 10);
    ControlAction a2 = ControlAction::zeros(cfg.n);
    a2.energy_kwh[0] = 1.2;
    auto v2 = validate_action(st2, a2, cfg);
    CHECK(v2.size() == 1);
    CHECK(v2[0].reason == "overcharge past the remaining request");

    // all violations reported, not only the first
    ControlAction a3 = ControlAction::zeros(cfg.n);
    a3.energy_kwh[0] = 4.0;  // over e_max and overcharge
    a3.energy_kwh[1] = 0.5;  // inactive
    CHECK(validate_action(st2, a3, cfg).size() == 3);

    CHECK(validate_action(st, ControlAction::zeros(cfg.n), cfg).empty());
    test_pass("validate_action");
}

void test_step_charge_dynamics() {
    StationConfig cfg = paper_config();
    StationState st = one_active_slot(cfg, 0, 0, 10.0, 10.0, 40);
    ControlAction a = ControlAction::zeros(cfg.n);
    a.energy_kwh[0] = 3.0;
    StepResult r = step(st, a, ExogenousInput::empty(cfg.n, 0), cfg);
    CHECK_NEAR(r.state.slots[0].remaining_kwh, 7.27, 1e-12);
    CHECK(r.state.t == 1);
    CHECK(r.state.slots[0].announced_steps_left == 39);
    CHECK(r.state.slots[0].sojourn_steps == 1);
    test_pass("step_charge_dynamics");
}

void test_step_announced_elapse() {
    StationConfig cfg = paper_config();
    StationState st = one_active_slot(cfg, 5, 2, 4.0, 6.0, 1);
    StepResult r = step(st, ControlAction::zeros(cfg.n), ExogenousInput::empty(cfg.n, 5), cfg);
    CHECK(!r.state.slots[2].active);
    CHECK(r.state.slots[2].remaining_kwh == 0.0);
    CHECK(r.state.slots[2].sojourn_steps == 0);
    CHECK(r.ended_sessions.size() == 1);
    CHECK(r.ended_sessions[0].slot == 2);
    CHECK_NEAR(r.ended_sessions[0].final_remaining_kwh, 4.0, 1e-12);
    CHECK_NEAR(r.ended_sessions[0].initial_request_kwh, 6.0, 1e-12);
    test_pass("step_announced_elapse");
}

void test_step_start() {
    StationConfig cfg = paper_config();
    StationState st = StationState::empty(cfg, 9);
    ExogenousInput w = ExogenousInput::empty(cfg.n, 9);
    w.events[4] = {true, false, 6.0, 8};
    StepResult r = step(st, ControlAction::zeros(cfg.n), w, cfg);
    const SlotState& s = r.state.slots[4];
    CHECK(s.active);
    CHECK_NEAR(s.remaining_kwh, 6.0, 1e-15);
    CHECK_NEAR(s.initial_request_kwh, 6.0, 1e-15);
    CHECK(s.announced_steps_left == 8);
    CHECK(s.sojourn_steps == 0);

    // start on an already-active slot is a model bug
    ExogenousInput w2 = ExogenousInput::empty(cfg.n, 10);
    w2.events[4] = {true, false, 3.0, 4};
    CHECK_THROWS(step(r.state, ControlAction::zeros(cfg.n), w2, cfg), ModelConsistencyError);
    test_pass("step_start");
}

void test_step_end_event_ordering() {
    StationConfig cfg = paper_config();
    // session ends at this step but still charges and still contributes to
    // the stage cost (charge -> cost -> ends)
    StationState st = one_active_slot(cfg, 0, 0, 2.0, 4.0, 20);
    ExogenousInput w = ExogenousInput::empty(cfg.n, 0);
    w.events[0].end = true;
    ControlAction a = ControlAction::zeros(cfg.n);
    a.energy_kwh[0] = 1.0;
    StepResult r = step(st, a, w, cfg);
    CHECK(!r.state.slots[0].active);
    CHECK_NEAR(r.cost.dissatisfaction_units, (2.0 - 0.91) / 4.0, 1e-12);
    CHECK_NEAR(r.ended_sessions[0].final_remaining_kwh, 2.0 - 0.91, 1e-12);

    // end event on an inactive slot is ignored but counted
    ExogenousInput w2 = ExogenousInput::empty(cfg.n, 1);
    w2.events[7].end = true;
    StepResult r2 = step(r.state, ControlAction::zeros(cfg.n), w2, cfg);
    CHECK(r2.ignored_end_events == 1);
    CHECK(r2.ended_sessions.empty());

    // a slot freed by announced elapse can host a new arrival the same step
    StationState st3 = one_active_slot(cfg, 0, 0, 1.0, 1.0, 1);
    ExogenousInput w3 = ExogenousInput::empty(cfg.n, 0);
    w3.events[0] = {true, false, 9.0, 12};
    StepResult r3 = step(st3, ControlAction::zeros(cfg.n), w3, cfg);
    CHECK(r3.ended_sessions.size() == 1);
    CHECK(r3.state.slots[0].active);
    CHECK_NEAR(r3.state.slots[0].remaining_kwh, 9.0, 1e-15);
    CHECK(r3.state.slots[0].announced_steps_left == 12);
    test_pass("step_end_event_ordering");
}

void test_step_determinism() {
    StationConfig cfg = paper_config();
    StationState st = one_active_slot(cfg, 3, 1, 8.0, 8.0, 6);
    ControlAction a = ControlAction::zeros(cfg.n);
    a.energy_kwh[1] = 2.5;
    ExogenousInput w = ExogenousInput::empty(cfg.n, 3);
    w.events[9] = {true, false, 4.0, 4};
    StepResult r1 = step(st, a, w, cfg);
    StepResult r2 = step(st, a, w, cfg);
    CHECK(r1.state.slots[1].remaining_kwh == r2.state.slots[1].remaining_kwh);
    CHECK(r1.cost.total_weighted_eur == r2.cost.total_weighted_eur);
    test_pass("step_determinism");
}

// Energy conservation and satisfaction-range invariants over randomized
// sessions driven with random feasible actions.
void test_energy_conservation_randomized() {
    StationConfig cfg = paper_config();
    Rng rng(20240901);
    int sessions_checked = 0;
    while (sessions_checked < 1000) {
        const double z = rng.uniform(0.5, 40.0);
        const int dur = 1 + static_cast<int>(rng.uniform_index(30));
        StationState st = one_active_slot(cfg, 0, 0, z, z, dur);
        double delivered = 0.0;
        double last_r = z;
        bool ended = false;
        for (int t = 0; t < dur + 2 && !ended; ++t) {
            const SlotState& sl = st.slots[0];
            double e = 0.0;
            if (sl.active) {
                CHECK(sl.remaining_kwh <= last_r + 1e-12);  // nonincreasing
                last_r = sl.remaining_kwh;
                const double sat = sl.initial_request_kwh > 0 ? satisfaction(sl) : 1.0;
                CHECK(sat >= 0.0 && sat <= 1.0);
                const double avail = std::min(cfg.e_max, sl.remaining_kwh / cfg.eta);
                // either finish the request exactly or leave a clear margin;
                // sub-dust leftovers are a metrics guard, not a physics path
                if (rng.bernoulli(0.2)) {
                    e = avail;
                } else {
                    e = avail * rng.uniform(0.0, 0.8);
                    if ((sl.remaining_kwh - cfg.eta * e) < 1e-3) e = avail;
                }
            }
            ControlAction a = ControlAction::zeros(cfg.n);
            a.energy_kwh[0] = e;
            StepResult r = step(st, a, ExogenousInput::empty(cfg.n, st.t), cfg);
            if (st.slots[0].active) delivered += e;
            for (const auto& rec : r.ended_sessions) {
                CHECK_NEAR(rec.initial_request_kwh - rec.final_remaining_kwh, cfg.eta * delivered,
                           1e-9);
                ended = true;
            }
            st = r.state;
        }
        CHECK(ended);
        ++sessions_checked;
    }
    test_pass("energy_conservation_randomized_1000_sessions");
}

// Dissatisfaction stops exactly at the step the end is applied.
void test_dissatisfaction_stops_at_end() {
    StationConfig cfg = paper_config();
    StationState st = one_active_slot(cfg, 0, 0, 5.0, 5.0, 2);
    // step 0: active (m=2), contributes
    StepResult r0 = step(st, ControlAction::zeros(cfg.n), ExogenousInput::empty(cfg.n, 0), cfg);
    CHECK(r0.cost.dissatisfaction_units > 0);
    // step 1: m=1, last step; still contributes, then ends
    StepResult r1 = step(r0.state, ControlAction::zeros(cfg.n), ExogenousInput::empty(cfg.n, 1), cfg);
    CHECK(r1.cost.dissatisfaction_units > 0);
    CHECK(r1.ended_sessions.size() == 1);
    // step 2: inactive, no contribution
    StepResult r2 = step(r1.state, ControlAction::zeros(cfg.n), ExogenousInput::empty(cfg.n, 2), cfg);
    CHECK(r2.cost.dissatisfaction_units == 0.0);
    test_pass("dissatisfaction_stops_at_end");
}

} // namespace

int main() {
    test_station_load();
    test_satisfaction();
    test_price_schedule();
    test_stage_cost();
    test_validate_action();
    test_step_charge_dynamics();
    test_step_announced_elapse();
    test_step_start();
    test_step_end_event_ordering();
    test_step_determinism();
    test_energy_conservation_randomized();
    test_dissatisfaction_stops_at_end();
    return 0;
}
