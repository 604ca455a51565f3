// SPDX-License-Identifier: Apache-2.0
#include "evcs/scenario.hpp"

#include <map>
#include <sstream>

#include "helpers.hpp"
#include "test_util.hpp"

using namespace evcs;
using evcs_test::ConstModel;

namespace {

bool scenarios_equal(const Scenario& a, const Scenario& b) {
    if (a.steps.size() != b.steps.size()) return false;
    for (std::size_t i = 0; i < a.steps.size(); ++i)
        if (!(a.steps[i] == b.steps[i])) return false;
    return true;
}

void test_degenerate_models() {
    StationConfig cfg = evcs_test::small_config(3);
    StationState st = StationState::empty(cfg, 100);
    st.slots[0].active = true;
    st.slots[0].remaining_kwh = 8.0;
    st.slots[0].initial_request_kwh = 10.0;
    st.slots[0].announced_steps_left = 5;
    ExogenousInput w = ExogenousInput::empty(cfg.n, 100);

    // no switches at all: the session runs to its announced end, no arrivals
    ConstModel frozen(0.0, 0.0, 5.0);
    Rng rng(1);
    Scenario sc = sample_scenario(st, w, frozen, 12, cfg, rng);
    CHECK(sc.sessions.size() == 1);
    CHECK(sc.sessions[0].slot == 0);
    CHECK(sc.sessions[0].charge_begin == 100);
    CHECK(sc.sessions[0].charge_end == 104);  // t0 + m - 1
    for (const auto& step : sc.steps)
        for (const auto& ev : step.events) CHECK(!ev.start && !ev.end);

    // every active session ends at t0+1
    ConstModel quit(0.0, 1.0, 5.0);
    Rng rng2(1);
    Scenario sc2 = sample_scenario(st, w, quit, 12, cfg, rng2);
    CHECK(sc2.sessions.size() == 1);
    CHECK(sc2.sessions[0].charge_end == 101);
    CHECK(sc2.steps[1].events[0].end);
    test_pass("degenerate_models");
}

void test_determinism_and_streams() {
    StationConfig cfg = evcs_test::small_config(4);
    Rng state_rng(42);
    StationState st = evcs_test::random_state(state_rng, cfg, 200);
    ExogenousInput w = ExogenousInput::empty(cfg.n, 200);
    ConstModel m(0.07, 0.12, 6.0);

    Rng a(777), b(777);
    Scenario sa = sample_scenario(st, w, m, 20, cfg, a);
    Scenario sb = sample_scenario(st, w, m, 20, cfg, b);
    CHECK(scenarios_equal(sa, sb));

    // sample_set: identical across thread counts, shared observed first step
    auto set1 = sample_set(st, w, m, 20, 12, cfg, 99, 1);
    auto set4 = sample_set(st, w, m, 20, 12, cfg, 99, 4);
    CHECK(set1.size() == 12);
    for (std::size_t k = 0; k < set1.size(); ++k) {
        CHECK(scenarios_equal(set1[k], set4[k]));
        CHECK(set1[k].steps[0] == w);
    }
    test_pass("determinism_and_streams");
}

void test_walk_windows_match_derivation() {
    StationConfig cfg = evcs_test::small_config(5);
    ConstModel m(0.1, 0.15, 4.0);
    Rng rng(314);
    for (int trial = 0; trial < 200; ++trial) {
        StationState st = evcs_test::random_state(rng, cfg, 1000 + trial);
        ExogenousInput w = ExogenousInput::empty(cfg.n, 1000 + trial);
        Scenario sc = sample_scenario(st, w, m, 16, cfg, rng);
        auto derived = derive_charge_windows(st, sc.steps, cfg);
        CHECK_MSG(derived.size() == sc.sessions.size(), "window count mismatch at trial " << trial);
        for (std::size_t j = 0; j < derived.size(); ++j) {
            CHECK(derived[j].slot == sc.sessions[j].slot);
            CHECK(derived[j].charge_begin == sc.sessions[j].charge_begin);
            CHECK(derived[j].charge_end == sc.sessions[j].charge_end);
            CHECK(derived[j].start_remaining_kwh == sc.sessions[j].start_remaining_kwh);
            CHECK(derived[j].initial_request_kwh == sc.sessions[j].initial_request_kwh);
            CHECK(derived[j].first_stage == sc.sessions[j].first_stage);
        }
        // scenario legality invariants
        std::vector<bool> active(static_cast<std::size_t>(cfg.n));
        for (int i = 0; i < cfg.n; ++i) active[static_cast<std::size_t>(i)] = st.slots[static_cast<std::size_t>(i)].active;
        for (const auto& step : sc.steps)
            for (const auto& ev : step.events)
                if (ev.start) CHECK(ev.request_kwh > 0 && ev.announced_duration_steps >= 1);
    }
    test_pass("walk_windows_match_derivation");
}

void test_reduce_trivial_cases() {
    StationConfig cfg = evcs_test::small_config(3);
    Rng srng(5);
    StationState st = evcs_test::random_state(srng, cfg, 0, 0.8);
    ExogenousInput w = ExogenousInput::empty(cfg.n, 0);
    ConstModel m(0.15, 0.2, 5.0);
    auto set = sample_set(st, w, m, 10, 8, cfg, 1234);

    Rng r1(1);
    ReducedScenarioSet full = reduce(set, 8, r1);
    CHECK(full.scenarios.size() <= 8);
    double wsum = 0.0;
    for (const auto& s : full.scenarios) wsum += s.weight;
    CHECK_NEAR(wsum, 1.0, 1e-12);

    Rng r2(1);
    ReducedScenarioSet one = reduce(set, 1, r2);
    CHECK(one.scenarios.size() == 1);
    CHECK_NEAR(one.scenarios[0].weight, 1.0, 1e-15);
    // the medoid is a member of the input set
    bool member = false;
    for (const auto& s : set) member = member || scenarios_equal(s, one.scenarios[0]);
    CHECK(member);

    Rng r3(9);
    CHECK_THROWS(reduce(set, 9, r3), ConfigError);
    test_pass("reduce_trivial_cases");
}

void test_reduce_two_regimes() {
    // 20 scenarios, two well-separated demand regimes split 10/10
    StationConfig cfg = evcs_test::small_config(2);
    StationState st = StationState::empty(cfg, 0);
    ExogenousInput w0 = ExogenousInput::empty(cfg.n, 0);
    std::vector<Scenario> set;
    for (int k = 0; k < 20; ++k) {
        Scenario sc;
        sc.t0 = 0;
        sc.horizon = 6;
        sc.steps.push_back(w0);
        for (int j = 1; j <= 6; ++j) sc.steps.push_back(ExogenousInput::empty(cfg.n, j));
        if (k % 2 == 0) {
            // heavy regime: both slots request a lot early
            for (int i = 0; i < 2; ++i) {
                SlotEvent& ev = sc.steps[1].events[static_cast<std::size_t>(i)];
                ev.start = true;
                ev.request_kwh = 20.0 + 0.01 * k;
                ev.announced_duration_steps = 5;
            }
        } else {
            SlotEvent& ev = sc.steps[4].events[0];
            ev.start = true;
            ev.request_kwh = 1.0 + 0.01 * k;
            ev.announced_duration_steps = 2;
        }
        sc.sessions = derive_charge_windows(st, sc.steps, cfg);
        set.push_back(std::move(sc));
    }
    Rng rng(77);
    ReducedScenarioSet red = reduce(set, 2, rng);
    CHECK(red.scenarios.size() == 2);
    CHECK_NEAR(red.scenarios[0].weight, 0.5, 1e-12);
    CHECK_NEAR(red.scenarios[1].weight, 0.5, 1e-12);
    test_pass("reduce_two_regimes");
}

// sampled session durations under a constant end hazard follow the geometric
// distribution; chi-squared test at the 1% level
void test_duration_distribution() {
    StationConfig cfg = evcs_test::small_config(1);
    StationState st = StationState::empty(cfg, 0);
    st.slots[0].active = true;
    st.slots[0].remaining_kwh = 10.0;
    st.slots[0].initial_request_kwh = 10.0;
    st.slots[0].announced_steps_left = 100000;  // cap far beyond the horizon
    ExogenousInput w = ExogenousInput::empty(cfg.n, 0);
    const double h = 0.3;
    ConstModel m(0.0, h, 5.0);

    const int N = 10000;
    const int R = 60;
    std::vector<long> counts(10, 0);  // durations 1..9, tail >= 10
    for (int k = 0; k < N; ++k) {
        Rng rng(derive_stream(2024, {static_cast<std::uint64_t>(k)}));
        Scenario sc = sample_scenario(st, w, m, R, cfg, rng);
        CHECK(sc.sessions.size() == 1);
        // the first step an end can be drawn is t0+1, so the geometric
        // variable is the number of steps past t0
        const long dur = static_cast<long>(sc.sessions[0].charge_end - sc.sessions[0].charge_begin);
        CHECK(dur >= 1);
        counts[static_cast<std::size_t>(std::min<long>(dur, 10) - 1)] += 1;
    }
    double chi2 = 0.0;
    double tail_p = 1.0;
    for (int d = 1; d <= 9; ++d) {
        const double pd = std::pow(1.0 - h, d - 1) * h;
        tail_p -= pd;
        const double expect = N * pd;
        const double diff = counts[static_cast<std::size_t>(d - 1)] - expect;
        chi2 += diff * diff / expect;
    }
    const double expect_tail = N * tail_p;
    const double dtail = counts[9] - expect_tail;
    chi2 += dtail * dtail / expect_tail;
    // df = 9, critical value at the 1% level
    CHECK_MSG(chi2 < 21.666, "chi2 = " << chi2);
    test_pass("duration_distribution_geometric");
}

void test_point_forecast() {
    StationConfig cfg = evcs_test::small_config(2);
    StationState st = StationState::empty(cfg, 50);
    st.slots[0].active = true;
    st.slots[0].remaining_kwh = 6.0;
    st.slots[0].initial_request_kwh = 6.0;
    st.slots[0].announced_steps_left = 30;
    ExogenousInput w = ExogenousInput::empty(cfg.n, 50);

    // constant hazard 0.5: median switch at the first step
    ConstModel half(0.0, 0.5, 5.0);
    Scenario sc = point_forecast(st, w, half, 10, cfg);
    CHECK(sc.sessions.size() == 1);
    CHECK(sc.sessions[0].charge_end == 51);

    // hazard 0.2: 1-0.8^j crosses 0.5 at j=4
    ConstModel fifth(0.0, 0.2, 5.0);
    Scenario sc2 = point_forecast(st, w, fifth, 10, cfg);
    CHECK(sc2.sessions[0].charge_end == 54);

    // no arrivals when p_start = 0; repeated calls identical
    ConstModel none(0.0, 0.2, 5.0);
    Scenario sc3 = point_forecast(st, w, none, 10, cfg);
    CHECK(sc3.sessions.size() == 1);
    CHECK(scenarios_equal(sc2, sc3));

    // announced elapse wins over a later median
    st.slots[0].announced_steps_left = 2;
    Scenario sc4 = point_forecast(st, w, fifth, 10, cfg);
    CHECK(sc4.sessions[0].charge_end == 51);  // cap at t0 + m - 1
    test_pass("point_forecast");
}

void test_request_based_forecast() {
    StationConfig cfg = evcs_test::small_config(3);
    StationState st = StationState::empty(cfg, 24);  // step 24 = 06:00
    st.slots[1].active = true;
    st.slots[1].remaining_kwh = 9.0;
    st.slots[1].initial_request_kwh = 9.0;
    st.slots[1].announced_steps_left = 4;
    ExogenousInput w = ExogenousInput::empty(cfg.n, 24);

    AvgLoadTable table = AvgLoadTable::zeros(cfg.n);
    for (int h = 0; h < 24; ++h) {
        table.at(0, h) = 0.5;
        table.at(2, h) = 1.25;
    }
    RequestBasedForecast f = request_based_forecast(st, w, table, 8, cfg);
    CHECK(f.scenario.sessions.size() == 1);
    CHECK(f.scenario.sessions[0].slot == 1);
    CHECK(f.scenario.sessions[0].charge_end == 27);  // announced time trusted
    for (int j = 0; j <= 8; ++j) {
        CHECK_NEAR(f.uncontrollable_kwh[static_cast<std::size_t>(j)][0], 0.5, 1e-15);
        CHECK_NEAR(f.uncontrollable_kwh[static_cast<std::size_t>(j)][1], 0.0, 1e-15);
        CHECK_NEAR(f.uncontrollable_kwh[static_cast<std::size_t>(j)][2], 1.25, 1e-15);
    }

    // zeroed table degenerates to announced-times-only forecast
    AvgLoadTable zero = AvgLoadTable::zeros(cfg.n);
    RequestBasedForecast fz = request_based_forecast(st, w, zero, 8, cfg);
    for (const auto& per_slot : fz.uncontrollable_kwh)
        for (double u : per_slot) CHECK(u == 0.0);
    test_pass("request_based_forecast");
}

void test_perfect_forecast() {
    DiscretizedTrace tr;
    tr.n = 2;
    tr.dt_minutes = 15;
    tr.start_step = 10;
    for (int s = 0; s < 20; ++s) tr.steps.push_back(ExogenousInput::empty(2, 10 + s));
    SlotEvent& ev = tr.steps[5].events[1];
    ev.start = true;
    ev.request_kwh = 7.0;
    ev.announced_duration_steps = 6;
    tr.sessions = derive_sessions(tr);

    Scenario sc = perfect_forecast(tr, 12, 8);
    CHECK(sc.steps.size() == 9);
    for (int j = 0; j <= 8; ++j) CHECK(sc.steps[static_cast<std::size_t>(j)] == tr.at(12 + j));

    // truncation at the trace end pads with empty inputs
    Scenario sc2 = perfect_forecast(tr, 25, 10);
    CHECK(sc2.steps.size() == 11);
    for (int j = 5; j <= 10; ++j)
        for (const auto& e : sc2.steps[static_cast<std::size_t>(j)].events) CHECK(!e.start && !e.end);

    CHECK_THROWS(perfect_forecast(tr, 30, 5), ModelConsistencyError);
    CHECK_THROWS(perfect_forecast(tr, 9, 5), ModelConsistencyError);
    test_pass("perfect_forecast");
}

void test_scenario_dump() {
    StationConfig cfg = evcs_test::small_config(2);
    StationState st = StationState::empty(cfg, 0);
    ExogenousInput w = ExogenousInput::empty(cfg.n, 0);
    ConstModel m(1.0, 1.0, 3.5);
    Rng rng(3);
    Scenario sc = sample_scenario(st, w, m, 4, cfg, rng);
    std::ostringstream os;
    dump_scenario(sc, os);
    CHECK(!os.str().empty());
    CHECK(os.str().find("3.5") != std::string::npos);
    test_pass("scenario_dump");
}

} // namespace

int main() {
    test_degenerate_models();
    test_determinism_and_streams();
    test_walk_windows_match_derivation();
    test_reduce_trivial_cases();
    test_reduce_two_regimes();
    test_duration_distribution();
    test_point_forecast();
    test_request_based_forecast();
    test_perfect_forecast();
    test_scenario_dump();
    return 0;
}
