// SPDX-License-Identifier: Apache-2.0
#include "evcs/program.hpp"

#include <map>

#include "helpers.hpp"
#include "oracle_grid.hpp"
#include "test_util.hpp"

using namespace evcs;
using evcs_test::ConstModel;

namespace {

Scenario empty_scenario(const StationState& state, int R, const StationConfig& cfg) {
    Scenario sc;
    sc.t0 = state.t;
    sc.horizon = R;
    for (int j = 0; j <= R; ++j) sc.steps.push_back(ExogenousInput::empty(cfg.n, state.t + j));
    return sc;
}

void test_variable_counts() {
    StationConfig cfg = evcs_test::small_config(1, 2.0);
    StationState st = StationState::empty(cfg, 0);
    st.slots[0].active = true;
    st.slots[0].remaining_kwh = 10.0;
    st.slots[0].initial_request_kwh = 10.0;
    st.slots[0].announced_steps_left = 50;

    Scenario sc = empty_scenario(st, 2, cfg);
    auto p = StochasticProgram::build(st, {sc}, cfg);
    CHECK(p.num_e_vars() == 3);
    CHECK(p.num_b_vars() == 3);
    CHECK(p.num_propagation_rows() == 3);
    CHECK(p.num_r_vars() == 3);

    // counts visible in the dumped full formulation
    MilpProblem full = p.full_milp();
    CHECK(full.lp.num_cols == 3 + 3 + 3);
    CHECK(static_cast<int>(full.lp.rows.size()) == 3 + 3);
    CHECK(static_cast<int>(full.binary_cols.size()) == 3);
    test_pass("variable_counts");
}

void test_two_scenario_structure() {
    StationConfig cfg = evcs_test::small_config(2, 2.0);
    StationState st = StationState::empty(cfg, 0);
    st.slots[0].active = true;
    st.slots[0].remaining_kwh = 6.0;
    st.slots[0].initial_request_kwh = 6.0;
    st.slots[0].announced_steps_left = 50;

    Scenario a = empty_scenario(st, 2, cfg);
    Scenario b = a;
    a.weight = 0.5;
    b.weight = 0.5;
    // scenario b ends the session one step early
    b.steps[2].events[0].end = true;

    auto p = StochasticProgram::build(st, {a, b}, cfg);
    // shared t0 variable once, later steps duplicated: a has e at t0+1, t0+2;
    // b has e at t0+1, t0+2 (ends at t0+2)
    CHECK(static_cast<int>(p.first_stage_cols().size()) == 1);
    CHECK(p.num_e_vars() == 1 + 2 + 2);
    // b vars: shared t0 plus R per scenario
    CHECK(p.num_b_vars() == 1 + 2 + 2);

    // inactive slot 1 has no variables anywhere
    for (const auto& scen : p.sessions())
        for (const auto& sv : scen) CHECK(sv.window.slot == 0);
    test_pass("two_scenario_structure");
}

void test_single_variable_hand_case() {
    // one slot, r = z = 3, eta = 1, off-peak price, alpha large: charge fully
    StationConfig cfg = evcs_test::small_config(1);
    cfg.eta = 1.0;
    cfg.alpha = 1000.0;
    cfg.validate();
    StationState st = StationState::empty(cfg, 0);  // step 0 is off-peak (00:00)
    st.slots[0].active = true;
    st.slots[0].remaining_kwh = 3.0;
    st.slots[0].initial_request_kwh = 3.0;
    st.slots[0].announced_steps_left = 99;

    Scenario sc = empty_scenario(st, 0, cfg);  // single-step program
    auto p = StochasticProgram::build(st, {sc}, cfg);
    SolverSolution s = solve(p);
    CHECK(s.status == MilpStatus::Optimal);
    ControlAction act = extract_first_stage(p, s, st, cfg);
    CHECK_NEAR(act.energy_kwh[0], 3.0, 1e-9);
    CHECK_NEAR(s.objective, 0.102 * 3.0, 1e-9);  // full satisfaction, no penalty

    // tiny alpha: charging is pure cost, optimum stays idle
    StationConfig lazy = cfg;
    lazy.alpha = 1e-6;
    auto p2 = StochasticProgram::build(st, {sc}, lazy);
    SolverSolution s2 = solve(p2);
    ControlAction act2 = extract_first_stage(p2, s2, st, lazy);
    CHECK_NEAR(act2.energy_kwh[0], 0.0, 1e-9);
    test_pass("single_variable_hand_case");
}

void test_grid_search_oracle() {
    Rng rng(20250102);
    int instances = 0;
    while (instances < 50) {
        const int n = 1 + static_cast<int>(rng.uniform_index(2));
        StationConfig cfg = evcs_test::small_config(n, rng.uniform(1.5, 4.0),
                                                    rng.uniform(50.0, 4000.0));
        StationState st = evcs_test::random_state(rng, cfg, 4 + static_cast<StepIndex>(rng.uniform_index(90)), 0.7);
        const int R = 1 + static_cast<int>(rng.uniform_index(3));  // R in 1..3
        ConstModel model(0.10, 0.25, rng.uniform(2.0, 8.0));
        Rng walk(rng.next_u64());
        ExogenousInput w0 = ExogenousInput::empty(cfg.n, st.t);
        Scenario sc = sample_scenario(st, w0, model, R, cfg, walk);
        const auto windows = derive_charge_windows(st, sc.steps, cfg);
        if (windows.size() > 3) continue;  // keep the DP oracle small

        auto p = StochasticProgram::build(st, {sc}, cfg);
        SolverSolution s = solve(p);
        CHECK(s.status == MilpStatus::Optimal);

        const double grid = 0.25;
        const double grid_min = evcs_test::grid_search_min(st, sc, {}, cfg, grid);

        // grid restriction can only be worse than the continuous optimum
        CHECK_MSG(grid_min >= s.objective - 1e-6 * (1.0 + std::abs(s.objective)),
                  "instance " << instances << ": grid " << grid_min << " < milp " << s.objective);
        // one-grid-cell slack bound on the other side
        double slack = 0.0;
        for (const auto& sv : p.sessions()[0]) {
            if (sv.z < 1e-6) continue;
            for (StepIndex tau = sv.window.charge_begin; tau <= sv.window.charge_end; ++tau)
                slack += grid * cfg.alpha * cfg.eta *
                         static_cast<double>(sv.dissat_end - tau + 1) / sv.z;
        }
        CHECK_MSG(s.objective >= grid_min - slack - 1e-6,
                  "instance " << instances << ": milp " << s.objective << " below grid "
                              << grid_min << " - slack " << slack);
        ++instances;
    }
    test_pass("grid_search_oracle_50_instances");
}

void test_full_vs_reduced_equivalence() {
    Rng rng(5150);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_index(3));
        StationConfig cfg = evcs_test::small_config(n, rng.uniform(1.0, 5.0), rng.uniform(100.0, 20000.0));
        StationState st = evcs_test::random_state(rng, cfg, static_cast<StepIndex>(rng.uniform_index(960)), 0.6);
        const int R = 1 + static_cast<int>(rng.uniform_index(4));
        ConstModel model(0.15, 0.2, 5.0);
        ExogenousInput w0 = ExogenousInput::empty(cfg.n, st.t);
        Rng walk(rng.next_u64());
        std::vector<Scenario> scen;
        const int K = 1 + static_cast<int>(rng.uniform_index(2));
        for (int k = 0; k < K; ++k) {
            Scenario sc = sample_scenario(st, w0, model, R, cfg, walk);
            sc.weight = 1.0 / K;
            scen.push_back(std::move(sc));
        }
        auto p = StochasticProgram::build(st, scen, cfg);

        MilpOptions mo;
        MilpSolution reduced = milp_solve(p.reduced_milp(), mo);
        MilpSolution full = milp_solve(p.full_milp(), mo);
        CHECK(reduced.status == MilpStatus::Optimal);
        CHECK(full.status == MilpStatus::Optimal);
        CHECK_MSG(std::abs(reduced.obj - full.obj) <= 1e-6 * (1.0 + std::abs(full.obj)),
                  "trial " << trial << ": reduced " << reduced.obj << " vs full " << full.obj);
    }
    test_pass("full_vs_reduced_equivalence");
}

void test_nonanticipativity_permutation() {
    Rng rng(31337);
    for (int trial = 0; trial < 20; ++trial) {
        StationConfig cfg = evcs_test::small_config(3, 3.0, rng.uniform(500.0, 5000.0));
        StationState st = evcs_test::random_state(rng, cfg, static_cast<StepIndex>(rng.uniform_index(960)), 0.8);
        ConstModel model(0.2, 0.25, 6.0);
        ExogenousInput w0 = ExogenousInput::empty(cfg.n, st.t);
        Rng walk(rng.next_u64());
        Scenario a = sample_scenario(st, w0, model, 4, cfg, walk);
        Scenario b = sample_scenario(st, w0, model, 4, cfg, walk);
        a.weight = 0.35;
        b.weight = 0.65;

        auto p1 = StochasticProgram::build(st, {a, b}, cfg);
        auto p2 = StochasticProgram::build(st, {b, a}, cfg);
        SolverSolution s1 = solve(p1);
        SolverSolution s2 = solve(p2);
        CHECK(s1.status == MilpStatus::Optimal && s2.status == MilpStatus::Optimal);
        CHECK_NEAR(s1.objective, s2.objective, 1e-9 * (1.0 + std::abs(s1.objective)));
        ControlAction a1 = extract_first_stage(p1, s1, st, cfg);
        ControlAction a2 = extract_first_stage(p2, s2, st, cfg);
        for (int i = 0; i < cfg.n; ++i)
            CHECK_MSG(std::abs(a1.energy_kwh[static_cast<std::size_t>(i)] -
                               a2.energy_kwh[static_cast<std::size_t>(i)]) < 1e-9,
                      "trial " << trial << " slot " << i);
    }
    test_pass("nonanticipativity_permutation");
}

void test_alpha_monotonicity() {
    StationConfig cfg = evcs_test::small_config(2, 2.0);
    StationState st = StationState::empty(cfg, 30);  // 07:30, peak price
    for (int i = 0; i < 2; ++i) {
        st.slots[static_cast<std::size_t>(i)].active = true;
        st.slots[static_cast<std::size_t>(i)].remaining_kwh = 12.0;
        st.slots[static_cast<std::size_t>(i)].initial_request_kwh = 12.0;
        st.slots[static_cast<std::size_t>(i)].announced_steps_left = 6;
    }
    Scenario sc = empty_scenario(st, 5, cfg);
    double prev = -1.0;
    for (double alpha : {0.05, 0.5, 5.0, 50.0, 500.0}) {
        StationConfig c = cfg;
        c.alpha = alpha;
        auto p = StochasticProgram::build(st, {sc}, c);
        SolverSolution s = solve(p);
        CHECK(s.status == MilpStatus::Optimal);
        ControlAction act = extract_first_stage(p, s, st, c);
        const double total = act.energy_kwh[0] + act.energy_kwh[1];
        CHECK_MSG(total >= prev - 1e-9, "alpha " << alpha << ": " << total << " < " << prev);
        prev = total;
    }
    test_pass("alpha_monotonicity");
}

void test_defensive_clamp_and_drift() {
    StationConfig cfg = evcs_test::small_config(2);
    StationState st = StationState::empty(cfg, 0);
    st.slots[0].active = true;
    st.slots[0].remaining_kwh = 1.0;
    st.slots[0].initial_request_kwh = 4.0;
    st.slots[0].announced_steps_left = 10;
    Scenario sc = empty_scenario(st, 2, cfg);
    auto p = StochasticProgram::build(st, {sc}, cfg);
    SolverSolution s = solve(p);
    // inject float dust beyond the overcharge cap
    s.x[static_cast<std::size_t>(p.first_stage_cols().at(0))] = 1.0 / cfg.eta + 1e-10;
    ControlAction act = extract_first_stage(p, s, st, cfg);
    CHECK(act.energy_kwh[0] <= 1.0 / cfg.eta);
    CHECK(validate_action(st, act, cfg).empty());

    // state drift: slot became inactive between planning and execution
    StationState drifted = st;
    drifted.slots[0] = SlotState{};
    ControlAction act2 = extract_first_stage(p, s, drifted, cfg);
    CHECK(act2.energy_kwh[0] == 0.0);
    test_pass("defensive_clamp_and_drift");
}

void test_never_infeasible_property() {
    Rng rng(8080);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_index(4));
        StationConfig cfg = evcs_test::small_config(n, rng.uniform(0.5, 2.0), 5000.0);
        StationState st = evcs_test::random_state(rng, cfg, static_cast<StepIndex>(rng.uniform_index(960)), 0.7);
        ConstModel model(0.3, 0.3, 7.0);
        ExogenousInput w0 = ExogenousInput::empty(cfg.n, st.t);
        Rng walk(rng.next_u64());
        Scenario sc = sample_scenario(st, w0, model, 6, cfg, walk);
        auto p = StochasticProgram::build(st, {sc}, cfg);
        SolverSolution s = solve(p);
        CHECK(s.status != MilpStatus::Infeasible);
        ControlAction act = extract_first_stage(p, s, st, cfg);
        CHECK(validate_action(st, act, cfg).empty());
    }
    test_pass("never_infeasible_property");
}

void test_uncontrollable_load_flips_penalty() {
    // table load pushes the station over the threshold even with zero action
    StationConfig cfg = evcs_test::small_config(2, 2.0);
    cfg.alpha = 1e-6;  // make charging undesirable
    StationState st = StationState::empty(cfg, 0);
    Scenario sc = empty_scenario(st, 1, cfg);

    auto p_free = StochasticProgram::build(st, {sc}, cfg);
    SolverSolution s_free = solve(p_free);
    CHECK_NEAR(s_free.objective, 0.0, 1e-9);

    std::vector<std::vector<double>> u = {{2.5, 2.5}};  // above c_max = 2.0 on both steps
    auto p_loaded = StochasticProgram::build(st, {sc}, cfg, u);
    SolverSolution s_loaded = solve(p_loaded);
    CHECK(s_loaded.status == MilpStatus::Optimal);
    // two overrun penalties plus the energy cost of the uncontrollable load
    const double expect = 2 * cfg.xi + 0.102 * 5.0;
    CHECK_NEAR(s_loaded.objective, expect, 1e-9);
    test_pass("uncontrollable_load_flips_penalty");
}

void test_dump_lp() {
    StationConfig cfg = evcs_test::small_config(1, 2.0);
    StationState st = StationState::empty(cfg, 0);
    st.slots[0].active = true;
    st.slots[0].remaining_kwh = 5.0;
    st.slots[0].initial_request_kwh = 5.0;
    st.slots[0].announced_steps_left = 4;
    Scenario sc = empty_scenario(st, 2, cfg);
    auto p = StochasticProgram::build(st, {sc}, cfg);
    const std::string text = p.dump_lp();
    CHECK(text.find("Minimize") != std::string::npos);
    CHECK(text.find("e_fs_k0_s0_t0") != std::string::npos);
    CHECK(text.find("r_k0_s0_t0") != std::string::npos);
    CHECK(text.find("Binaries") != std::string::npos);
    test_pass("dump_lp");
}

void test_build_errors() {
    StationConfig cfg = evcs_test::small_config(1);
    StationState st = StationState::empty(cfg, 0);
    Scenario sc = empty_scenario(st, 2, cfg);
    sc.weight = 0.7;  // weights must sum to 1
    bool threw = false;
    try {
        StochasticProgram::build(st, {sc}, cfg);
    } catch (const ModelConsistencyError&) {
        threw = true;
    }
    CHECK(threw);

    // scenario claiming a session on a slot the state says inactive
    Scenario bad = empty_scenario(st, 2, cfg);
    bad.steps[1].events[0].end = true;  // ignored like the simulator
    auto p = StochasticProgram::build(st, {bad}, cfg);
    CHECK(p.num_e_vars() == 0);

    Scenario active_claim = empty_scenario(st, 2, cfg);
    active_claim.steps[0].events[0] = {true, false, 0.0, 4};  // start with k = 0
    CHECK_THROWS(StochasticProgram::build(st, {active_claim}, cfg), ModelConsistencyError);
    test_pass("build_errors");
}

} // namespace

int main() {
    test_variable_counts();
    test_two_scenario_structure();
    test_single_variable_hand_case();
    test_grid_search_oracle();
    test_full_vs_reduced_equivalence();
    test_nonanticipativity_permutation();
    test_alpha_monotonicity();
    test_defensive_clamp_and_drift();
    test_never_infeasible_property();
    test_uncontrollable_load_flips_penalty();
    test_dump_lp();
    test_build_errors();
    return 0;
}
