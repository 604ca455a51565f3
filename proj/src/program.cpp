// SPDX-License-Identifier: Apache-2.0
#include "evcs/program.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "evcs/errors.hpp"

namespace evcs {

namespace {

constexpr double kDegenerateZ = 1e-6;  // sessions below this skip the dissatisfaction term

} // namespace

StochasticProgram StochasticProgram::build(const StationState& state,
                                           std::vector<Scenario> scenarios,
                                           const StationConfig& config,
                                           std::vector<std::vector<double>> uncontrollable_per_step) {
    if (scenarios.empty()) throw ModelConsistencyError("build_program: no scenarios");
    double wsum = 0.0;
    for (const Scenario& s : scenarios) wsum += s.weight;
    if (std::abs(wsum - 1.0) > 1e-9)
        throw ModelConsistencyError("build_program: scenario weights do not sum to 1");
    for (const Scenario& s : scenarios) {
        if (s.t0 != state.t || s.steps.empty() || s.steps.front().t != state.t)
            throw ModelConsistencyError("build_program: scenario not anchored at the state step");
        if (s.horizon != scenarios.front().horizon)
            throw ModelConsistencyError("build_program: scenarios disagree on the horizon");
        if (!(s.steps.front() == scenarios.front().steps.front()))
            throw ModelConsistencyError("build_program: scenarios disagree on the observed w_t0");
    }

    StochasticProgram p;
    p.config_ = config;
    p.t0_ = state.t;
    p.horizon_ = scenarios.front().horizon;
    p.scenarios_ = std::move(scenarios);
    const int K = static_cast<int>(p.scenarios_.size());
    const int R = p.horizon_;

    if (uncontrollable_per_step.empty())
        uncontrollable_per_step.assign(static_cast<std::size_t>(K),
                                       std::vector<double>(static_cast<std::size_t>(R) + 1, 0.0));
    if (static_cast<int>(uncontrollable_per_step.size()) != K)
        throw ModelConsistencyError("build_program: uncontrollable loads do not match scenarios");
    p.uncontrollable_ = std::move(uncontrollable_per_step);

    double max_uncontrollable = 0.0;
    for (const auto& per_step : p.uncontrollable_)
        for (double u : per_step) max_uncontrollable = std::max(max_uncontrollable, u);
    p.big_m_ = config.n * config.e_max + max_uncontrollable - config.c_max;

    // charge windows per scenario; the derivation also validates the
    // scenario against the state
    std::vector<std::pair<double, double>> fs_data(static_cast<std::size_t>(config.n), {-1.0, -1.0});
    for (int k = 0; k < K; ++k) {
        auto windows = derive_charge_windows(state, p.scenarios_[static_cast<std::size_t>(k)].steps, config);
        std::vector<SessionVars> vars;
        vars.reserve(windows.size());
        for (const ScenarioSession& w : windows) {
            SessionVars sv;
            sv.window = w;
            sv.rho = w.start_remaining_kwh;
            sv.z = w.initial_request_kwh;
            vars.push_back(std::move(sv));
            if (w.first_stage) {
                auto& fd = fs_data[static_cast<std::size_t>(w.slot)];
                if (fd.first < 0) fd = {w.start_remaining_kwh, w.initial_request_kwh};
                else if (fd.first != w.start_remaining_kwh || fd.second != w.initial_request_kwh)
                    throw ModelConsistencyError("build_program: first-stage sessions differ across scenarios");
            }
        }
        p.sessions_.push_back(std::move(vars));
    }

    // shared first-stage columns, ordered by slot; only slots active at t0
    // get a t0 variable
    int col = 0;
    for (int i = 0; i < config.n; ++i)
        if (fs_data[static_cast<std::size_t>(i)].first >= 0) p.first_stage_e_[i] = col++;
    if (static_cast<int>(p.first_stage_e_.size()) !=
        static_cast<int>(std::count_if(state.slots.begin(), state.slots.end(),
                                       [](const SlotState& s) { return s.active; })))
        throw ModelConsistencyError("build_program: scenario marks active a slot the state disagrees on");
    // later-stage e columns per scenario/session/step
    for (int k = 0; k < K; ++k) {
        for (SessionVars& sv : p.sessions_[static_cast<std::size_t>(k)]) {
            sv.e_cols.clear();
            for (StepIndex tau = sv.window.charge_begin; tau <= sv.window.charge_end; ++tau) {
                if (tau == p.t0_) sv.e_cols.push_back(p.first_stage_e_.at(sv.window.slot));
                else sv.e_cols.push_back(col++);
                ++p.num_e_;
            }
        }
    }
    // spec counts e variables per (scenario, window, step); the shared t0
    // column is one variable even with several scenarios
    p.num_e_ -= (K - 1) * static_cast<int>(p.first_stage_e_.size());

    // binaries: one shared at t0, one per scenario and later step
    if (p.big_m_ > 1e-12) {
        p.b_shared_col_ = col++;
        ++p.num_b_;
        for (int k = 0; k < K; ++k) {
            std::vector<int> cols(static_cast<std::size_t>(R), -1);
            for (int j = 1; j <= R; ++j) {
                cols[static_cast<std::size_t>(j - 1)] = col++;
                ++p.num_b_;
            }
            p.b_cols_.push_back(std::move(cols));
        }
    } else {
        p.b_cols_.assign(static_cast<std::size_t>(K), std::vector<int>(static_cast<std::size_t>(R), -1));
    }

    // r variables exist per window step in the full formulation
    for (int k = 0; k < K; ++k)
        for (const SessionVars& sv : p.sessions_[static_cast<std::size_t>(k)])
            p.num_r_ += static_cast<int>(sv.window.charge_end - sv.window.charge_begin + 1);

    // unserved remainders persist in the state, so a window's
    // dissatisfaction runs through the rest of the horizon; stopping it at
    // the slot's next sampled session would let a forecast arrival forgive
    // the previous customer's unserved energy
    const StepIndex hor_end = p.t0_ + p.horizon_;
    for (int k = 0; k < K; ++k)
        for (auto& sv : p.sessions_[static_cast<std::size_t>(k)]) sv.dissat_end = hor_end;
    return p;
}

MilpProblem StochasticProgram::reduced_milp() const {
    MilpProblem mp;
    LpProblem& lp = mp.lp;
    const int K = static_cast<int>(scenarios_.size());
    const int R = horizon_;

    int max_col = static_cast<int>(first_stage_e_.size());
    for (const auto& scen : sessions_)
        for (const auto& sv : scen)
            for (int c : sv.e_cols) max_col = std::max(max_col, c + 1);
    if (b_shared_col_ >= 0) {
        max_col = std::max(max_col, b_shared_col_ + 1);
        for (const auto& cols : b_cols_)
            for (int c : cols) max_col = std::max(max_col, c + 1);
    }

    lp.num_cols = max_col;
    lp.obj.assign(static_cast<std::size_t>(max_col), 0.0);
    lp.lower.assign(static_cast<std::size_t>(max_col), 0.0);
    lp.upper.assign(static_cast<std::size_t>(max_col), config_.e_max);

    if (b_shared_col_ >= 0) {
        lp.upper[static_cast<std::size_t>(b_shared_col_)] = 1.0;
        mp.binary_cols.push_back(b_shared_col_);
        for (const auto& cols : b_cols_)
            for (int c : cols)
                if (c >= 0) {
                    lp.upper[static_cast<std::size_t>(c)] = 1.0;
                    mp.binary_cols.push_back(c);
                }
    }

    const double eta = config_.eta;
    const double alpha = config_.alpha;

    // objective + session cumulative-energy caps; per-step loads collected
    // for the threshold rows
    std::vector<std::vector<std::vector<int>>> load_cols(
        static_cast<std::size_t>(K), std::vector<std::vector<int>>(static_cast<std::size_t>(R) + 1));
    for (int k = 0; k < K; ++k) {
        const double pi = scenarios_[static_cast<std::size_t>(k)].weight;
        for (const SessionVars& sv : sessions_[static_cast<std::size_t>(k)]) {
            const bool degenerate = sv.z < kDegenerateZ;
            LpProblem::Row cap;
            for (std::size_t idx = 0; idx < sv.e_cols.size(); ++idx) {
                const StepIndex tau = sv.window.charge_begin + static_cast<StepIndex>(idx);
                const int c = sv.e_cols[idx];
                load_cols[static_cast<std::size_t>(k)][static_cast<std::size_t>(tau - t0_)].push_back(c);
                double coeff = pi * config_.price_at(tau);
                if (!degenerate) {
                    const double steps_counting = static_cast<double>(sv.dissat_end - tau + 1);
                    coeff -= pi * alpha * eta * steps_counting / sv.z;
                }
                lp.obj[static_cast<std::size_t>(c)] += coeff;
                cap.coeffs.push_back({c, eta});
            }
            if (!degenerate) {
                const double steps = static_cast<double>(sv.dissat_end - sv.window.charge_begin + 1);
                lp.obj_offset += pi * alpha * steps * sv.rho / sv.z;
            }
            cap.sense = RowSense::LessEqual;
            cap.rhs = sv.rho;
            lp.rows.push_back(std::move(cap));
        }
        for (int j = 0; j <= R; ++j)
            lp.obj_offset += pi * config_.price_at(t0_ + j) *
                             uncontrollable_[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
    }

    // grid threshold rows
    if (b_shared_col_ >= 0) {
        lp.obj[static_cast<std::size_t>(b_shared_col_)] = config_.xi;  // weights sum to 1
        {
            LpProblem::Row row;
            for (int c : load_cols[0][0]) row.coeffs.push_back({c, 1.0});
            row.coeffs.push_back({b_shared_col_, -big_m_});
            row.sense = RowSense::LessEqual;
            row.rhs = config_.c_max - uncontrollable_[0][0];
            lp.rows.push_back(std::move(row));
        }
        for (int k = 0; k < K; ++k) {
            const double pi = scenarios_[static_cast<std::size_t>(k)].weight;
            for (int j = 1; j <= R; ++j) {
                const int bc = b_cols_[static_cast<std::size_t>(k)][static_cast<std::size_t>(j - 1)];
                lp.obj[static_cast<std::size_t>(bc)] = pi * config_.xi;
                LpProblem::Row row;
                for (int c : load_cols[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)])
                    row.coeffs.push_back({c, 1.0});
                row.coeffs.push_back({bc, -big_m_});
                row.sense = RowSense::LessEqual;
                row.rhs = config_.c_max - uncontrollable_[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
                lp.rows.push_back(std::move(row));
            }
        }
    }
    return mp;
}

MilpProblem StochasticProgram::full_milp(std::vector<std::string>* col_names) const {
    MilpProblem mp;
    LpProblem& lp = mp.lp;
    const int K = static_cast<int>(scenarios_.size());
    const int R = horizon_;
    const double eta = config_.eta;

    std::vector<std::string> names;
    auto name_of = [&](const std::string& kind, int k, int slot, StepIndex tau) {
        std::ostringstream os;
        os << kind << "_k" << k << "_s" << slot << "_t" << (tau - t0_);
        return os.str();
    };

    // e columns first (shared layout), then r, then b
    int ecols = static_cast<int>(first_stage_e_.size());
    for (const auto& scen : sessions_)
        for (const auto& sv : scen)
            for (int c : sv.e_cols) ecols = std::max(ecols, c + 1);
    for (int c = 0; c < ecols; ++c) {
        lp.add_col(0.0, 0.0, config_.e_max);
        names.push_back("e_" + std::to_string(c));
    }
    for (const auto& [slot, c] : first_stage_e_)
        names[static_cast<std::size_t>(c)] = name_of("e_fs", 0, slot, t0_);

    std::vector<std::vector<std::vector<int>>> load_cols(
        static_cast<std::size_t>(K), std::vector<std::vector<int>>(static_cast<std::size_t>(R) + 1));

    for (int k = 0; k < K; ++k) {
        const double pi = scenarios_[static_cast<std::size_t>(k)].weight;
        for (const SessionVars& sv : sessions_[static_cast<std::size_t>(k)]) {
            const bool degenerate = sv.z < kDegenerateZ;
            int prev_r = -1;
            for (std::size_t idx = 0; idx < sv.e_cols.size(); ++idx) {
                const StepIndex tau = sv.window.charge_begin + static_cast<StepIndex>(idx);
                const int ec = sv.e_cols[idx];
                load_cols[static_cast<std::size_t>(k)][static_cast<std::size_t>(tau - t0_)].push_back(ec);
                lp.obj[static_cast<std::size_t>(ec)] += pi * config_.price_at(tau);
                // r variable holding the post-charge remaining at tau; the
                // final one also pays for the frozen remainder after the end
                const double extra = tau == sv.window.charge_end
                                         ? static_cast<double>(sv.dissat_end - sv.window.charge_end)
                                         : 0.0;
                const int rc = lp.add_col(
                    degenerate ? 0.0 : pi * config_.alpha * (1.0 + extra) / sv.z, 0.0, kLpInf);
                names.push_back(name_of("r", k, sv.window.slot, tau));
                LpProblem::Row prop;
                prop.coeffs.push_back({rc, 1.0});
                prop.coeffs.push_back({ec, eta});
                if (prev_r >= 0) {
                    prop.coeffs.push_back({prev_r, -1.0});
                    prop.rhs = 0.0;
                } else {
                    prop.rhs = sv.rho;
                }
                prop.sense = RowSense::Equal;
                lp.rows.push_back(std::move(prop));
                prev_r = rc;
            }
        }
        for (int j = 0; j <= R; ++j)
            lp.obj_offset += pi * config_.price_at(t0_ + j) *
                             uncontrollable_[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
    }

    if (b_shared_col_ >= 0) {
        const int b0 = lp.add_col(config_.xi, 0.0, 1.0);
        names.push_back(name_of("b", 0, -1, t0_));
        mp.binary_cols.push_back(b0);
        LpProblem::Row row;
        for (int c : load_cols[0][0]) row.coeffs.push_back({c, 1.0});
        row.coeffs.push_back({b0, -big_m_});
        row.sense = RowSense::LessEqual;
        row.rhs = config_.c_max - uncontrollable_[0][0];
        lp.rows.push_back(std::move(row));
        for (int k = 0; k < K; ++k) {
            const double pi = scenarios_[static_cast<std::size_t>(k)].weight;
            for (int j = 1; j <= R; ++j) {
                const int bc = lp.add_col(pi * config_.xi, 0.0, 1.0);
                names.push_back(name_of("b", k, -1, t0_ + j));
                mp.binary_cols.push_back(bc);
                LpProblem::Row trow;
                for (int c : load_cols[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)])
                    trow.coeffs.push_back({c, 1.0});
                trow.coeffs.push_back({bc, -big_m_});
                trow.sense = RowSense::LessEqual;
                trow.rhs = config_.c_max - uncontrollable_[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
                lp.rows.push_back(std::move(trow));
            }
        }
    }
    if (col_names) *col_names = std::move(names);
    return mp;
}

std::string StochasticProgram::dump_lp() const {
    std::vector<std::string> names;
    MilpProblem mp = full_milp(&names);
    return write_lp_format(mp.lp, mp.binary_cols, names, "evcs deterministic equivalent");
}

SolverSolution solve(const StochasticProgram& program, const SolveOptions& opts) {
    MilpProblem mp = program.reduced_milp();
    MilpOptions mo;
    mo.node_budget = opts.node_budget;
    mo.rel_gap = opts.rel_gap;
    MilpSolution ms = milp_solve(mp, mo);
    SolverSolution out;
    out.status = ms.status;
    out.x = std::move(ms.x);
    out.objective = ms.obj;
    out.gap = ms.rel_gap;
    out.nodes = ms.nodes;
    out.lp_iterations = ms.lp_iterations;
    return out;
}

ControlAction extract_first_stage(const StochasticProgram& program, const SolverSolution& solution,
                                  const StationState& true_state, const StationConfig& config) {
    ControlAction action = ControlAction::zeros(config.n);
    if (solution.x.empty()) return action;
    for (const auto& [slot, col] : program.first_stage_cols()) {
        const SlotState& s = true_state.slots[static_cast<std::size_t>(slot)];
        if (!s.active) continue;  // defensive: scenario/state drift
        double e = solution.x[static_cast<std::size_t>(col)];
        e = std::max(0.0, std::min(e, config.e_max));
        e = std::min(e, s.remaining_kwh / config.eta);
        action.energy_kwh[static_cast<std::size_t>(slot)] = e;
    }
    return action;
}

} // namespace evcs
