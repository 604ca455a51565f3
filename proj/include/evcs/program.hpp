// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "evcs/core.hpp"
#include "evcs/milp.hpp"
#include "evcs/scenario.hpp"

namespace evcs {

/// Deterministic-equivalent program over a weighted scenario set. The first
/// stage (step t0) is a single shared variable per slot regardless of the
/// scenario count, which realizes nonanticipativity structurally.
///
/// Formulation per scenario k and charge window j:
///   e^{k,j}_tau in [0, e_max]                     (charge variables)
///   r^{k,j}_tau >= 0 with r_{tau+1} = r_tau - eta e_tau, r entering = rho_j
///   sum_i e + uncontrollable <= c_max + M b^k_tau (overrun indicators)
/// objective: sum_k pi_k sum_tau [ p_tau sum e + xi b + alpha sum r/z ],
/// where the per-step dissatisfaction uses the post-charge remaining energy,
/// matching the simulator's charge -> cost ordering. Remaining energy is
/// part of the station state and survives the session end, so a window's
/// unserved remainder keeps contributing r/z per step through the rest of
/// the horizon; this is what makes serving a session that may disconnect
/// early urgent for the controller. Sessions with z below 1e-6 kWh are kept
/// feasible but excluded from the dissatisfaction term.
class StochasticProgram {
public:
    struct SessionVars {
        ScenarioSession window;
        std::vector<int> e_cols;  // one per step in [charge_begin, charge_end]
        double rho = 0.0;
        double z = 0.0;
        // last step whose dissatisfaction this window pays for; unserved
        // remainders keep counting through the horizon
        StepIndex dissat_end = 0;
    };

    static StochasticProgram build(const StationState& state, std::vector<Scenario> scenarios,
                                   const StationConfig& config,
                                   std::vector<std::vector<double>> uncontrollable_per_step = {});

    // counts of the full formulation (continuous vars e/r, binaries b)
    int num_e_vars() const { return num_e_; }
    int num_r_vars() const { return num_r_; }
    int num_b_vars() const { return num_b_; }
    int num_propagation_rows() const { return num_r_; }
    double big_m() const { return big_m_; }
    StepIndex t0() const { return t0_; }
    int horizon() const { return horizon_; }
    const std::vector<Scenario>& scenarios() const { return scenarios_; }
    const std::vector<std::vector<SessionVars>>& sessions() const { return sessions_; }
    const std::map<int, int>& first_stage_cols() const { return first_stage_e_; }

    /// MILP actually handed to the solver: r eliminated through the
    /// propagation equalities (each window contributes one cumulative-energy
    /// cap row), objective constants folded into the offset. Equivalent to
    /// the full formulation; the equivalence is covered by tests.
    MilpProblem reduced_milp() const;

    /// Full formulation with explicit r variables and propagation rows, for
    /// text dumps and cross-checks.
    MilpProblem full_milp(std::vector<std::string>* col_names = nullptr) const;

    /// CPLEX LP text of the full formulation.
    std::string dump_lp() const;

private:
    StationConfig config_;
    StepIndex t0_ = 0;
    int horizon_ = 0;
    std::vector<Scenario> scenarios_;
    std::vector<std::vector<double>> uncontrollable_;  // [scenario][step] totals
    std::vector<std::vector<SessionVars>> sessions_;   // [scenario][window]
    std::map<int, int> first_stage_e_;                 // slot -> e column
    int num_e_ = 0;
    int num_r_ = 0;
    int num_b_ = 0;
    int b_shared_col_ = -1;                 // b at t0 (reduced column space)
    std::vector<std::vector<int>> b_cols_;  // [scenario][step-1] for tau > t0
    double big_m_ = 0.0;
};

struct SolveOptions {
    long node_budget = 10000;
    double rel_gap = 1e-6;
};

struct SolverSolution {
    MilpStatus status = MilpStatus::Infeasible;
    std::vector<double> x;  // reduced-form assignment (e columns then b)
    double objective = 0.0;
    double gap = 0.0;
    long nodes = 0;
    long lp_iterations = 0;
};

/// Branch-and-bound solve of the reduced equivalent. A valid build always
/// has the zero action feasible, so an infeasible status signals a bug.
SolverSolution solve(const StochasticProgram& program, const SolveOptions& opts = {});

/// Shared t0 charges, defensively clamped against the true state: zero on
/// slots the state marks inactive, bounded by e_max and remaining/eta.
ControlAction extract_first_stage(const StochasticProgram& program, const SolverSolution& solution,
                                  const StationState& true_state, const StationConfig& config);

} // namespace evcs
