// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "evcs/lp.hpp"

namespace evcs {

struct MilpProblem {
    LpProblem lp;
    std::vector<int> binary_cols;  // columns restricted to {0,1}
};

enum class MilpStatus { Optimal, NodeBudgetExhausted, Infeasible };

struct MilpOptions {
    long node_budget = 10000;
    double rel_gap = 1e-6;
    long lp_max_iterations = 0;
};

struct MilpSolution {
    MilpStatus status = MilpStatus::Infeasible;
    std::vector<double> x;
    double obj = 0.0;
    double best_bound = 0.0;
    double rel_gap = 0.0;
    long nodes = 0;
    long lp_iterations = 0;
};

/// Best-first branch and bound over the binary columns on top of lp_solve.
/// Branching on the most fractional binary; incumbents from rounding
/// fractional binaries up (validated against the constraints before being
/// accepted, so the heuristic is safe on any model). Deterministic: ties are
/// resolved by node id.
MilpSolution milp_solve(const MilpProblem& p, const MilpOptions& opts = {});

} // namespace evcs
