// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>
#include <string>
#include <vector>

namespace evcs {

inline constexpr double kLpInf = std::numeric_limits<double>::infinity();

enum class RowSense : char { LessEqual = 'L', Equal = 'E', GreaterEqual = 'G' };

/// min  obj'x + obj_offset   s.t. rows, bounds.
struct LpProblem {
    int num_cols = 0;
    std::vector<double> obj;
    std::vector<double> lower;  // -inf allowed
    std::vector<double> upper;  // +inf allowed
    double obj_offset = 0.0;

    struct Row {
        std::vector<std::pair<int, double>> coeffs;  // (col, value), cols unique
        RowSense sense = RowSense::LessEqual;
        double rhs = 0.0;
    };
    std::vector<Row> rows;

    int add_col(double cost, double lo, double hi) {
        obj.push_back(cost);
        lower.push_back(lo);
        upper.push_back(hi);
        return num_cols++;
    }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpSolution {
    LpStatus status = LpStatus::IterationLimit;
    std::vector<double> x;
    double obj = 0.0;  // includes obj_offset
    long iterations = 0;
};

struct LpOptions {
    long max_iterations = 0;  // 0 = automatic
    double feas_tol = 1e-9;
    double dual_tol = 1e-9;
};

/// Bounded-variable two-phase revised simplex with a dense basis inverse.
/// Exact on desk-scale programs; refactorizes periodically and verifies the
/// final basic solution against the original data.
LpSolution lp_solve(const LpProblem& p, const LpOptions& opts = {});

/// CPLEX LP interchange text for cross-checking against external solvers.
/// `integer_cols` marks columns listed in the General section.
std::string write_lp_format(const LpProblem& p, const std::vector<int>& integer_cols,
                            const std::vector<std::string>& col_names,
                            const std::string& name = "evcs");

} // namespace evcs
