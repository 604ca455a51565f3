// SPDX-License-Identifier: Apache-2.0
#include "evcs/milp.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace evcs {

namespace {

constexpr double kIntTol = 1e-7;

struct Node {
    double bound = 0.0;
    long id = 0;
    int branch_k = -1;             // fractional binary of this node's LP
    std::vector<signed char> fix;  // per binary: -1 free, 0, 1

    bool operator>(const Node& o) const {
        if (bound != o.bound) return bound > o.bound;
        return id > o.id;
    }
};

bool satisfies_rows(const LpProblem& lp, const std::vector<double>& x, double tol) {
    for (const auto& row : lp.rows) {
        double v = 0.0;
        for (const auto& [j, c] : row.coeffs) v += c * x[static_cast<std::size_t>(j)];
        switch (row.sense) {
            case RowSense::LessEqual:
                if (v > row.rhs + tol) return false;
                break;
            case RowSense::GreaterEqual:
                if (v < row.rhs - tol) return false;
                break;
            case RowSense::Equal:
                if (std::abs(v - row.rhs) > tol) return false;
                break;
        }
    }
    return true;
}

double objective_of(const LpProblem& lp, const std::vector<double>& x) {
    double v = lp.obj_offset;
    for (int j = 0; j < lp.num_cols; ++j) v += lp.obj[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
    return v;
}

} // namespace

MilpSolution milp_solve(const MilpProblem& p, const MilpOptions& opts) {
    MilpSolution out;
    const int nb = static_cast<int>(p.binary_cols.size());
    LpProblem work = p.lp;
    LpOptions lpo;
    lpo.max_iterations = opts.lp_max_iterations;

    auto solve_with = [&](const std::vector<signed char>& fix) -> LpSolution {
        for (int k = 0; k < nb; ++k) {
            const int col = p.binary_cols[static_cast<std::size_t>(k)];
            if (fix[static_cast<std::size_t>(k)] < 0) {
                work.lower[static_cast<std::size_t>(col)] = 0.0;
                work.upper[static_cast<std::size_t>(col)] = 1.0;
            } else {
                work.lower[static_cast<std::size_t>(col)] = fix[static_cast<std::size_t>(k)];
                work.upper[static_cast<std::size_t>(col)] = fix[static_cast<std::size_t>(k)];
            }
        }
        LpSolution s = lp_solve(work, lpo);
        out.lp_iterations += s.iterations;
        return s;
    };

    // most fractional binary; -1 when integral
    auto fractional_bin = [&](const std::vector<double>& x) -> int {
        int best = -1;
        double best_frac = kIntTol;
        for (int k = 0; k < nb; ++k) {
            const double v = x[static_cast<std::size_t>(p.binary_cols[static_cast<std::size_t>(k)])];
            const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
            if (frac > best_frac + 1e-15) { best_frac = frac; best = k; }
        }
        return best;
    };

    bool have_incumbent = false;
    std::vector<double> inc_x;
    double inc_obj = 0.0;

    auto accept_incumbent = [&](const std::vector<double>& x, double obj) {
        if (!have_incumbent || obj < inc_obj) {
            have_incumbent = true;
            inc_obj = obj;
            inc_x = x;
        }
    };

    // round fractional binaries up; valid whenever raising a binary only
    // relaxes constraints, checked explicitly before acceptance
    auto try_round_up = [&](const std::vector<double>& x) {
        std::vector<double> r = x;
        for (int k = 0; k < nb; ++k) {
            double& v = r[static_cast<std::size_t>(p.binary_cols[static_cast<std::size_t>(k)])];
            v = v > kIntTol ? 1.0 : 0.0;
        }
        if (!satisfies_rows(p.lp, r, 1e-7)) return;
        accept_incumbent(r, objective_of(p.lp, r));
    };

    auto cutoff = [&]() {
        return inc_obj - opts.rel_gap * std::max(1e-10, std::abs(inc_obj));
    };

    std::priority_queue<Node, std::vector<Node>, std::greater<Node>> open;
    long next_id = 0;

    {
        Node root;
        root.fix.assign(static_cast<std::size_t>(nb), -1);
        LpSolution lp = solve_with(root.fix);
        ++out.nodes;
        if (lp.status != LpStatus::Optimal) { out.status = MilpStatus::Infeasible; return out; }
        out.best_bound = lp.obj;
        root.branch_k = fractional_bin(lp.x);
        if (root.branch_k < 0) {
            out.status = MilpStatus::Optimal;
            out.x = lp.x;
            out.obj = lp.obj;
            out.rel_gap = 0.0;
            return out;
        }
        try_round_up(lp.x);
        root.bound = lp.obj;
        root.id = next_id++;
        open.push(std::move(root));
    }

    while (!open.empty() && out.nodes < opts.node_budget) {
        Node node = open.top();
        open.pop();
        if (have_incumbent && node.bound >= cutoff()) {
            // best-first order: every remaining node is dominated as well
            while (!open.empty()) open.pop();
            break;
        }

        for (int v = 0; v <= 1; ++v) {
            Node child;
            child.fix = node.fix;
            child.fix[static_cast<std::size_t>(node.branch_k)] = static_cast<signed char>(v);
            LpSolution cl = solve_with(child.fix);
            ++out.nodes;
            if (cl.status != LpStatus::Optimal) continue;  // infeasible branch pruned
            const int ck = fractional_bin(cl.x);
            if (ck < 0) {
                accept_incumbent(cl.x, cl.obj);
                continue;
            }
            if (have_incumbent && cl.obj >= cutoff()) continue;
            try_round_up(cl.x);
            child.bound = cl.obj;
            child.branch_k = ck;
            child.id = next_id++;
            open.push(std::move(child));
        }
    }

    if (!have_incumbent) {
        // exhausted without any integral point: with a node budget left this
        // means genuinely infeasible, otherwise report the budget stop
        out.status = open.empty() ? MilpStatus::Infeasible : MilpStatus::NodeBudgetExhausted;
        return out;
    }
    double bound = inc_obj;
    if (!open.empty()) bound = std::min(bound, open.top().bound);
    out.best_bound = bound;
    out.x = inc_x;
    out.obj = inc_obj;
    out.rel_gap = std::max(0.0, (inc_obj - bound) / std::max(1e-10, std::abs(inc_obj)));
    out.status = open.empty() || out.rel_gap <= opts.rel_gap ? MilpStatus::Optimal
                                                             : MilpStatus::NodeBudgetExhausted;
    return out;
}

} // namespace evcs
