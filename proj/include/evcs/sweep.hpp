// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "evcs/config.hpp"
#include "evcs/sim.hpp"

namespace evcs {

struct SweepCell {
    std::string policy;
    double alpha = 0.0;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    MetricsSummary metrics;
    RunTotals totals;
    RunResult run;  // kept for report emission
};

struct SweepResult {
    std::vector<SweepCell> cells;  // canonical order: policy, alpha, seed
};

/// Inputs resolved before the sweep starts. test_trace_for(seed) lets
/// synthetic experiments draw one world per seed while file-based runs
/// return the same trace for every seed.
struct SweepPlan {
    ExperimentConfig config;
    std::shared_ptr<const UserBehaviorModel> model;          // for 2s / mpc
    std::shared_ptr<const DiscretizedTrace> train_trace;     // for rmpc tables
    std::function<DiscretizedTrace(std::uint64_t)> test_trace_for;
};

/// Cross product policies x alphas x seeds, cells run concurrently. A cell
/// failure is recorded and the sweep continues.
SweepResult run_sweep(const SweepPlan& plan);

/// Writes the machine-readable tables (cells, per-policy summary, frontier
/// data, unserved-energy distributions, optional per-step logs) and the
/// human-readable table. Only sweep_table.txt carries a timestamp line;
/// every file carries the config hash.
void emit_reports(const SweepResult& result, const ExperimentConfig& config,
                  const std::string& dir);

} // namespace evcs
