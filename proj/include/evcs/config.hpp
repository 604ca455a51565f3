// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evcs/behavior.hpp"
#include "evcs/core.hpp"
#include "evcs/program.hpp"
#include "evcs/synthetic.hpp"

namespace evcs {

/// Everything a benchmark run needs, read from one JSON document. Values
/// not present fall back to the defaults below.
struct ExperimentConfig {
    StationConfig station;         // prices built from the price block
    BinningConfig behavior;
    int scenario_K = 20;
    int scenario_K_prime = 2;
    SolveOptions solver;

    std::vector<std::string> sweep_policies = {"2s", "mpc", "rmpc", "pmpc"};
    std::vector<double> sweep_alphas = {500.0, 1000.0, 5000.0, 50000.0};
    std::vector<std::uint64_t> sweep_seeds = {1};
    int sweep_workers = 0;  // 0 = hardware concurrency
    bool emit_step_logs = true;

    SyntheticConfig synthetic;
    bool has_synthetic = false;
    std::uint64_t synthetic_seed = 1;

    std::string train_trace_path;
    std::string test_trace_path;
    std::string model_path;
    std::string split_date;  // ingest boundary, ISO timestamp
    std::string out_dir = "out";

    void validate() const;

    /// Canonical serialization of every semantic field; equal configs hash
    /// equally regardless of the source document's formatting.
    std::string canonical() const;
    std::uint64_t hash() const;  // FNV-1a of canonical()

    static ExperimentConfig from_json_file(const std::string& path);
    static ExperimentConfig from_json_text(const std::string& text);
};

} // namespace evcs
