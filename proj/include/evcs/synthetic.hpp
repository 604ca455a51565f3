// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "evcs/behavior.hpp"
#include "evcs/data_io.hpp"

namespace evcs {

/// Ground-truth process for synthetic datasets: hour-dependent arrivals,
/// sojourn-bin-dependent session ends, uniform requests, plus optional early
/// disconnections (actual < announced) and idle time (parked past the
/// announced end).
struct SyntheticConfig {
    int n = 5;
    int days = 7;
    int dt_minutes = 15;
    EpochSeconds start_epoch = 1704067200;  // 2024-01-01 00:00 UTC, a Monday

    std::vector<double> arrival_hazard_by_hour = std::vector<double>(24, 0.05);
    std::vector<int> duration_bin_edges = {0, 4, 8, 16};  // sojourn bins
    std::vector<double> end_hazard_by_bin = {0.0, 0.1, 0.3, 1.0};

    double kwh_min = 8.0;
    double kwh_max = 20.0;
    double early_disconnect_prob = 0.0;
    double early_fraction_min = 0.4;  // actual/announced when early
    double early_fraction_max = 0.7;
    double idle_prob = 0.0;  // stays parked past the announced end
    int idle_extra_steps_max = 8;

    void validate() const;
    int bin_of(std::int64_t sojourn) const;
    StepIndex start_step() const {
        return start_epoch / (static_cast<std::int64_t>(dt_minutes) * 60);
    }
    StepIndex total_steps() const { return static_cast<StepIndex>(days) * 24 * 60 / dt_minutes; }
};

/// Oracle behavior model reading the ground-truth hazards directly; used for
/// estimator-convergence and policy-collapse checks.
class SyntheticOracleModel : public UserBehaviorModel {
public:
    explicit SyntheticOracleModel(SyntheticConfig config) : cfg_(std::move(config)) {}
    double p_start(const TransitionContext& ctx) const override {
        return cfg_.arrival_hazard_by_hour[static_cast<std::size_t>(ctx.hour_of_day)];
    }
    double p_end(const TransitionContext& ctx) const override {
        return cfg_.end_hazard_by_bin[static_cast<std::size_t>(cfg_.bin_of(ctx.sojourn_steps))];
    }
    double predict_kwh(const TransitionContext&) const override {
        return 0.5 * (cfg_.kwh_min + cfg_.kwh_max);
    }

private:
    SyntheticConfig cfg_;
};

/// Draws sessions from the configured process. Deterministic given the seed.
std::vector<RawSession> generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

} // namespace evcs
