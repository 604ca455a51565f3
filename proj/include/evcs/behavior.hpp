// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "evcs/core.hpp"
#include "evcs/trace.hpp"

namespace evcs {

/// Conditioning features of the switching process: previous activation
/// state, sojourn time, time of day/week and the slot index.
struct TransitionContext {
    bool prev_active = false;
    std::int64_t sojourn_steps = 0;
    int hour_of_day = 0;  // 0..23
    int weekday = 0;      // 0..6, Monday = 0
    int slot_index = 0;
};

TransitionContext featurize(const StationState& state, int slot_index, EpochSeconds clock);

struct BinningConfig {
    std::vector<int> sojourn_bin_edges = {0, 1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 96};
    double laplace_alpha = 1.0;
    std::int64_t backoff_min_count = 30;

    void validate() const;
    int bin_of(std::int64_t sojourn) const;  // index of the containing bin
};

/// Interface consumed by the scenario engine: session-start and session-end
/// switch probabilities plus the deterministic kWh request function.
/// Implementations must be immutable after construction and safe to read
/// from any number of threads.
class UserBehaviorModel {
public:
    virtual ~UserBehaviorModel() = default;
    /// P(activate at the next step | ctx); requires ctx.prev_active == false.
    virtual double p_start(const TransitionContext& ctx) const = 0;
    /// P(deactivate at the next step | ctx); requires ctx.prev_active == true.
    virtual double p_end(const TransitionContext& ctx) const = 0;
    /// Energy request attached to an activation in this context, kWh > 0.
    virtual double predict_kwh(const TransitionContext& ctx) const = 0;
};

/// Reference learner: binned conditional frequencies with Laplace smoothing
/// and hierarchical backoff (drop slot, then weekday, then hour, then the
/// sojourn bin). Boosted learners can replace it behind UserBehaviorModel
/// without API change.
class BinnedBehaviorModel : public UserBehaviorModel {
public:
    struct Cell {
        std::int64_t observations = 0;
        std::int64_t switches = 0;
        double kwh_sum = 0.0;
        std::int64_t kwh_count = 0;

        bool operator==(const Cell&) const = default;
    };

    /// Fits from a discretized trace by replaying the station dynamics with
    /// zero actions. Throws on an empty trace or a trace with no sessions.
    static BinnedBehaviorModel fit(const DiscretizedTrace& trace, const BinningConfig& config);

    double p_start(const TransitionContext& ctx) const override;
    double p_end(const TransitionContext& ctx) const override;
    double predict_kwh(const TransitionContext& ctx) const override;

    void save(const std::string& path) const;
    static BinnedBehaviorModel load(const std::string& path);

    const BinningConfig& config() const { return config_; }
    StepIndex trained_from() const { return trained_from_; }
    StepIndex trained_to() const { return trained_to_; }

    bool operator==(const BinnedBehaviorModel& o) const {
        return cells_ == o.cells_ && config_.sojourn_bin_edges == o.config_.sojourn_bin_edges &&
               config_.laplace_alpha == o.config_.laplace_alpha &&
               config_.backoff_min_count == o.config_.backoff_min_count &&
               trained_from_ == o.trained_from_ && trained_to_ == o.trained_to_;
    }

private:
    // full-resolution key: (y, sojourn bin, hour, weekday, slot)
    using Key = std::uint64_t;
    static Key make_key(bool y, int bin, int hour, int weekday, int slot);

    struct Levels {
        // aggregates with progressively dropped fields; [0] full resolution,
        // [4] per-y global
        std::array<std::map<Key, Cell>, 5> maps;
    };

    const Cell* lookup(bool y, int bin, int hour, int weekday, int slot, bool for_kwh) const;
    double switch_probability(const TransitionContext& ctx) const;
    void rebuild_aggregates();

    BinningConfig config_;
    std::map<Key, Cell> cells_;  // level 0, the serialized truth
    Levels levels_;              // derived
    StepIndex trained_from_ = 0;
    StepIndex trained_to_ = 0;
};

} // namespace evcs
