// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>

#include "evcs/behavior.hpp"
#include "evcs/core.hpp"
#include "evcs/rng.hpp"

namespace evcs_test {

using namespace evcs;

/// Behavior model with constant hazards; the ground-truth oracle for
/// deterministic-world and distribution tests.
class ConstModel : public UserBehaviorModel {
public:
    ConstModel(double p_start, double p_end, double kwh, int duration_steps = 8)
        : ps_(p_start), pe_(p_end), kwh_(kwh), dur_(duration_steps) {}

    double p_start(const TransitionContext&) const override { return ps_; }
    double p_end(const TransitionContext&) const override { return pe_; }
    double predict_kwh(const TransitionContext&) const override { return kwh_; }
    int announced_steps() const { return dur_; }

private:
    double ps_, pe_, kwh_;
    int dur_;
};

inline StationConfig small_config(int n, double c_max = 7.68, double alpha = 5000.0) {
    StationConfig cfg;
    cfg.n = n;
    cfg.dt_minutes = 15;
    cfg.e_max = 3.0;
    cfg.c_max = c_max;
    cfg.xi = 14.31;
    cfg.eta = 0.91;
    cfg.alpha = alpha;
    cfg.horizon_R = 40;
    cfg.price_schedule = make_price_schedule(15, 0.102, 0.153, {{6, 9}, {11, 13}, {17, 21}});
    cfg.validate();
    return cfg;
}

inline StationState random_state(Rng& rng, const StationConfig& cfg, StepIndex t0,
                                 double p_active = 0.5) {
    StationState st = StationState::empty(cfg, t0);
    for (auto& s : st.slots) {
        if (!rng.bernoulli(p_active)) {
            s.sojourn_steps = static_cast<std::int64_t>(rng.uniform_index(50));
            continue;
        }
        s.active = true;
        s.initial_request_kwh = rng.uniform(1.0, 30.0);
        s.remaining_kwh = s.initial_request_kwh * rng.uniform(0.1, 1.0);
        s.announced_steps_left = 1 + static_cast<int>(rng.uniform_index(30));
        s.sojourn_steps = static_cast<std::int64_t>(rng.uniform_index(20));
    }
    return st;
}

} // namespace evcs_test
