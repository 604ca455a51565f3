// SPDX-License-Identifier: Apache-2.0
#include "evcs/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "evcs/errors.hpp"
#include "evcs/rng.hpp"

namespace evcs {

void SyntheticConfig::validate() const {
    if (n < 1 || days < 1) throw ConfigError("synthetic: n and days must be >= 1");
    if (dt_minutes <= 0 || 60 % dt_minutes != 0) throw ConfigError("synthetic: dt must divide 60");
    if (arrival_hazard_by_hour.size() != 24)
        throw ConfigError("synthetic: arrival_hazard_by_hour needs 24 entries");
    if (duration_bin_edges.empty() || duration_bin_edges.front() != 0)
        throw ConfigError("synthetic: duration_bin_edges must start at 0");
    if (end_hazard_by_bin.size() != duration_bin_edges.size())
        throw ConfigError("synthetic: end_hazard_by_bin must match duration_bin_edges");
    for (double h : arrival_hazard_by_hour)
        if (h < 0 || h > 1) throw ConfigError("synthetic: arrival hazards must be in [0,1]");
    for (double h : end_hazard_by_bin)
        if (h < 0 || h > 1) throw ConfigError("synthetic: end hazards must be in [0,1]");
    if (!(kwh_min > 0) || kwh_max < kwh_min) throw ConfigError("synthetic: bad kwh range");
    if (early_disconnect_prob < 0 || early_disconnect_prob > 1)
        throw ConfigError("synthetic: bad early_disconnect_prob");
    if (!(early_fraction_min > 0) || early_fraction_max < early_fraction_min ||
        early_fraction_max > 1)
        throw ConfigError("synthetic: bad early fraction range");
}

int SyntheticConfig::bin_of(std::int64_t sojourn) const {
    int bin = 0;
    for (std::size_t i = 1; i < duration_bin_edges.size(); ++i) {
        if (sojourn >= duration_bin_edges[i]) bin = static_cast<int>(i);
        else break;
    }
    return bin;
}

std::vector<RawSession> generate_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
    config.validate();
    const std::int64_t dt_sec = static_cast<std::int64_t>(config.dt_minutes) * 60;
    const StepIndex first = config.start_step();
    const StepIndex last = first + config.total_steps();  // exclusive

    std::vector<RawSession> out;
    for (int slot = 0; slot < config.n; ++slot) {
        Rng rng(derive_stream(seed, {0x5107u, static_cast<std::uint64_t>(slot)}));
        StepIndex tau = first;
        while (tau < last) {
            // idle walk: arrival event fires at tau with the hour's hazard
            const int hour = hour_of_day(tau * dt_sec);
            if (!rng.bernoulli(config.arrival_hazard_by_hour[static_cast<std::size_t>(hour)])) {
                ++tau;
                continue;
            }
            // announced duration from the sojourn-hazard walk: the end fires
            // at active-sojourn g with hazard(bin(g)), giving d = g + 1 steps
            int announced = 0;
            for (std::int64_t g = 0;; ++g) {
                ++announced;
                if (rng.bernoulli(config.end_hazard_by_bin[static_cast<std::size_t>(config.bin_of(g))]))
                    break;
                if (announced >= 100000)
                    throw ConfigError("synthetic: end hazards never fire; sessions are endless");
            }
            int actual = announced;
            if (rng.bernoulli(config.early_disconnect_prob)) {
                const double frac = rng.uniform(config.early_fraction_min, config.early_fraction_max);
                actual = std::max(1, static_cast<int>(std::lround(frac * announced)));
            }
            int idle_extra = 0;
            if (actual == announced && config.idle_prob > 0 && rng.bernoulli(config.idle_prob))
                idle_extra = static_cast<int>(rng.uniform_index(
                    static_cast<std::uint64_t>(config.idle_extra_steps_max) + 1));

            RawSession s;
            s.slot_id = "SYN-" + std::string(slot < 10 ? "0" : "") + std::to_string(slot);
            s.connection_time = tau * dt_sec;
            s.disconnection_time = (tau + actual + idle_extra) * dt_sec;
            s.kwh = rng.uniform(config.kwh_min, config.kwh_max);
            s.announced_minutes = announced * config.dt_minutes;
            out.push_back(std::move(s));

            // slot frees for the o-process at min(actual, announced); the
            // next physical connection can only happen after the idle EV left
            tau += std::max(actual + idle_extra, std::min(actual, announced)) + 1;
        }
    }
    std::sort(out.begin(), out.end(), [](const RawSession& a, const RawSession& b) {
        if (a.connection_time != b.connection_time) return a.connection_time < b.connection_time;
        return a.slot_id < b.slot_id;
    });
    return out;
}

} // namespace evcs
