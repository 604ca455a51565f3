// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

namespace evcs {

/// Mean delivered kWh per (slot, hour of day), used by the request-based
/// controller as an uncontrollable load stand-in for empty slots.
struct AvgLoadTable {
    int n = 0;
    std::vector<double> mean_kwh;  // n * 24, slot-major

    static AvgLoadTable zeros(int n_slots) {
        AvgLoadTable t;
        t.n = n_slots;
        t.mean_kwh.assign(static_cast<std::size_t>(n_slots) * 24, 0.0);
        return t;
    }

    double at(int slot, int hour) const {
        return mean_kwh[static_cast<std::size_t>(slot) * 24 + static_cast<std::size_t>(hour)];
    }
    double& at(int slot, int hour) {
        return mean_kwh[static_cast<std::size_t>(slot) * 24 + static_cast<std::size_t>(hour)];
    }
};

} // namespace evcs
