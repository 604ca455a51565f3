// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "evcs/core.hpp"

namespace evcs {

/// One charging session as it appears in a discretized trace. The end step
/// is where the end is applied: the earlier of actual disconnection and
/// announced elapse, clamped to the trace.
struct TraceSessionRecord {
    int slot = -1;
    StepIndex start_step = 0;  // step carrying the start event
    StepIndex end_step = 0;    // last chargeable step of the session
    double request_kwh = 0.0;
    int announced_steps = 0;
};

/// Fixed-interval exogenous inputs for the whole station, plus the session
/// records used for metrics joins.
struct DiscretizedTrace {
    StepIndex start_step = 0;  // absolute step index of steps[0]
    int dt_minutes = 15;
    int n = 0;
    std::vector<std::string> slot_names;
    std::vector<ExogenousInput> steps;
    std::vector<TraceSessionRecord> sessions;

    StepIndex end_step() const { return start_step + static_cast<StepIndex>(steps.size()); }

    const ExogenousInput& at(StepIndex t) const {
        return steps[static_cast<std::size_t>(t - start_step)];
    }
};

/// Scans the event stream and rebuilds the session records (start, effective
/// end incl. announced elapse, request). Sessions still open at the end of
/// the trace are closed at its final step.
std::vector<TraceSessionRecord> derive_sessions(const DiscretizedTrace& trace);

/// Canonical line-delimited trace file (versioned). Events only; session
/// records are rebuilt on load.
void save_trace(const DiscretizedTrace& trace, const std::string& path);
DiscretizedTrace load_trace(const std::string& path);

} // namespace evcs
