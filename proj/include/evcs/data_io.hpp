// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "evcs/core.hpp"
#include "evcs/trace.hpp"

namespace evcs {

/// One raw charging session as found in a dataset export.
struct RawSession {
    std::string slot_id;
    EpochSeconds connection_time = 0;
    EpochSeconds disconnection_time = 0;
    double kwh = 0.0;
    std::optional<int> announced_minutes;
};

struct ParseReport {
    std::size_t total_rows = 0;
    std::size_t rejected_rows = 0;
    std::vector<std::string> errors;  // "row N: reason"
};

/// Reads a session file. Formats: "csv" (documented delimited schema with a
/// header: slot_id, connection_time, disconnection_time, kwh,
/// announced_minutes), "acn-json" (record schema mirroring the public ACN
/// export field names), or "auto" (by file extension). Rows violating the
/// schema are collected in the report; more than 1% malformed rows is a hard
/// failure. Output is sorted by (connection_time, slot_id).
std::vector<RawSession> parse_sessions(const std::string& path, const std::string& format = "auto",
                                       ParseReport* report = nullptr);

void write_sessions_csv(const std::vector<RawSession>& sessions, const std::string& path);

struct DiscretizeReport {
    std::size_t overlap_truncations = 0;
    std::size_t dropped_sessions = 0;
};

/// Fixed-interval discretization. Connections snap to the containing step;
/// the end event is placed at min(actual disconnection step, connection step
/// + announced steps). Overlapping sessions on one slot truncate the earlier
/// session at the later's start. n = 0 infers the slot count from the data.
DiscretizedTrace discretize(const std::vector<RawSession>& sessions, int dt_minutes, int n = 0,
                            DiscretizeReport* report = nullptr);

/// Caps every request at what the announced window can physically deliver
/// (delta * e_max * eta); sessions rounding to nothing are dropped.
DiscretizedTrace preprocess_requests(const DiscretizedTrace& trace, const StationConfig& config,
                                     std::size_t* dropped = nullptr);

/// Chronological split; a session belongs to the side containing its start.
std::pair<DiscretizedTrace, DiscretizedTrace> split(const DiscretizedTrace& trace,
                                                    EpochSeconds boundary);

} // namespace evcs
