// SPDX-License-Identifier: Apache-2.0
#include "evcs/trace.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "evcs/errors.hpp"

namespace evcs {

namespace {

// minimal valid config for replaying a trace's state transitions
StationConfig replay_config(const DiscretizedTrace& trace) {
    StationConfig cfg;
    cfg.n = trace.n;
    cfg.dt_minutes = trace.dt_minutes;
    cfg.e_max = 1.0;
    cfg.c_max = 1.0;
    cfg.xi = 1.0;
    cfg.eta = 1.0;
    cfg.alpha = 1.0;
    cfg.horizon_R = 1;
    cfg.price_schedule.assign(static_cast<std::size_t>(cfg.steps_per_day()), 0.0);
    return cfg;
}

} // namespace

std::vector<TraceSessionRecord> derive_sessions(const DiscretizedTrace& trace) {
    std::vector<TraceSessionRecord> out;
    if (trace.steps.empty()) return out;
    const StationConfig cfg = replay_config(trace);
    StationState state = StationState::empty(cfg, trace.start_step);
    const ControlAction zero = ControlAction::zeros(cfg.n);

    std::vector<TraceSessionRecord> open(static_cast<std::size_t>(trace.n));
    std::vector<bool> has_open(static_cast<std::size_t>(trace.n), false);

    for (const ExogenousInput& w : trace.steps) {
        StepResult r = step(state, zero, w, cfg);
        for (const SessionEndRecord& e : r.ended_sessions) {
            TraceSessionRecord& s = open[static_cast<std::size_t>(e.slot)];
            s.end_step = e.t;
            out.push_back(s);
            has_open[static_cast<std::size_t>(e.slot)] = false;
        }
        for (int i = 0; i < trace.n; ++i) {
            const SlotEvent& ev = w.events[static_cast<std::size_t>(i)];
            if (!ev.start) continue;
            open[static_cast<std::size_t>(i)] =
                TraceSessionRecord{i, w.t, 0, ev.request_kwh, ev.announced_duration_steps};
            has_open[static_cast<std::size_t>(i)] = true;
        }
        state = std::move(r.state);
    }
    // sessions still active at trace end are closed at the final step
    const StepIndex last = trace.end_step() - 1;
    for (int i = 0; i < trace.n; ++i) {
        if (!has_open[static_cast<std::size_t>(i)]) continue;
        TraceSessionRecord s = open[static_cast<std::size_t>(i)];
        s.end_step = last;
        out.push_back(s);
    }
    std::sort(out.begin(), out.end(), [](const TraceSessionRecord& a, const TraceSessionRecord& b) {
        if (a.start_step != b.start_step) return a.start_step < b.start_step;
        return a.slot < b.slot;
    });
    return out;
}

void save_trace(const DiscretizedTrace& trace, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ParseError("cannot write trace file: " + path);
    os << "evcs-trace v1\n";
    os << "n " << trace.n << "\n";
    os << "dt_minutes " << trace.dt_minutes << "\n";
    os << "start_step " << trace.start_step << "\n";
    os << "steps " << trace.steps.size() << "\n";
    for (int i = 0; i < trace.n; ++i)
        os << "slot " << i << " "
           << (i < static_cast<int>(trace.slot_names.size()) ? trace.slot_names[static_cast<std::size_t>(i)]
                                                             : "s" + std::to_string(i))
           << "\n";
    char buf[64];
    for (const ExogenousInput& w : trace.steps) {
        for (int i = 0; i < trace.n; ++i) {
            const SlotEvent& ev = w.events[static_cast<std::size_t>(i)];
            if (!ev.start && !ev.end) continue;
            std::snprintf(buf, sizeof buf, "%.17g", ev.request_kwh);
            os << "e " << w.t << " " << i << " " << (ev.start ? 1 : 0) << " " << (ev.end ? 1 : 0)
               << " " << buf << " " << ev.announced_duration_steps << "\n";
        }
    }
    os << "end\n";
}

DiscretizedTrace load_trace(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open trace file: " + path);
    std::string header;
    std::getline(is, header);
    if (header != "evcs-trace v1") throw ParseError("unsupported trace file version: " + header);

    DiscretizedTrace tr;
    std::size_t num_steps = 0;
    std::string tag;
    while (is >> tag) {
        if (tag == "n") is >> tr.n;
        else if (tag == "dt_minutes") is >> tr.dt_minutes;
        else if (tag == "start_step") is >> tr.start_step;
        else if (tag == "steps") is >> num_steps;
        else if (tag == "slot") {
            int idx; std::string name;
            is >> idx >> name;
            if (idx >= 0) {
                if (tr.slot_names.size() <= static_cast<std::size_t>(idx))
                    tr.slot_names.resize(static_cast<std::size_t>(idx) + 1);
                tr.slot_names[static_cast<std::size_t>(idx)] = name;
            }
        } else if (tag == "e") {
            if (tr.steps.empty()) {
                tr.steps.reserve(num_steps);
                for (std::size_t s = 0; s < num_steps; ++s)
                    tr.steps.push_back(ExogenousInput::empty(tr.n, tr.start_step + static_cast<StepIndex>(s)));
            }
            StepIndex t; int slot, a, q, delta; double k;
            is >> t >> slot >> a >> q >> k >> delta;
            const StepIndex off = t - tr.start_step;
            if (off < 0 || off >= static_cast<StepIndex>(tr.steps.size()))
                throw ParseError("trace event outside declared step range");
            SlotEvent& ev = tr.steps[static_cast<std::size_t>(off)].events[static_cast<std::size_t>(slot)];
            ev.start = a != 0;
            ev.end = q != 0;
            ev.request_kwh = k;
            ev.announced_duration_steps = delta;
        } else if (tag == "end") {
            break;
        } else {
            throw ParseError("unknown trace file tag: " + tag);
        }
    }
    if (tr.steps.empty() && num_steps > 0) {
        tr.steps.reserve(num_steps);
        for (std::size_t s = 0; s < num_steps; ++s)
            tr.steps.push_back(ExogenousInput::empty(tr.n, tr.start_step + static_cast<StepIndex>(s)));
    }
    tr.sessions = derive_sessions(tr);
    return tr;
}

} // namespace evcs
