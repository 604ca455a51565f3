// SPDX-License-Identifier: Apache-2.0
#include "evcs/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "evcs/errors.hpp"

namespace evcs {

namespace {

// RFC-style CSV: quoted fields may contain commas and doubled quotes
std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') { field += '"'; ++i; }
                else quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    out.push_back(field);
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    std::size_t e = s.find_last_not_of(" \t");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

std::optional<RawSession> row_to_session(const std::vector<std::string>& cols,
                                         const std::vector<int>& idx, std::string& why) {
    RawSession s;
    auto get = [&](int i) -> std::string {
        return i >= 0 && i < static_cast<int>(cols.size()) ? trim(cols[static_cast<std::size_t>(i)]) : "";
    };
    s.slot_id = get(idx[0]);
    if (s.slot_id.empty()) { why = "missing slot_id"; return std::nullopt; }
    auto conn = parse_timestamp(get(idx[1]));
    auto disc = parse_timestamp(get(idx[2]));
    if (!conn) { why = "bad connection_time"; return std::nullopt; }
    if (!disc) { why = "bad disconnection_time"; return std::nullopt; }
    s.connection_time = *conn;
    s.disconnection_time = *disc;
    if (s.disconnection_time <= s.connection_time) { why = "disconnection not after connection"; return std::nullopt; }
    try {
        s.kwh = std::stod(get(idx[3]));
    } catch (...) {
        why = "bad kwh";
        return std::nullopt;
    }
    if (!(s.kwh >= 0)) { why = "negative kwh"; return std::nullopt; }
    const std::string ann = get(idx[4]);
    if (!ann.empty()) {
        try {
            const int m = std::stoi(ann);
            if (m <= 0) { why = "announced_minutes not positive"; return std::nullopt; }
            s.announced_minutes = m;
        } catch (...) {
            why = "bad announced_minutes";
            return std::nullopt;
        }
    }
    return s;
}

std::vector<RawSession> parse_csv(const std::string& path, ParseReport& report) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open session file: " + path);
    std::string line;
    if (!std::getline(is, line)) return {};
    auto header = split_csv_line(line);
    std::vector<int> idx(5, -1);
    const char* names[5] = {"slot_id", "connection_time", "disconnection_time", "kwh",
                            "announced_minutes"};
    for (int c = 0; c < static_cast<int>(header.size()); ++c) {
        const std::string h = trim(header[static_cast<std::size_t>(c)]);
        for (int k = 0; k < 5; ++k)
            if (h == names[k]) idx[static_cast<std::size_t>(k)] = c;
    }
    for (int k = 0; k < 4; ++k)
        if (idx[static_cast<std::size_t>(k)] < 0)
            throw ParseError(std::string("session file missing required column: ") + names[k]);

    std::vector<RawSession> out;
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (trim(line).empty()) continue;
        ++report.total_rows;
        std::string why;
        auto s = row_to_session(split_csv_line(line), idx, why);
        if (s) {
            out.push_back(std::move(*s));
        } else {
            ++report.rejected_rows;
            report.errors.push_back("row " + std::to_string(row) + ": " + why);
        }
    }
    return out;
}

std::vector<RawSession> parse_acn_json(const std::string& path, ParseReport& report) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open session file: " + path);
    nlohmann::json doc;
    try {
        is >> doc;
    } catch (const std::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    const nlohmann::json* items = &doc;
    if (doc.is_object() && doc.contains("_items")) items = &doc["_items"];
    if (!items->is_array()) throw ParseError("ACN file must hold an array of session records");

    std::vector<RawSession> out;
    std::size_t row = 0;
    for (const auto& rec : *items) {
        ++row;
        ++report.total_rows;
        std::string why;
        RawSession s;
        try {
            s.slot_id = rec.value("spaceID", "");
            if (s.slot_id.empty()) why = "missing spaceID";
            auto conn = parse_timestamp(rec.value("connectionTime", ""));
            auto disc = parse_timestamp(rec.value("disconnectionTime", ""));
            if (why.empty() && !conn) why = "bad connectionTime";
            if (why.empty() && !disc) why = "bad disconnectionTime";
            if (why.empty()) {
                s.connection_time = *conn;
                s.disconnection_time = *disc;
                if (s.disconnection_time <= s.connection_time)
                    why = "disconnection not after connection";
            }
            if (why.empty()) {
                if (!rec.contains("kWhDelivered") || !rec["kWhDelivered"].is_number())
                    why = "missing kWhDelivered";
                else
                    s.kwh = rec["kWhDelivered"].get<double>();
            }
            if (why.empty() && rec.contains("userInputs") && !rec["userInputs"].is_null()) {
                const auto& ui = rec["userInputs"];
                const nlohmann::json* entry = nullptr;
                if (ui.is_array() && !ui.empty()) entry = &ui.back();
                else if (ui.is_object()) entry = &ui;
                if (entry && entry->contains("minutesAvailable") &&
                    (*entry)["minutesAvailable"].is_number()) {
                    const int m = static_cast<int>(std::lround((*entry)["minutesAvailable"].get<double>()));
                    if (m > 0) s.announced_minutes = m;
                }
            }
        } catch (const std::exception& e) {
            why = e.what();
        }
        if (why.empty()) {
            out.push_back(std::move(s));
        } else {
            ++report.rejected_rows;
            report.errors.push_back("record " + std::to_string(row) + ": " + why);
        }
    }
    return out;
}

} // namespace

std::vector<RawSession> parse_sessions(const std::string& path, const std::string& format,
                                       ParseReport* report) {
    ParseReport local;
    ParseReport& rep = report ? *report : local;
    std::string fmt = format;
    if (fmt == "auto") {
        if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) fmt = "acn-json";
        else fmt = "csv";
    }
    std::vector<RawSession> out;
    if (fmt == "csv") out = parse_csv(path, rep);
    else if (fmt == "acn-json") out = parse_acn_json(path, rep);
    else throw ParseError("unknown session format: " + fmt);

    if (rep.total_rows > 0 &&
        static_cast<double>(rep.rejected_rows) > 0.01 * static_cast<double>(rep.total_rows)) {
        std::ostringstream os;
        os << "session file " << path << ": " << rep.rejected_rows << " of " << rep.total_rows
           << " rows malformed (over 1%)";
        if (!rep.errors.empty()) os << "; first: " << rep.errors.front();
        throw ParseError(os.str());
    }
    std::sort(out.begin(), out.end(), [](const RawSession& a, const RawSession& b) {
        if (a.connection_time != b.connection_time) return a.connection_time < b.connection_time;
        return a.slot_id < b.slot_id;
    });
    return out;
}

void write_sessions_csv(const std::vector<RawSession>& sessions, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ParseError("cannot write session file: " + path);
    os << "slot_id,connection_time,disconnection_time,kwh,announced_minutes\n";
    char buf[40];
    for (const RawSession& s : sessions) {
        std::snprintf(buf, sizeof buf, "%.6f", s.kwh);
        os << s.slot_id << "," << format_timestamp(s.connection_time) << ","
           << format_timestamp(s.disconnection_time) << "," << buf << ",";
        if (s.announced_minutes) os << *s.announced_minutes;
        os << "\n";
    }
}

namespace {

struct PlacedSession {
    int slot = 0;
    StepIndex start = 0;
    StepIndex end = 0;  // q application step
    double kwh = 0.0;
    int announced_steps = 0;
};

DiscretizedTrace trace_from_placed(std::vector<PlacedSession> placed, int n, int dt_minutes,
                                   StepIndex start_step, StepIndex end_step_excl,
                                   std::vector<std::string> names) {
    DiscretizedTrace tr;
    tr.n = n;
    tr.dt_minutes = dt_minutes;
    tr.start_step = start_step;
    tr.slot_names = std::move(names);
    const std::size_t T = static_cast<std::size_t>(end_step_excl - start_step);
    tr.steps.reserve(T);
    for (std::size_t s = 0; s < T; ++s)
        tr.steps.push_back(ExogenousInput::empty(n, start_step + static_cast<StepIndex>(s)));
    for (const PlacedSession& p : placed) {
        SlotEvent& a = tr.steps[static_cast<std::size_t>(p.start - start_step)]
                           .events[static_cast<std::size_t>(p.slot)];
        a.start = true;
        a.request_kwh = p.kwh;
        a.announced_duration_steps = p.announced_steps;
        SlotEvent& q = tr.steps[static_cast<std::size_t>(p.end - start_step)]
                           .events[static_cast<std::size_t>(p.slot)];
        q.end = true;
    }
    tr.sessions = derive_sessions(tr);
    return tr;
}

} // namespace

DiscretizedTrace discretize(const std::vector<RawSession>& sessions, int dt_minutes, int n,
                            DiscretizeReport* report) {
    if (dt_minutes <= 0 || 60 % dt_minutes != 0)
        throw ConfigError("discretize: dt_minutes must divide 60");
    DiscretizeReport local;
    DiscretizeReport& rep = report ? *report : local;

    std::set<std::string> ids;
    for (const RawSession& s : sessions) ids.insert(s.slot_id);
    if (n == 0) n = static_cast<int>(ids.size());
    if (static_cast<int>(ids.size()) > n)
        throw ParseError("discretize: dataset has " + std::to_string(ids.size()) +
                         " slots but the station is configured for " + std::to_string(n));
    std::map<std::string, int> slot_of;
    std::vector<std::string> names;
    {
        int i = 0;
        for (const std::string& id : ids) {
            slot_of[id] = i++;
            std::string clean = id;
            std::replace(clean.begin(), clean.end(), ' ', '_');
            names.push_back(clean);
        }
        for (; i < n; ++i) names.push_back("unused_" + std::to_string(i));
    }

    const std::int64_t dt_sec = static_cast<std::int64_t>(dt_minutes) * 60;
    std::vector<PlacedSession> placed;
    for (const RawSession& s : sessions) {
        if (s.kwh <= 1e-6) {
            // a zero-energy request cannot form a valid start event
            ++rep.dropped_sessions;
            continue;
        }
        PlacedSession p;
        p.slot = slot_of.at(s.slot_id);
        p.start = s.connection_time / dt_sec;
        if (s.connection_time < 0 && s.connection_time % dt_sec != 0) --p.start;  // floor
        const double dur_minutes = static_cast<double>(s.disconnection_time - s.connection_time) / 60.0;
        p.announced_steps = s.announced_minutes
                                ? static_cast<int>(std::ceil(static_cast<double>(*s.announced_minutes) / dt_minutes))
                                : static_cast<int>(std::ceil(dur_minutes / dt_minutes));
        if (p.announced_steps < 1) p.announced_steps = 1;
        StepIndex disc_step = s.disconnection_time / dt_sec;
        if (s.disconnection_time < 0 && s.disconnection_time % dt_sec != 0) --disc_step;
        // sessions can charge from the step after connection, so an end
        // inside the connection step is carried to the first chargeable step
        disc_step = std::max(disc_step, p.start + 1);
        p.end = std::min(disc_step, p.start + p.announced_steps);
        p.kwh = s.kwh;
        placed.push_back(p);
    }

    // overlap resolution per slot: truncate the earlier session at the
    // later's start (re-plug artifacts in real exports)
    std::stable_sort(placed.begin(), placed.end(), [](const PlacedSession& a, const PlacedSession& b) {
        if (a.slot != b.slot) return a.slot < b.slot;
        return a.start < b.start;
    });
    std::vector<PlacedSession> kept;
    for (std::size_t i = 0; i < placed.size(); ++i) {
        PlacedSession cur = placed[i];
        if (i + 1 < placed.size() && placed[i + 1].slot == cur.slot) {
            const PlacedSession& nxt = placed[i + 1];
            if (cur.end >= nxt.start) {
                ++rep.overlap_truncations;
                cur.end = nxt.start - 1;
                if (cur.end < cur.start + 1) {
                    ++rep.dropped_sessions;
                    continue;
                }
            }
        }
        kept.push_back(cur);
    }
    if (kept.empty()) {
        DiscretizedTrace tr;
        tr.n = n;
        tr.dt_minutes = dt_minutes;
        tr.slot_names = std::move(names);
        return tr;
    }
    StepIndex lo = kept.front().start;
    StepIndex hi = kept.front().end;
    for (const PlacedSession& p : kept) {
        lo = std::min(lo, p.start);
        hi = std::max(hi, p.end);
    }
    // canonical event order
    std::sort(kept.begin(), kept.end(), [](const PlacedSession& a, const PlacedSession& b) {
        if (a.start != b.start) return a.start < b.start;
        return a.slot < b.slot;
    });
    return trace_from_placed(std::move(kept), n, dt_minutes, lo, hi + 1, std::move(names));
}

DiscretizedTrace preprocess_requests(const DiscretizedTrace& trace, const StationConfig& config,
                                     std::size_t* dropped) {
    if (dropped) *dropped = 0;
    std::vector<PlacedSession> placed;
    for (const TraceSessionRecord& s : trace.sessions) {
        PlacedSession p;
        p.slot = s.slot;
        p.start = s.start_step;
        p.end = s.end_step;
        p.announced_steps = s.announced_steps;
        p.kwh = std::min(s.request_kwh,
                         static_cast<double>(s.announced_steps) * config.e_max * config.eta);
        if (p.kwh <= 1e-6) {
            if (dropped) ++*dropped;
            continue;
        }
        placed.push_back(p);
    }
    if (trace.steps.empty()) return trace;
    return trace_from_placed(std::move(placed), trace.n, trace.dt_minutes, trace.start_step,
                             trace.end_step(), trace.slot_names);
}

std::pair<DiscretizedTrace, DiscretizedTrace> split(const DiscretizedTrace& trace,
                                                    EpochSeconds boundary) {
    const std::int64_t dt_sec = static_cast<std::int64_t>(trace.dt_minutes) * 60;
    StepIndex b = boundary / dt_sec;
    if (boundary < 0 && boundary % dt_sec != 0) --b;
    if (b <= trace.start_step || b >= trace.end_step())
        throw ConfigError("split: boundary outside the trace range");

    std::vector<PlacedSession> train, test;
    StepIndex train_hi = b - 1;
    for (const TraceSessionRecord& s : trace.sessions) {
        PlacedSession p{s.slot, s.start_step, s.end_step, s.request_kwh, s.announced_steps};
        if (s.start_step < b) {
            train.push_back(p);
            train_hi = std::max(train_hi, s.end_step);  // straddlers extend the train side
        } else {
            test.push_back(p);
        }
    }
    DiscretizedTrace train_tr = trace_from_placed(std::move(train), trace.n, trace.dt_minutes,
                                                  trace.start_step, train_hi + 1, trace.slot_names);
    DiscretizedTrace test_tr = trace_from_placed(std::move(test), trace.n, trace.dt_minutes, b,
                                                 trace.end_step(), trace.slot_names);
    return {std::move(train_tr), std::move(test_tr)};
}

} // namespace evcs
