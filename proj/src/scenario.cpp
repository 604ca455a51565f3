// SPDX-License-Identifier: Apache-2.0
#include "evcs/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

#include "evcs/errors.hpp"

namespace evcs {

namespace {

constexpr StepIndex kNoCap = std::numeric_limits<StepIndex>::max();
constexpr double kInfD = std::numeric_limits<double>::infinity();

// per-slot walk state entering step tau
struct WalkSlot {
    bool active = false;
    std::int64_t sojourn = 0;
    StepIndex cap_end = kNoCap;  // forced end step (announced elapse), kNoCap if none
    int open_window = -1;        // index into the sessions vector
};

StepIndex cap_from_state(const SlotState& s, StepIndex t0) {
    if (s.announced_steps_left == kNoAnnouncedEnd) return kNoCap;
    return t0 + s.announced_steps_left - 1;
}

// applies the observed w_{t0} to the entry state of one slot; opens windows
// for ongoing and just-started sessions
WalkSlot init_walk_slot(const SlotState& entry, const SlotEvent& ev, int slot, StepIndex t0,
                        int R, std::vector<ScenarioSession>& sessions) {
    WalkSlot w;
    const StepIndex hor_end = t0 + R;
    bool free_for_start = !entry.active;
    if (entry.active) {
        const StepIndex cap = cap_from_state(entry, t0);
        ScenarioSession s;
        s.slot = slot;
        s.charge_begin = t0;
        s.start_remaining_kwh = entry.remaining_kwh;
        s.initial_request_kwh = entry.initial_request_kwh;
        s.first_stage = true;
        const bool ends_now = ev.end || cap == t0;
        if (ends_now) {
            if (ev.start && ev.end)
                throw ModelConsistencyError("scenario: start and end on one slot at one step");
            s.charge_end = t0;
            sessions.push_back(s);
            // an elapse-freed slot may host a new observed arrival at t0
            free_for_start = true;
            w.active = false;
            w.sojourn = 0;
        } else {
            if (ev.start) throw ModelConsistencyError("scenario: start event on an active slot");
            s.charge_end = std::min(cap == kNoCap ? hor_end : cap, hor_end);
            sessions.push_back(s);
            w.active = true;
            w.sojourn = entry.sojourn_steps + 1;
            w.cap_end = cap;
            w.open_window = static_cast<int>(sessions.size()) - 1;
            return w;
        }
    }
    if (free_for_start && ev.start) {
        if (!(ev.request_kwh > 0) || ev.announced_duration_steps < 1)
            throw ModelConsistencyError("scenario: start event with invalid request");
        const StepIndex cap = t0 + ev.announced_duration_steps;
        w.active = true;
        w.sojourn = 0;
        w.cap_end = cap;
        if (t0 + 1 <= hor_end) {
            ScenarioSession s;
            s.slot = slot;
            s.charge_begin = t0 + 1;
            s.charge_end = std::min(cap, hor_end);
            s.start_remaining_kwh = ev.request_kwh;
            s.initial_request_kwh = ev.request_kwh;
            sessions.push_back(s);
            w.open_window = static_cast<int>(sessions.size()) - 1;
        }
        return w;
    }
    if (!entry.active) {
        w.active = false;
        w.sojourn = entry.sojourn_steps + 1;
    }
    return w;
}

void sort_sessions(std::vector<ScenarioSession>& sessions) {
    std::sort(sessions.begin(), sessions.end(),
              [](const ScenarioSession& a, const ScenarioSession& b) {
                  if (a.slot != b.slot) return a.slot < b.slot;
                  return a.charge_begin < b.charge_begin;
              });
}

} // namespace

std::vector<ScenarioSession> derive_charge_windows(const StationState& state,
                                                   const std::vector<ExogenousInput>& steps,
                                                   const StationConfig& config) {
    if (steps.empty()) throw ModelConsistencyError("derive_charge_windows: no steps");
    if (steps.front().t != state.t)
        throw ModelConsistencyError("derive_charge_windows: scenario does not start at the state");
    const StepIndex t0 = state.t;
    const int R = static_cast<int>(steps.size()) - 1;
    const StepIndex hor_end = t0 + R;
    std::vector<ScenarioSession> sessions;

    for (int i = 0; i < config.n; ++i) {
        const SlotState& entry = state.slots[static_cast<std::size_t>(i)];
        bool active = entry.active;
        StepIndex begin = t0;
        double rho = entry.remaining_kwh;
        double z = entry.initial_request_kwh;
        StepIndex cap = active ? cap_from_state(entry, t0) : kNoCap;
        bool first_stage = active;

        auto close = [&](StepIndex end_step) {
            ScenarioSession s;
            s.slot = i;
            s.charge_begin = begin;
            s.charge_end = std::min(end_step, hor_end);
            s.start_remaining_kwh = rho;
            s.initial_request_kwh = z;
            s.first_stage = first_stage;
            if (s.charge_end >= s.charge_begin) sessions.push_back(s);
            active = false;
        };

        for (int j = 0; j <= R; ++j) {
            const StepIndex tau = t0 + j;
            const SlotEvent& ev = steps[static_cast<std::size_t>(j)].events[static_cast<std::size_t>(i)];
            if (active) {
                const bool forced = cap != kNoCap && tau >= cap;
                if (ev.end || forced) {
                    if (ev.start && ev.end)
                        throw ModelConsistencyError("scenario: start and end on one slot at one step");
                    close(tau);
                    // fall through: an elapse-freed slot may restart below
                    if (!ev.start) continue;
                } else if (ev.start) {
                    throw ModelConsistencyError("scenario: start event on an active slot " +
                                                std::to_string(i));
                } else {
                    continue;
                }
            }
            if (ev.start) {
                if (!(ev.request_kwh > 0) || ev.announced_duration_steps < 1)
                    throw ModelConsistencyError("scenario: start event with invalid request");
                active = true;
                begin = tau + 1;
                rho = z = ev.request_kwh;
                cap = tau + ev.announced_duration_steps;
                first_stage = false;
            }
            // end events on inactive slots are ignored, matching the simulator
        }
        if (active && begin <= hor_end) close(hor_end);
    }
    sort_sessions(sessions);
    return sessions;
}

Scenario sample_scenario(const StationState& state, const ExogenousInput& observed,
                         const UserBehaviorModel& model, int R, const StationConfig& config,
                         Rng& rng) {
    if (R < 1) throw ConfigError("sample_scenario: R must be >= 1");
    if (observed.t != state.t)
        throw ModelConsistencyError("sample_scenario: observed input not aligned with state");

    const StepIndex t0 = state.t;
    const StepIndex hor_end = t0 + R;
    Scenario sc;
    sc.t0 = t0;
    sc.horizon = R;
    sc.steps.reserve(static_cast<std::size_t>(R) + 1);
    sc.steps.push_back(observed);
    for (int j = 1; j <= R; ++j) sc.steps.push_back(ExogenousInput::empty(config.n, t0 + j));

    for (int i = 0; i < config.n; ++i) {
        WalkSlot w = init_walk_slot(state.slots[static_cast<std::size_t>(i)],
                                    observed.events[static_cast<std::size_t>(i)], i, t0, R,
                                    sc.sessions);
        StepIndex sampled_start = kNoCap;  // arrival step of an open sampled session
        for (int j = 1; j <= R; ++j) {
            const StepIndex tau = t0 + j;
            const EpochSeconds clock = config.clock_at(tau);
            TransitionContext ctx;
            ctx.prev_active = w.active;
            ctx.sojourn_steps = w.sojourn;
            ctx.hour_of_day = hour_of_day(clock);
            ctx.weekday = weekday(clock);
            ctx.slot_index = i;

            if (w.active) {
                // announced elapse is checked first and consumes no draw
                const bool forced = w.cap_end != kNoCap && tau >= w.cap_end;
                const bool drawn = !forced && rng.bernoulli(model.p_end(ctx));
                if (forced || drawn) {
                    if (drawn) {
                        SlotEvent& ev = sc.steps[static_cast<std::size_t>(j)].events[static_cast<std::size_t>(i)];
                        ev.end = true;
                        if (w.open_window >= 0)
                            sc.sessions[static_cast<std::size_t>(w.open_window)].charge_end = tau;
                    }
                    if (sampled_start != kNoCap) {
                        // announced duration of a sampled session is its sampled length
                        SlotEvent& st = sc.steps[static_cast<std::size_t>(sampled_start - t0)]
                                            .events[static_cast<std::size_t>(i)];
                        st.announced_duration_steps = static_cast<int>(tau - sampled_start);
                        sampled_start = kNoCap;
                    }
                    w.active = false;
                    w.sojourn = 0;
                    w.open_window = -1;
                    w.cap_end = kNoCap;
                } else {
                    ++w.sojourn;
                }
            } else {
                if (rng.bernoulli(model.p_start(ctx))) {
                    const double kwh = model.predict_kwh(ctx);
                    SlotEvent& ev = sc.steps[static_cast<std::size_t>(j)].events[static_cast<std::size_t>(i)];
                    ev.start = true;
                    ev.request_kwh = kwh;
                    ev.announced_duration_steps = static_cast<int>(hor_end - tau + 1);  // patched at close
                    sampled_start = tau;
                    w.active = true;
                    w.sojourn = 0;
                    w.cap_end = kNoCap;
                    if (tau + 1 <= hor_end) {
                        ScenarioSession s;
                        s.slot = i;
                        s.charge_begin = tau + 1;
                        s.charge_end = hor_end;  // truncation; shrunk if an end is drawn
                        s.start_remaining_kwh = kwh;
                        s.initial_request_kwh = kwh;
                        sc.sessions.push_back(s);
                        w.open_window = static_cast<int>(sc.sessions.size()) - 1;
                    }
                } else {
                    ++w.sojourn;
                }
            }
        }
    }
    sort_sessions(sc.sessions);
    return sc;
}

std::vector<Scenario> sample_set(const StationState& state, const ExogenousInput& observed,
                                 const UserBehaviorModel& model, int R, int K,
                                 const StationConfig& config, std::uint64_t master_seed,
                                 int num_threads) {
    if (K < 1) throw ConfigError("sample_set: K must be >= 1");
    std::vector<Scenario> out(static_cast<std::size_t>(K));
    auto worker = [&](int from, int to) {
        for (int k = from; k < to; ++k) {
            Rng rng(derive_stream(master_seed, {static_cast<std::uint64_t>(k)}));
            out[static_cast<std::size_t>(k)] = sample_scenario(state, observed, model, R, config, rng);
        }
    };
    if (num_threads <= 1 || K == 1) {
        worker(0, K);
    } else {
        const int nt = std::min(num_threads, K);
        std::vector<std::thread> threads;
        const int chunk = (K + nt - 1) / nt;
        for (int t = 0; t < nt; ++t) {
            const int from = t * chunk;
            const int to = std::min(K, from + chunk);
            if (from < to) threads.emplace_back(worker, from, to);
        }
        for (auto& th : threads) th.join();
    }
    return out;
}

namespace {

std::vector<double> embed(const Scenario& sc) {
    const int len = sc.horizon + 1;
    std::vector<double> v(static_cast<std::size_t>(2 * len), 0.0);
    for (int j = 0; j < len; ++j) {
        const ExogenousInput& w = sc.steps[static_cast<std::size_t>(j)];
        double inflow = 0.0;
        for (const SlotEvent& ev : w.events)
            if (ev.start) inflow += ev.request_kwh;
        v[static_cast<std::size_t>(j)] = inflow;
    }
    for (const ScenarioSession& s : sc.sessions)
        for (StepIndex tau = s.charge_begin; tau <= s.charge_end; ++tau)
            v[static_cast<std::size_t>(len + (tau - sc.t0))] += 1.0;
    return v;
}

double sqdist(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i] - b[i];
        d += x * x;
    }
    return d;
}

} // namespace

ReducedScenarioSet reduce(const std::vector<Scenario>& set, int k_prime, Rng& rng) {
    const int K = static_cast<int>(set.size());
    if (k_prime < 1 || k_prime > K)
        throw ConfigError("reduce: K' must satisfy 1 <= K' <= K");

    std::vector<std::vector<double>> pts;
    pts.reserve(static_cast<std::size_t>(K));
    for (const Scenario& s : set) pts.push_back(embed(s));

    // k-means++ seeding
    std::vector<std::vector<double>> centers;
    centers.push_back(pts[rng.uniform_index(static_cast<std::uint64_t>(K))]);
    std::vector<double> d2(static_cast<std::size_t>(K), 0.0);
    while (static_cast<int>(centers.size()) < k_prime) {
        double total = 0.0;
        for (int k = 0; k < K; ++k) {
            double best = kInfD;
            for (const auto& c : centers) best = std::min(best, sqdist(pts[static_cast<std::size_t>(k)], c));
            d2[static_cast<std::size_t>(k)] = best;
            total += best;
        }
        if (total <= 0.0) {
            centers.push_back(pts[rng.uniform_index(static_cast<std::uint64_t>(K))]);
            continue;
        }
        const double target = rng.uniform() * total;
        double cum = 0.0;
        int pick = K - 1;
        for (int k = 0; k < K; ++k) {
            cum += d2[static_cast<std::size_t>(k)];
            if (cum >= target) { pick = k; break; }
        }
        centers.push_back(pts[static_cast<std::size_t>(pick)]);
    }

    // Lloyd iterations, assignment ties to the lowest cluster index
    std::vector<int> assign(static_cast<std::size_t>(K), 0);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (int k = 0; k < K; ++k) {
            int best = 0;
            double bd = kInfD;
            for (int c = 0; c < k_prime; ++c) {
                const double d = sqdist(pts[static_cast<std::size_t>(k)], centers[static_cast<std::size_t>(c)]);
                if (d < bd - 1e-15) { bd = d; best = c; }
            }
            if (assign[static_cast<std::size_t>(k)] != best) { assign[static_cast<std::size_t>(k)] = best; changed = true; }
        }
        std::vector<int> count(static_cast<std::size_t>(k_prime), 0);
        std::vector<std::vector<double>> sums(static_cast<std::size_t>(k_prime),
                                              std::vector<double>(pts[0].size(), 0.0));
        for (int k = 0; k < K; ++k) {
            const int c = assign[static_cast<std::size_t>(k)];
            ++count[static_cast<std::size_t>(c)];
            for (std::size_t d = 0; d < pts[0].size(); ++d)
                sums[static_cast<std::size_t>(c)][d] += pts[static_cast<std::size_t>(k)][d];
        }
        for (int c = 0; c < k_prime; ++c) {
            if (count[static_cast<std::size_t>(c)] == 0) continue;  // empty cluster keeps its center
            for (std::size_t d = 0; d < pts[0].size(); ++d)
                centers[static_cast<std::size_t>(c)][d] =
                    sums[static_cast<std::size_t>(c)][d] / count[static_cast<std::size_t>(c)];
        }
        if (!changed && iter > 0) break;
    }

    ReducedScenarioSet out;
    for (int c = 0; c < k_prime; ++c) {
        int size = 0;
        int best = -1;
        double bd = kInfD;
        for (int k = 0; k < K; ++k) {
            if (assign[static_cast<std::size_t>(k)] != c) continue;
            ++size;
            const double d = sqdist(pts[static_cast<std::size_t>(k)], centers[static_cast<std::size_t>(c)]);
            if (d < bd - 1e-15) { bd = d; best = k; }
        }
        if (size == 0) continue;  // dropped; remaining weights still sum to 1
        Scenario rep = set[static_cast<std::size_t>(best)];
        rep.weight = static_cast<double>(size) / static_cast<double>(K);
        out.scenarios.push_back(std::move(rep));
    }
    return out;
}

Scenario point_forecast(const StationState& state, const ExogenousInput& observed,
                        const UserBehaviorModel& model, int R, const StationConfig& config) {
    if (R < 1) throw ConfigError("point_forecast: R must be >= 1");
    const StepIndex t0 = state.t;
    const StepIndex hor_end = t0 + R;
    Scenario sc;
    sc.t0 = t0;
    sc.horizon = R;
    sc.steps.push_back(observed);
    for (int j = 1; j <= R; ++j) sc.steps.push_back(ExogenousInput::empty(config.n, t0 + j));

    for (int i = 0; i < config.n; ++i) {
        WalkSlot w = init_walk_slot(state.slots[static_cast<std::size_t>(i)],
                                    observed.events[static_cast<std::size_t>(i)], i, t0, R,
                                    sc.sessions);
        StepIndex forecast_start = kNoCap;
        double survive = 1.0;  // P(no switch since the walk segment started)
        for (int j = 1; j <= R; ++j) {
            const StepIndex tau = t0 + j;
            const EpochSeconds clock = config.clock_at(tau);
            TransitionContext ctx;
            ctx.prev_active = w.active;
            ctx.sojourn_steps = w.sojourn;
            ctx.hour_of_day = hour_of_day(clock);
            ctx.weekday = weekday(clock);
            ctx.slot_index = i;

            if (w.active) {
                const bool forced = w.cap_end != kNoCap && tau >= w.cap_end;
                bool ends = forced;
                if (!forced) {
                    survive *= 1.0 - model.p_end(ctx);
                    ends = 1.0 - survive >= 0.5;
                }
                if (ends) {
                    if (!forced) {
                        SlotEvent& ev = sc.steps[static_cast<std::size_t>(j)].events[static_cast<std::size_t>(i)];
                        ev.end = true;
                        if (w.open_window >= 0)
                            sc.sessions[static_cast<std::size_t>(w.open_window)].charge_end = tau;
                    }
                    if (forecast_start != kNoCap) {
                        SlotEvent& st = sc.steps[static_cast<std::size_t>(forecast_start - t0)]
                                            .events[static_cast<std::size_t>(i)];
                        st.announced_duration_steps = static_cast<int>(tau - forecast_start);
                        forecast_start = kNoCap;
                    }
                    w.active = false;
                    w.sojourn = 0;
                    w.open_window = -1;
                    w.cap_end = kNoCap;
                    survive = 1.0;
                } else {
                    ++w.sojourn;
                }
            } else {
                survive *= 1.0 - model.p_start(ctx);
                if (1.0 - survive >= 0.5) {
                    const double kwh = model.predict_kwh(ctx);
                    SlotEvent& ev = sc.steps[static_cast<std::size_t>(j)].events[static_cast<std::size_t>(i)];
                    ev.start = true;
                    ev.request_kwh = kwh;
                    ev.announced_duration_steps = static_cast<int>(hor_end - tau + 1);
                    forecast_start = tau;
                    w.active = true;
                    w.sojourn = 0;
                    w.cap_end = kNoCap;
                    survive = 1.0;
                    if (tau + 1 <= hor_end) {
                        ScenarioSession s;
                        s.slot = i;
                        s.charge_begin = tau + 1;
                        s.charge_end = hor_end;
                        s.start_remaining_kwh = kwh;
                        s.initial_request_kwh = kwh;
                        sc.sessions.push_back(s);
                        w.open_window = static_cast<int>(sc.sessions.size()) - 1;
                    }
                } else {
                    ++w.sojourn;
                }
            }
        }
    }
    sort_sessions(sc.sessions);
    return sc;
}

RequestBasedForecast request_based_forecast(const StationState& state,
                                            const ExogenousInput& observed,
                                            const AvgLoadTable& table, int R,
                                            const StationConfig& config) {
    if (R < 1) throw ConfigError("request_based_forecast: R must be >= 1");
    const StepIndex t0 = state.t;
    RequestBasedForecast out;
    Scenario& sc = out.scenario;
    sc.t0 = t0;
    sc.horizon = R;
    sc.steps.push_back(observed);
    for (int j = 1; j <= R; ++j) sc.steps.push_back(ExogenousInput::empty(config.n, t0 + j));
    // announced ends are trusted, so the charge windows fall out of the state
    // and the observed starts alone
    sc.sessions = derive_charge_windows(state, sc.steps, config);

    out.uncontrollable_kwh.assign(static_cast<std::size_t>(R) + 1,
                                  std::vector<double>(static_cast<std::size_t>(config.n), 0.0));
    for (int i = 0; i < config.n; ++i) {
        const bool has_session = state.slots[static_cast<std::size_t>(i)].active ||
                                 observed.events[static_cast<std::size_t>(i)].start;
        if (has_session) continue;
        for (int j = 0; j <= R; ++j) {
            const int hour = hour_of_day(config.clock_at(t0 + j));
            out.uncontrollable_kwh[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] =
                table.at(i, hour);
        }
    }
    return out;
}

Scenario perfect_forecast(const DiscretizedTrace& trace, StepIndex t0, int R) {
    if (R < 1) throw ConfigError("perfect_forecast: R must be >= 1");
    if (t0 < trace.start_step || t0 >= trace.end_step())
        throw ModelConsistencyError("perfect_forecast: t0 outside the trace");
    Scenario sc;
    sc.t0 = t0;
    sc.horizon = R;
    for (int j = 0; j <= R; ++j) {
        const StepIndex tau = t0 + j;
        if (tau < trace.end_step()) sc.steps.push_back(trace.at(tau));
        else sc.steps.push_back(ExogenousInput::empty(trace.n, tau));
    }
    return sc;
}

void dump_scenario(const Scenario& s, std::ostream& os) {
    for (const ExogenousInput& w : s.steps) {
        for (std::size_t i = 0; i < w.events.size(); ++i) {
            const SlotEvent& ev = w.events[i];
            if (!ev.start && !ev.end) continue;
            os << w.t << " " << i << " " << (ev.start ? 1 : 0) << " " << (ev.end ? 1 : 0) << " "
               << ev.request_kwh << " " << ev.announced_duration_steps << "\n";
        }
    }
}

} // namespace evcs
