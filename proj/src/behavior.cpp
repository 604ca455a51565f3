// SPDX-License-Identifier: Apache-2.0
#include "evcs/behavior.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "evcs/errors.hpp"

namespace evcs {

TransitionContext featurize(const StationState& state, int slot_index, EpochSeconds clock) {
    const SlotState& s = state.slots.at(static_cast<std::size_t>(slot_index));
    TransitionContext ctx;
    ctx.prev_active = s.active;
    ctx.sojourn_steps = s.sojourn_steps;
    ctx.hour_of_day = hour_of_day(clock);
    ctx.weekday = weekday(clock);
    ctx.slot_index = slot_index;
    return ctx;
}

void BinningConfig::validate() const {
    if (sojourn_bin_edges.empty() || sojourn_bin_edges.front() != 0)
        throw ConfigError("sojourn_bin_edges must start at 0");
    for (std::size_t i = 1; i < sojourn_bin_edges.size(); ++i)
        if (sojourn_bin_edges[i] <= sojourn_bin_edges[i - 1])
            throw ConfigError("sojourn_bin_edges must be strictly ascending");
    if (!(laplace_alpha > 0)) throw ConfigError("laplace_alpha must be > 0");
    if (backoff_min_count < 0) throw ConfigError("backoff_min_count must be >= 0");
}

int BinningConfig::bin_of(std::int64_t sojourn) const {
    int bin = 0;
    for (std::size_t i = 1; i < sojourn_bin_edges.size(); ++i) {
        if (sojourn >= sojourn_bin_edges[i]) bin = static_cast<int>(i);
        else break;
    }
    return bin;
}

BinnedBehaviorModel::Key BinnedBehaviorModel::make_key(bool y, int bin, int hour, int weekday,
                                                       int slot) {
    return (static_cast<Key>(y ? 1 : 0) << 40) | (static_cast<Key>(bin & 0xFF) << 32) |
           (static_cast<Key>(hour & 0xFF) << 24) | (static_cast<Key>(weekday & 0xFF) << 16) |
           static_cast<Key>(slot & 0xFFFF);
}

void BinnedBehaviorModel::rebuild_aggregates() {
    for (auto& m : levels_.maps) m.clear();
    for (const auto& [key, cell] : cells_) {
        const bool y = (key >> 40) & 1;
        const int bin = static_cast<int>((key >> 32) & 0xFF);
        const int hour = static_cast<int>((key >> 24) & 0xFF);
        const int wd = static_cast<int>((key >> 16) & 0xFF);
        const int slot = static_cast<int>(key & 0xFFFF);
        const Key keys[5] = {
            make_key(y, bin, hour, wd, slot),  // full resolution
            make_key(y, bin, hour, wd, 0),     // drop slot
            make_key(y, bin, hour, 0, 0),      // drop weekday
            make_key(y, bin, 0, 0, 0),         // drop hour
            make_key(y, 0, 0, 0, 0),           // global per y
        };
        for (int l = 0; l < 5; ++l) {
            Cell& agg = levels_.maps[static_cast<std::size_t>(l)][keys[l]];
            agg.observations += cell.observations;
            agg.switches += cell.switches;
            agg.kwh_sum += cell.kwh_sum;
            agg.kwh_count += cell.kwh_count;
        }
    }
}

const BinnedBehaviorModel::Cell* BinnedBehaviorModel::lookup(bool y, int bin, int hour, int weekday,
                                                             int slot, bool for_kwh) const {
    static const Cell kEmpty{};
    const Key keys[5] = {
        make_key(y, bin, hour, weekday, slot),
        make_key(y, bin, hour, weekday, 0),
        make_key(y, bin, hour, 0, 0),
        make_key(y, bin, 0, 0, 0),
        make_key(y, 0, 0, 0, 0),
    };
    const Cell* global = &kEmpty;
    for (int l = 0; l < 5; ++l) {
        auto it = levels_.maps[static_cast<std::size_t>(l)].find(keys[l]);
        const Cell* c = it != levels_.maps[static_cast<std::size_t>(l)].end() ? &it->second : &kEmpty;
        if (l == 4) global = c;
        const std::int64_t pool = for_kwh ? c->kwh_count : c->observations;
        const std::int64_t need = for_kwh ? std::max<std::int64_t>(1, config_.backoff_min_count)
                                          : config_.backoff_min_count;
        if (pool >= need) return c;
    }
    return global;
}

double BinnedBehaviorModel::switch_probability(const TransitionContext& ctx) const {
    const Cell* c = lookup(ctx.prev_active, config_.bin_of(ctx.sojourn_steps), ctx.hour_of_day,
                           ctx.weekday, ctx.slot_index, false);
    const double a = config_.laplace_alpha;
    return (static_cast<double>(c->switches) + a) /
           (static_cast<double>(c->observations) + 2.0 * a);
}

double BinnedBehaviorModel::p_start(const TransitionContext& ctx) const {
    if (ctx.prev_active) throw std::domain_error("p_start: context is active");
    return switch_probability(ctx);
}

double BinnedBehaviorModel::p_end(const TransitionContext& ctx) const {
    if (!ctx.prev_active) throw std::domain_error("p_end: context is inactive");
    return switch_probability(ctx);
}

double BinnedBehaviorModel::predict_kwh(const TransitionContext& ctx) const {
    const Cell* c = lookup(false, config_.bin_of(ctx.sojourn_steps), ctx.hour_of_day, ctx.weekday,
                           ctx.slot_index, true);
    if (c->kwh_count <= 0) throw ModelConsistencyError("predict_kwh: model has no request data");
    return c->kwh_sum / static_cast<double>(c->kwh_count);
}

BinnedBehaviorModel BinnedBehaviorModel::fit(const DiscretizedTrace& trace,
                                             const BinningConfig& config) {
    config.validate();
    if (trace.steps.empty()) throw ModelConsistencyError("fit: empty training trace");

    BinnedBehaviorModel model;
    model.config_ = config;
    model.trained_from_ = trace.start_step;
    model.trained_to_ = trace.end_step();

    StationConfig cfg;
    cfg.n = trace.n;
    cfg.dt_minutes = trace.dt_minutes;
    cfg.e_max = 1.0;
    cfg.c_max = 1.0;
    cfg.xi = 1.0;
    cfg.eta = 1.0;
    cfg.alpha = 1.0;
    cfg.price_schedule.assign(static_cast<std::size_t>(cfg.steps_per_day()), 0.0);

    StationState state = StationState::empty(cfg, trace.start_step);
    const ControlAction zero = ControlAction::zeros(cfg.n);
    std::vector<bool> ended(static_cast<std::size_t>(trace.n));

    for (const ExogenousInput& w : trace.steps) {
        const EpochSeconds clock = cfg.clock_at(w.t);
        const int hour = hour_of_day(clock);
        const int wd = weekday(clock);

        StepResult r = step(state, zero, w, cfg);
        std::fill(ended.begin(), ended.end(), false);
        for (const SessionEndRecord& e : r.ended_sessions) ended[static_cast<std::size_t>(e.slot)] = true;

        for (int i = 0; i < trace.n; ++i) {
            const SlotState& s = state.slots[static_cast<std::size_t>(i)];
            const Key key = make_key(s.active, config.bin_of(s.sojourn_steps), hour, wd, i);
            Cell& cell = model.cells_[key];
            ++cell.observations;
            if (s.active) {
                if (ended[static_cast<std::size_t>(i)]) ++cell.switches;
            } else {
                const SlotEvent& ev = w.events[static_cast<std::size_t>(i)];
                if (ev.start) {
                    ++cell.switches;
                    cell.kwh_sum += ev.request_kwh;
                    ++cell.kwh_count;
                }
            }
        }
        state = std::move(r.state);
    }

    std::int64_t total_requests = 0;
    for (const auto& [k, c] : model.cells_) total_requests += c.kwh_count;
    if (total_requests == 0)
        throw ModelConsistencyError("fit: training trace contains no sessions");

    model.rebuild_aggregates();
    return model;
}

void BinnedBehaviorModel::save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw ParseError("cannot write model file: " + path);
    os << "evcs-behavior-model v1\n";
    os << "bins";
    for (int e : config_.sojourn_bin_edges) os << " " << e;
    os << "\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", config_.laplace_alpha);
    os << "laplace_alpha " << buf << "\n";
    os << "backoff_min_count " << config_.backoff_min_count << "\n";
    os << "trained " << trained_from_ << " " << trained_to_ << "\n";
    os << "cells " << cells_.size() << "\n";
    for (const auto& [key, c] : cells_) {
        std::snprintf(buf, sizeof buf, "%.17g", c.kwh_sum);
        os << key << " " << c.observations << " " << c.switches << " " << buf << " " << c.kwh_count
           << "\n";
    }
    os << "end\n";
}

BinnedBehaviorModel BinnedBehaviorModel::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open model file: " + path);
    std::string header;
    std::getline(is, header);
    if (header != "evcs-behavior-model v1")
        throw ParseError("unsupported model file version: " + header);

    BinnedBehaviorModel model;
    model.config_.sojourn_bin_edges.clear();
    std::string tag;
    while (is >> tag) {
        if (tag == "bins") {
            std::string rest;
            std::getline(is, rest);
            std::istringstream es(rest);
            int e;
            while (es >> e) model.config_.sojourn_bin_edges.push_back(e);
        } else if (tag == "laplace_alpha") {
            is >> model.config_.laplace_alpha;
        } else if (tag == "backoff_min_count") {
            is >> model.config_.backoff_min_count;
        } else if (tag == "trained") {
            is >> model.trained_from_ >> model.trained_to_;
        } else if (tag == "cells") {
            std::size_t count;
            is >> count;
            for (std::size_t i = 0; i < count; ++i) {
                Key key;
                Cell c;
                is >> key >> c.observations >> c.switches >> c.kwh_sum >> c.kwh_count;
                model.cells_[key] = c;
            }
        } else if (tag == "end") {
            break;
        } else {
            throw ParseError("unknown model file tag: " + tag);
        }
    }
    model.config_.validate();
    model.rebuild_aggregates();
    return model;
}

} // namespace evcs
