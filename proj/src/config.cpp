// SPDX-License-Identifier: Apache-2.0
#include "evcs/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "evcs/errors.hpp"

namespace evcs {

using nlohmann::json;

namespace {

StationConfig default_station() {
    StationConfig s;
    s.price_schedule = make_price_schedule(s.dt_minutes, 0.102, 0.153, {{6, 9}, {11, 13}, {17, 21}});
    return s;
}

std::vector<std::pair<int, int>> read_hour_ranges(const json& j) {
    std::vector<std::pair<int, int>> out;
    for (const auto& r : j) {
        if (!r.is_array() || r.size() != 2) throw ConfigError("peak_hours entries must be [begin, end)");
        out.push_back({r[0].get<int>(), r[1].get<int>()});
    }
    return out;
}

} // namespace

void ExperimentConfig::validate() const {
    station.validate();
    behavior.validate();
    if (scenario_K < 1 || scenario_K_prime < 1 || scenario_K_prime > scenario_K)
        throw ConfigError("scenario: need 1 <= K' <= K");
    if (solver.node_budget < 1) throw ConfigError("solver: node_budget must be >= 1");
    if (!(solver.rel_gap >= 0)) throw ConfigError("solver: rel_gap must be >= 0");
    if (sweep_policies.empty()) throw ConfigError("sweep: policy list is empty");
    for (const std::string& p : sweep_policies)
        if (p != "2s" && p != "mpc" && p != "rmpc" && p != "pmpc")
            throw ConfigError("sweep: unknown policy '" + p + "'");
    if (sweep_alphas.empty()) throw ConfigError("sweep: alpha list is empty");
    for (double a : sweep_alphas)
        if (!(a > 0)) throw ConfigError("sweep: alphas must be > 0");
    if (sweep_seeds.empty()) throw ConfigError("sweep: seed list is empty");
    if (has_synthetic) synthetic.validate();
}

std::string ExperimentConfig::canonical() const {
    json j;
    j["station"] = {{"n", station.n},
                    {"dt_minutes", station.dt_minutes},
                    {"e_max", station.e_max},
                    {"c_max", station.c_max},
                    {"xi", station.xi},
                    {"eta", station.eta},
                    {"alpha", station.alpha},
                    {"horizon", station.horizon_R},
                    {"price_schedule", station.price_schedule}};
    j["behavior"] = {{"sojourn_bins", behavior.sojourn_bin_edges},
                     {"laplace_alpha", behavior.laplace_alpha},
                     {"backoff_min_count", behavior.backoff_min_count}};
    j["scenario"] = {{"K", scenario_K}, {"K_prime", scenario_K_prime}};
    j["solver"] = {{"node_budget", solver.node_budget}, {"rel_gap", solver.rel_gap}};
    j["sweep"] = {{"policies", sweep_policies},
                  {"alphas", sweep_alphas},
                  {"seeds", sweep_seeds},
                  {"emit_step_logs", emit_step_logs}};
    if (has_synthetic) {
        j["synthetic"] = {{"n", synthetic.n},
                          {"days", synthetic.days},
                          {"dt_minutes", synthetic.dt_minutes},
                          {"start_epoch", synthetic.start_epoch},
                          {"arrival_hazard_by_hour", synthetic.arrival_hazard_by_hour},
                          {"duration_bin_edges", synthetic.duration_bin_edges},
                          {"end_hazard_by_bin", synthetic.end_hazard_by_bin},
                          {"kwh_min", synthetic.kwh_min},
                          {"kwh_max", synthetic.kwh_max},
                          {"early_disconnect_prob", synthetic.early_disconnect_prob},
                          {"early_fraction_min", synthetic.early_fraction_min},
                          {"early_fraction_max", synthetic.early_fraction_max},
                          {"idle_prob", synthetic.idle_prob},
                          {"idle_extra_steps_max", synthetic.idle_extra_steps_max},
                          {"seed", synthetic_seed}};
    }
    j["paths"] = {{"train_trace", train_trace_path},
                  {"test_trace", test_trace_path},
                  {"model", model_path},
                  {"split_date", split_date}};
    return j.dump();  // nlohmann orders keys, so the dump is canonical
}

std::uint64_t ExperimentConfig::hash() const {
    const std::string s = canonical();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return from_json_text(ss.str());
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }

    ExperimentConfig cfg;
    cfg.station = default_station();

    if (j.contains("station")) {
        const json& s = j["station"];
        cfg.station.n = s.value("n", cfg.station.n);
        cfg.station.dt_minutes = s.value("dt_minutes", cfg.station.dt_minutes);
        cfg.station.e_max = s.value("e_max", cfg.station.e_max);
        cfg.station.c_max = s.value("c_max", cfg.station.c_max);
        cfg.station.xi = s.value("xi", cfg.station.xi);
        cfg.station.eta = s.value("eta", cfg.station.eta);
        cfg.station.alpha = s.value("alpha", cfg.station.alpha);
        cfg.station.horizon_R = s.value("horizon", cfg.station.horizon_R);
        if (s.contains("prices")) {
            const json& p = s["prices"];
            if (p.contains("schedule")) {
                cfg.station.price_schedule = p["schedule"].get<std::vector<double>>();
            } else {
                const double off = p.value("offpeak", 0.102);
                const double peak = p.value("peak", 0.153);
                auto ranges = p.contains("peak_hours")
                                  ? read_hour_ranges(p["peak_hours"])
                                  : std::vector<std::pair<int, int>>{{6, 9}, {11, 13}, {17, 21}};
                cfg.station.price_schedule =
                    make_price_schedule(cfg.station.dt_minutes, off, peak, ranges);
            }
        } else {
            cfg.station.price_schedule = make_price_schedule(
                cfg.station.dt_minutes, 0.102, 0.153, {{6, 9}, {11, 13}, {17, 21}});
        }
    }

    if (j.contains("behavior")) {
        const json& b = j["behavior"];
        if (b.contains("sojourn_bins"))
            cfg.behavior.sojourn_bin_edges = b["sojourn_bins"].get<std::vector<int>>();
        cfg.behavior.laplace_alpha = b.value("laplace_alpha", cfg.behavior.laplace_alpha);
        cfg.behavior.backoff_min_count = b.value("backoff_min_count", cfg.behavior.backoff_min_count);
    }
    if (j.contains("scenario")) {
        cfg.scenario_K = j["scenario"].value("K", cfg.scenario_K);
        cfg.scenario_K_prime = j["scenario"].value("K_prime", cfg.scenario_K_prime);
    }
    if (j.contains("solver")) {
        cfg.solver.node_budget = j["solver"].value("node_budget", cfg.solver.node_budget);
        cfg.solver.rel_gap = j["solver"].value("rel_gap", cfg.solver.rel_gap);
    }
    if (j.contains("sweep")) {
        const json& s = j["sweep"];
        if (s.contains("policies")) cfg.sweep_policies = s["policies"].get<std::vector<std::string>>();
        if (s.contains("alphas")) cfg.sweep_alphas = s["alphas"].get<std::vector<double>>();
        if (s.contains("seeds")) cfg.sweep_seeds = s["seeds"].get<std::vector<std::uint64_t>>();
        cfg.sweep_workers = s.value("workers", cfg.sweep_workers);
        cfg.emit_step_logs = s.value("emit_step_logs", cfg.emit_step_logs);
    }
    if (j.contains("synthetic")) {
        const json& s = j["synthetic"];
        cfg.has_synthetic = true;
        SyntheticConfig& sy = cfg.synthetic;
        sy.n = s.value("n", sy.n);
        sy.days = s.value("days", sy.days);
        sy.dt_minutes = s.value("dt_minutes", sy.dt_minutes);
        sy.start_epoch = s.value("start_epoch", sy.start_epoch);
        if (s.contains("arrival_hazard_by_hour"))
            sy.arrival_hazard_by_hour = s["arrival_hazard_by_hour"].get<std::vector<double>>();
        if (s.contains("duration_bin_edges"))
            sy.duration_bin_edges = s["duration_bin_edges"].get<std::vector<int>>();
        if (s.contains("end_hazard_by_bin"))
            sy.end_hazard_by_bin = s["end_hazard_by_bin"].get<std::vector<double>>();
        sy.kwh_min = s.value("kwh_min", sy.kwh_min);
        sy.kwh_max = s.value("kwh_max", sy.kwh_max);
        sy.early_disconnect_prob = s.value("early_disconnect_prob", sy.early_disconnect_prob);
        sy.early_fraction_min = s.value("early_fraction_min", sy.early_fraction_min);
        sy.early_fraction_max = s.value("early_fraction_max", sy.early_fraction_max);
        sy.idle_prob = s.value("idle_prob", sy.idle_prob);
        sy.idle_extra_steps_max = s.value("idle_extra_steps_max", sy.idle_extra_steps_max);
        cfg.synthetic_seed = s.value("seed", cfg.synthetic_seed);
    }
    if (j.contains("paths")) {
        const json& p = j["paths"];
        cfg.train_trace_path = p.value("train_trace", "");
        cfg.test_trace_path = p.value("test_trace", "");
        cfg.model_path = p.value("model", "");
        cfg.split_date = p.value("split_date", "");
        cfg.out_dir = p.value("out_dir", cfg.out_dir);
    }
    cfg.validate();
    return cfg;
}

} // namespace evcs
