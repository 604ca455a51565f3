// SPDX-License-Identifier: Apache-2.0
#include "evcs/sweep.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "evcs/errors.hpp"
#include "evcs/policy.hpp"

namespace evcs {

namespace {

std::string fmt(double v, int digits = 10) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

std::string opt_fmt(const std::optional<double>& v) { return v ? fmt(*v) : "n/a"; }

} // namespace

SweepResult run_sweep(const SweepPlan& plan) {
    const ExperimentConfig& cfg = plan.config;
    cfg.validate();

    SweepResult result;
    for (const std::string& pol : cfg.sweep_policies)
        for (double alpha : cfg.sweep_alphas)
            for (std::uint64_t seed : cfg.sweep_seeds) {
                SweepCell cell;
                cell.policy = pol;
                cell.alpha = alpha;
                cell.seed = seed;
                result.cells.push_back(std::move(cell));
            }

    // per-(alpha, seed) artifacts shared across policies, built up front so
    // workers stay read-only: test traces per seed, average-load tables per
    // (alpha, seed) when the request-based baseline runs
    std::map<std::uint64_t, std::shared_ptr<const DiscretizedTrace>> test_traces;
    for (std::uint64_t seed : cfg.sweep_seeds)
        test_traces[seed] = std::make_shared<const DiscretizedTrace>(plan.test_trace_for(seed));

    const bool needs_rmpc = std::find(cfg.sweep_policies.begin(), cfg.sweep_policies.end(),
                                      "rmpc") != cfg.sweep_policies.end();
    std::map<double, AvgLoadTable> tables;
    if (needs_rmpc) {
        if (!plan.train_trace)
            throw ConfigError("sweep: the request-based policy needs a training trace");
        for (double alpha : cfg.sweep_alphas) {
            StationConfig st = cfg.station;
            st.alpha = alpha;
            tables.emplace(alpha, build_avg_load_table(*plan.train_trace, st, cfg.solver));
        }
    }

    std::atomic<std::size_t> next{0};
    std::mutex fail_mutex;
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= result.cells.size()) return;
            SweepCell& cell = result.cells[i];
            try {
                StationConfig st = cfg.station;
                st.alpha = cell.alpha;
                const auto& trace = test_traces.at(cell.seed);
                std::unique_ptr<Policy> policy;
                if (cell.policy == "2s") {
                    if (!plan.model) throw ConfigError("sweep: 2s needs a behavior model");
                    policy = make_2s_policy(plan.model, st, cfg.scenario_K, cfg.scenario_K_prime,
                                            cell.seed, cfg.solver);
                } else if (cell.policy == "mpc") {
                    if (!plan.model) throw ConfigError("sweep: mpc needs a behavior model");
                    policy = make_mpc_policy(plan.model, st, cfg.solver);
                } else if (cell.policy == "rmpc") {
                    policy = make_rmpc_policy(tables.at(cell.alpha), st, cfg.solver);
                } else {
                    policy = make_pmpc_policy(trace, st, cfg.solver);
                }
                cell.run = simulate(*trace, *policy, st);
                cell.totals = cell.run.totals;
                cell.metrics = compute_metrics(cell.run);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(fail_mutex);
                cell.failed = true;
                cell.error = e.what();
            }
        }
    };

    int workers = cfg.sweep_workers > 0 ? cfg.sweep_workers
                                        : static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    workers = std::min<int>(workers, static_cast<int>(result.cells.size()));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return result;
}

namespace {

struct RelDiffs {
    std::optional<double> cost, fill, full;
};

// relative differences against the P-MPC cell with the same alpha and seed
RelDiffs rel_vs_pmpc(const SweepResult& result, const SweepCell& cell) {
    RelDiffs out;
    for (const SweepCell& ref : result.cells) {
        if (ref.policy != "pmpc" || ref.alpha != cell.alpha || ref.seed != cell.seed || ref.failed)
            continue;
        if (ref.metrics.electricity_cost_eur > 0)
            out.cost = 100.0 * (cell.metrics.electricity_cost_eur - ref.metrics.electricity_cost_eur) /
                       ref.metrics.electricity_cost_eur;
        if (cell.metrics.filling_rate_pct && ref.metrics.filling_rate_pct &&
            *ref.metrics.filling_rate_pct > 0)
            out.fill = 100.0 * (*cell.metrics.filling_rate_pct - *ref.metrics.filling_rate_pct) /
                       *ref.metrics.filling_rate_pct;
        if (cell.metrics.full_satisfaction_pct && ref.metrics.full_satisfaction_pct &&
            *ref.metrics.full_satisfaction_pct > 0)
            out.full = 100.0 *
                       (*cell.metrics.full_satisfaction_pct - *ref.metrics.full_satisfaction_pct) /
                       *ref.metrics.full_satisfaction_pct;
        break;
    }
    return out;
}

std::string cell_file_tag(const SweepCell& c) {
    std::ostringstream os;
    os << c.policy << "_a" << fmt(c.alpha, 6) << "_s" << c.seed;
    return os.str();
}

} // namespace

void emit_reports(const SweepResult& result, const ExperimentConfig& config,
                  const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir))
        throw ParseError("emit_reports: cannot create output directory " + dir);

    std::ostringstream hh;
    hh << "# config_hash=" << std::hex << config.hash() << std::dec;
    const std::string header = hh.str();

    {
        std::ofstream os(dir + "/sweep_cells.csv");
        os << header << "\n";
        // wall-time measurements live in the step logs and the
        // human-readable table; metric tables stay byte-reproducible
        os << "policy,alpha,seed,cost_eur,filling_rate_pct,full_satisfaction_pct,penalty_steps,"
              "sessions,rel_cost_vs_pmpc_pct,rel_fill_vs_pmpc_pct,"
              "rel_full_vs_pmpc_pct,error\n";
        for (const SweepCell& c : result.cells) {
            RelDiffs rel = rel_vs_pmpc(result, c);
            os << c.policy << "," << fmt(c.alpha) << "," << c.seed << ",";
            if (c.failed) {
                os << ",,,,,,,," << '"' << c.error << '"' << "\n";
                continue;
            }
            os << fmt(c.metrics.electricity_cost_eur) << "," << opt_fmt(c.metrics.filling_rate_pct)
               << "," << opt_fmt(c.metrics.full_satisfaction_pct) << ","
               << c.metrics.penalty_step_count << ","
               << c.metrics.session_count << "," << opt_fmt(rel.cost) << "," << opt_fmt(rel.fill)
               << "," << opt_fmt(rel.full) << ",\n";
        }
    }

    // per-(policy, alpha) means over seeds
    {
        std::ofstream os(dir + "/sweep_summary.csv");
        os << header << "\n";
        os << "policy,alpha,seeds,cost_eur_mean,filling_rate_pct_mean,full_satisfaction_pct_mean,"
              "weighted_objective_mean\n";
        for (const std::string& pol : config.sweep_policies) {
            for (double alpha : config.sweep_alphas) {
                double cost = 0, fill = 0, full = 0, wobj = 0;
                int n = 0, nfill = 0;
                for (const SweepCell& c : result.cells) {
                    if (c.policy != pol || c.alpha != alpha || c.failed) continue;
                    cost += c.metrics.electricity_cost_eur;
                    wobj += c.totals.weighted_total_eur;
                    ++n;
                    if (c.metrics.filling_rate_pct) {
                        fill += *c.metrics.filling_rate_pct;
                        full += *c.metrics.full_satisfaction_pct;
                        ++nfill;
                    }
                }
                if (n == 0) continue;
                os << pol << "," << fmt(alpha) << "," << n << "," << fmt(cost / n) << ",";
                if (nfill > 0) os << fmt(fill / nfill) << "," << fmt(full / nfill);
                else os << "n/a,n/a";
                os << "," << fmt(wobj / n) << "\n";
            }
        }
    }

    // cost-satisfaction frontier data (one point per policy and alpha)
    {
        std::ofstream os(dir + "/frontier.csv");
        os << header << "\n";
        os << "policy,alpha,cost_eur_mean,filling_rate_pct_mean,full_satisfaction_pct_mean\n";
        for (const std::string& pol : config.sweep_policies) {
            for (double alpha : config.sweep_alphas) {
                double cost = 0, fill = 0, full = 0;
                int n = 0;
                for (const SweepCell& c : result.cells) {
                    if (c.policy != pol || c.alpha != alpha || c.failed || !c.metrics.filling_rate_pct)
                        continue;
                    cost += c.metrics.electricity_cost_eur;
                    fill += *c.metrics.filling_rate_pct;
                    full += *c.metrics.full_satisfaction_pct;
                    ++n;
                }
                if (n > 0)
                    os << pol << "," << fmt(alpha) << "," << fmt(cost / n) << "," << fmt(fill / n)
                       << "," << fmt(full / n) << "\n";
            }
        }
    }

    // per-session unserved-energy shares
    for (const SweepCell& c : result.cells) {
        if (c.failed) continue;
        std::ofstream os(dir + "/sessions_" + cell_file_tag(c) + ".csv");
        os << header << " seed=" << c.seed << "\n";
        os << "slot,end_step,request_kwh,final_remaining_kwh,unserved_share\n";
        for (const SessionOutcome& s : c.run.sessions) {
            os << s.slot << "," << s.end_t << "," << fmt(s.initial_request_kwh) << ","
               << fmt(s.final_remaining_kwh) << ","
               << fmt(s.initial_request_kwh > 0 ? s.final_remaining_kwh / s.initial_request_kwh : 0.0)
               << "\n";
        }
    }

    if (config.emit_step_logs) {
        for (const SweepCell& c : result.cells) {
            if (c.failed) continue;
            std::ofstream os(dir + "/steps_" + cell_file_tag(c) + ".csv");
            os << header << " seed=" << c.seed << "\n";
            os << "t,load_kwh,active_slots,energy_cost_eur,penalty_eur,dissatisfaction_units,"
                  "total_weighted_eur,solver_status,gap,nodes,lp_iterations,decide_ms,scenarios\n";
            for (const StepRecord& r : c.run.steps) {
                const char* status = r.diag.status == MilpStatus::Optimal ? "optimal"
                                     : r.diag.status == MilpStatus::NodeBudgetExhausted
                                         ? "node-budget-exhausted"
                                         : "infeasible";
                os << r.t << "," << fmt(r.load_kwh) << "," << r.active_slots << ","
                   << fmt(r.cost.energy_cost_eur) << "," << fmt(r.cost.penalty_eur) << ","
                   << fmt(r.cost.dissatisfaction_units) << "," << fmt(r.cost.total_weighted_eur)
                   << "," << status << "," << fmt(r.diag.gap, 6) << "," << r.diag.nodes << ","
                   << r.diag.lp_iterations << "," << fmt(r.diag.decide_ms, 6) << ","
                   << r.diag.scenario_count << "\n";
            }
        }
    }

    // human-readable table; the only file carrying a timestamp
    {
        std::ofstream os(dir + "/sweep_table.txt");
        const auto now = std::chrono::system_clock::now();
        const std::time_t tt = std::chrono::system_clock::to_time_t(now);
        os << "# generated " << format_timestamp(static_cast<EpochSeconds>(tt)) << "\n";
        os << header << "\n\n";
        char line[256];
        std::snprintf(line, sizeof line, "%-8s %-10s %-6s %-14s %-12s %-12s %-10s %-10s\n", "policy",
                      "alpha", "seed", "cost_eur", "fill_%", "full_%", "vs_pmpc", "mean_ms");
        os << line;
        for (const SweepCell& c : result.cells) {
            if (c.failed) {
                std::snprintf(line, sizeof line, "%-8s %-10g %-6llu FAILED: %s\n", c.policy.c_str(),
                              c.alpha, static_cast<unsigned long long>(c.seed), c.error.c_str());
                os << line;
                continue;
            }
            RelDiffs rel = rel_vs_pmpc(result, c);
            std::snprintf(line, sizeof line, "%-8s %-10g %-6llu %-14.2f %-12s %-12s %+-9.1f%% %.2f\n",
                          c.policy.c_str(), c.alpha, static_cast<unsigned long long>(c.seed),
                          c.metrics.electricity_cost_eur,
                          opt_fmt(c.metrics.filling_rate_pct).c_str(),
                          opt_fmt(c.metrics.full_satisfaction_pct).c_str(),
                          rel.cost ? *rel.cost : 0.0, c.metrics.mean_decide_ms);
            os << line;
        }
    }
}

} // namespace evcs
