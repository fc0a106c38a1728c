#pragma once

#include <map>

#include "gapbench/agents/train.hpp"
#include "gapbench/bench/evaluate.hpp"
#include "gapbench/core/csv.hpp"
#include "gapbench/core/svg.hpp"
#include "json.hpp"

namespace gapbench::bench {

// One trained agent evaluated on one source. The matrix aggregates these
// across seeds.
struct RunRecord {
    std::string task;
    std::string train_regime;
    std::string policy;
    std::string eval_source;
    uint64_t seed = 0;
    int train_steps = 0;
    EvalResult eval;
};

inline nlohmann::json cell_to_json(const EvalCell& c) {
    return {{"task", c.task},
            {"source", c.source},
            {"policy", c.policy},
            {"tier", c.tier},
            {"n", c.n},
            {"successes", c.successes},
            {"success_rate", c.success_rate},
            {"mean_return", c.mean_return},
            {"mean_final_distance", c.mean_final_distance}};
}

inline EvalCell cell_from_json(const nlohmann::json& j) {
    EvalCell c;
    c.task = j.at("task");
    c.source = j.at("source");
    c.policy = j.at("policy");
    c.tier = j.at("tier");
    c.n = j.at("n");
    c.successes = j.at("successes");
    c.success_rate = j.at("success_rate");
    c.mean_return = j.at("mean_return");
    c.mean_final_distance = j.at("mean_final_distance");
    return c;
}

inline nlohmann::json run_to_json(const RunRecord& r) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : r.eval.cells) cells.push_back(cell_to_json(c));
    return {{"task", r.task},
            {"train_regime", r.train_regime},
            {"policy", r.policy},
            {"eval_source", r.eval_source},
            {"seed", r.seed},
            {"train_steps", r.train_steps},
            {"n", r.eval.n},
            {"successes", r.eval.successes},
            {"success_rate", r.eval.success_rate},
            {"cells", cells}};
}

inline RunRecord run_from_json(const nlohmann::json& j) {
    RunRecord r;
    r.task = j.at("task");
    r.train_regime = j.at("train_regime");
    r.policy = j.at("policy");
    r.eval_source = j.at("eval_source");
    r.seed = j.at("seed");
    r.train_steps = j.at("train_steps");
    r.eval.n = j.at("n");
    r.eval.successes = j.at("successes");
    r.eval.success_rate = j.at("success_rate");
    for (const auto& cj : j.at("cells")) r.eval.cells.push_back(cell_from_json(cj));
    return r;
}

inline void save_run(const std::string& path, const RunRecord& r) {
    std::ofstream out(path);
    require(out.good(), "cannot write run record: " + path);
    out << run_to_json(r).dump(2) << '\n';
}

inline RunRecord load_run(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot read run record: " + path);
    nlohmann::json j;
    in >> j;
    return run_from_json(j);
}

namespace detail {

// Canonical display orders; unknown names sort after known ones, alphabetically.
inline int rank_of(const std::string& s, const std::vector<std::string>& order) {
    for (std::size_t i = 0; i < order.size(); ++i)
        if (order[i] == s) return static_cast<int>(i);
    return static_cast<int>(order.size());
}

inline std::vector<std::string> ordered_unique(std::vector<std::string> vals,
                                               const std::vector<std::string>& order) {
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    std::stable_sort(vals.begin(), vals.end(), [&](const auto& a, const auto& b) {
        const int ra = rank_of(a, order), rb = rank_of(b, order);
        return ra != rb ? ra < rb : a < b;
    });
    return vals;
}

inline const std::vector<std::string>& regime_order() {
    static const std::vector<std::string> v{"nr", "dr", "rfi", "rfi_plus"};
    return v;
}
inline const std::vector<std::string>& policy_order() {
    static const std::vector<std::string> v{"conservative", "adaptive", "uposi", "epi"};
    return v;
}
inline const std::vector<std::string>& task_order() {
    static const std::vector<std::string> v{"reach", "push", "slide"};
    return v;
}
inline const std::vector<std::string>& tier_order() {
    static const std::vector<std::string> v{"easy", "intermediate", "hard"};
    return v;
}

struct MatrixCellAgg {
    std::vector<double> seed_rates;  // tier success rate, one per seed
    int n = 0;                       // episodes behind one seed's rate
};

// (regime, policy) x (task, tier) -> rates across seeds
using MatrixAgg = std::map<std::pair<std::string, std::string>,
                           std::map<std::pair<std::string, std::string>, MatrixCellAgg>>;

inline MatrixAgg aggregate(const std::vector<RunRecord>& runs) {
    MatrixAgg agg;
    for (const auto& r : runs) {
        for (const auto& c : r.eval.cells) {
            auto& cell = agg[{r.train_regime, r.policy}][{r.task, c.tier}];
            cell.seed_rates.push_back(c.success_rate);
            cell.n = c.n;
        }
    }
    return agg;
}

}  // namespace detail

// Success-rate table: one row per (training regime, policy family), one
// column per (task, goal tier), each cell the median across seeds. Missing
// combinations stay blank.
inline void write_matrix_csv(const std::string& path, const std::vector<RunRecord>& runs) {
    std::vector<std::string> regimes, policies, tasks, tiers;
    for (const auto& r : runs) {
        regimes.push_back(r.train_regime);
        policies.push_back(r.policy);
        tasks.push_back(r.task);
        for (const auto& c : r.eval.cells) tiers.push_back(c.tier);
    }
    regimes = detail::ordered_unique(regimes, detail::regime_order());
    policies = detail::ordered_unique(policies, detail::policy_order());
    tasks = detail::ordered_unique(tasks, detail::task_order());
    tiers = detail::ordered_unique(tiers, detail::tier_order());
    const auto agg = detail::aggregate(runs);

    CsvWriter csv(path);
    std::vector<std::string> head{"regime", "policy"};
    for (const auto& t : tasks)
        for (const auto& g : tiers) head.push_back(t + "/" + g);
    csv.header(head);
    for (const auto& reg : regimes) {
        for (const auto& pol : policies) {
            const auto row_it = agg.find({reg, pol});
            std::vector<std::string> row{reg, pol};
            for (const auto& t : tasks) {
                for (const auto& g : tiers) {
                    std::string value;
                    if (row_it != agg.end()) {
                        const auto cell_it = row_it->second.find({t, g});
                        if (cell_it != row_it->second.end())
                            value = fmt_double(median(cell_it->second.seed_rates));
                    }
                    row.push_back(value);
                }
            }
            csv.row_strings(row);
        }
    }
}

// Full nested aggregate with per-seed detail; combinations that were never
// run are recorded as explicit nulls so gaps are visible downstream.
inline void write_summary_json(const std::string& path, const std::vector<RunRecord>& runs) {
    std::vector<std::string> regimes, policies, tasks, tiers;
    for (const auto& r : runs) {
        regimes.push_back(r.train_regime);
        policies.push_back(r.policy);
        tasks.push_back(r.task);
        for (const auto& c : r.eval.cells) tiers.push_back(c.tier);
    }
    regimes = detail::ordered_unique(regimes, detail::regime_order());
    policies = detail::ordered_unique(policies, detail::policy_order());
    tasks = detail::ordered_unique(tasks, detail::task_order());
    tiers = detail::ordered_unique(tiers, detail::tier_order());
    const auto agg = detail::aggregate(runs);

    nlohmann::json root;
    root["runs"] = static_cast<int>(runs.size());
    nlohmann::json table;
    for (const auto& t : tasks) {
        for (const auto& reg : regimes) {
            for (const auto& pol : policies) {
                nlohmann::json entry;
                const auto row_it = agg.find({reg, pol});
                // Overall = episode-weighted over tiers, median across seeds.
                std::map<uint64_t, std::pair<int, int>> by_seed;  // seed -> (succ, n)
                for (const auto& r : runs) {
                    if (r.train_regime != reg || r.policy != pol || r.task != t) continue;
                    for (const auto& c : r.eval.cells) {
                        by_seed[r.seed].first += c.successes;
                        by_seed[r.seed].second += c.n;
                    }
                }
                if (by_seed.empty()) {
                    table[t][reg][pol] = nullptr;
                    continue;
                }
                std::vector<double> overall;
                for (const auto& [s, sn] : by_seed)
                    overall.push_back(static_cast<double>(sn.first) / sn.second);
                entry["seeds"] = static_cast<int>(by_seed.size());
                entry["median_success"] = median(overall);
                // by_seed non-empty implies this (regime, policy) row exists.
                require(row_it != agg.end(), "summary: aggregate row missing");
                for (const auto& g : tiers) {
                    const auto cell_it = row_it->second.find({t, g});
                    if (cell_it == row_it->second.end()) {
                        entry["tiers"][g] = nullptr;
                    } else {
                        entry["tiers"][g] = {
                            {"median_success", median(cell_it->second.seed_rates)},
                            {"episodes_per_seed", cell_it->second.n}};
                    }
                }
                table[t][reg][pol] = entry;
            }
        }
    }
    root["matrix"] = table;
    std::ofstream out(path);
    require(out.good(), "cannot write summary: " + path);
    out << root.dump(2) << '\n';
}

// Overlays recorded planar paths per goal tier; solid for successes, dashed
// for failures, markers at the goals.
inline void write_trajectories_svg(const std::string& path,
                                   const std::vector<Trajectory>& trajectories,
                                   const std::string& title) {
    require(!trajectories.empty(), "trajectory figure: nothing to draw");
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& tr : trajectories) {
        xmin = std::min({xmin, tr.path.col(0).minCoeff(), tr.goal(0)});
        xmax = std::max({xmax, tr.path.col(0).maxCoeff(), tr.goal(0)});
        ymin = std::min({ymin, tr.path.col(1).minCoeff(), tr.goal(1)});
        ymax = std::max({ymax, tr.path.col(1).maxCoeff(), tr.goal(1)});
    }
    const double xpad = std::max(1e-3, 0.08 * (xmax - xmin));
    const double ypad = std::max(1e-3, 0.08 * (ymax - ymin));
    SvgFigure fig(xmin - xpad, xmax + xpad, ymin - ypad, ymax + ypad);
    fig.title(title);
    fig.xlabel("x [m]");
    fig.ylabel("y [m]");
    static const std::map<std::string, const char*> kTierColor{
        {"easy", "#2ca02c"}, {"intermediate", "#1f77b4"}, {"hard", "#d62728"}};
    std::vector<std::string> seen;
    for (const auto& tr : trajectories) {
        const auto it = kTierColor.find(tr.tier);
        const char* color = it != kTierColor.end() ? it->second : "#7f7f7f";
        std::vector<double> xs(tr.path.rows()), ys(tr.path.rows());
        for (long i = 0; i < tr.path.rows(); ++i) {
            xs[static_cast<std::size_t>(i)] = tr.path(i, 0);
            ys[static_cast<std::size_t>(i)] = tr.path(i, 1);
        }
        fig.polyline(xs, ys, color, tr.success ? 1.5 : 1.0, tr.success ? "" : "4,3");
        if (std::find(seen.begin(), seen.end(), tr.tier) == seen.end()) {
            seen.push_back(tr.tier);
            fig.legend_entry(tr.tier, color);
            fig.marker(tr.goal(0), tr.goal(1), color);
        }
    }
    fig.write(path);
}

inline void write_curve_csv(const std::string& path,
                            const std::vector<agents::CurvePoint>& curve) {
    CsvWriter csv(path);
    csv.header({"env_steps", "mean_return", "success_rate"});
    for (const auto& p : curve)
        csv.row({static_cast<double>(p.env_steps), p.mean_return, p.success_rate});
}

}  // namespace gapbench::bench
