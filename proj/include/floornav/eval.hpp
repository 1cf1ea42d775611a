#pragma once
// Benchmark runner and metrics: SR, SPL, mean collision counts over
// successes, the full threshold sweep, and CSV/JSON result tables.
// Start/goal pairs are sampled once per scene and shared by every method.

#include <fstream>
#include <optional>
#include <sstream>
#include <thread>
#include <vector>

#include "json.hpp"

#include "floornav/agents.hpp"
#include "floornav/core.hpp"
#include "floornav/rng.hpp"

namespace floornav {

// judge() semantics restated over a record
inline bool succeeded(const EvalRecord& r, double tau_d, std::optional<int> tau_c,
                      double max_travel = 100.0) {
    if (r.final_distance > tau_d) return false;
    if (tau_c.has_value() && r.collisions > *tau_c) return false;
    if (r.traveled > max_travel) return false;
    return true;
}

inline double sr(const std::vector<EvalRecord>& records, double tau_d, std::optional<int> tau_c,
                 double max_travel = 100.0) {
    if (records.empty()) throw Error("sr: empty record set");
    double hits = 0.0;
    for (const auto& r : records)
        if (succeeded(r, tau_d, tau_c, max_travel)) hits += 1.0;
    return hits / static_cast<double>(records.size());
}

// mean over records of S_i * l_i / max(p_i, l_i)
inline double spl(const std::vector<EvalRecord>& records, double tau_d, std::optional<int> tau_c,
                  double max_travel = 100.0) {
    if (records.empty()) throw Error("spl: empty record set");
    double total = 0.0;
    for (const auto& r : records) {
        if (r.shortest <= 0.0) throw Error("spl: nonpositive shortest length");
        if (succeeded(r, tau_d, tau_c, max_travel))
            total += r.shortest / std::max(r.traveled, r.shortest);
    }
    return total / static_cast<double>(records.size());
}

// mean collisions over successful records; empty optional when none succeed
inline std::optional<double> mean_collisions(const std::vector<EvalRecord>& records, double tau_d,
                                             std::optional<int> tau_c,
                                             double max_travel = 100.0) {
    double total = 0.0;
    int n = 0;
    for (const auto& r : records)
        if (succeeded(r, tau_d, tau_c, max_travel)) {
            total += r.collisions;
            n += 1;
        }
    if (n == 0) return std::nullopt;
    return total / n;
}

struct TableCell {
    std::string method;
    double tau_d = 0.0;
    std::optional<int> tau_c;
    double sr = 0.0;
    double spl = 0.0;
    std::optional<double> mean_collisions;
    int n_episodes = 0;
};

struct ResultTable {
    std::vector<TableCell> cells;
    std::vector<EvalRecord> records;
    std::vector<std::string> skipped_scenes;
};

struct BenchConfig {
    int pairs_per_scene = 10;
    std::vector<double> tau_d_sweep = {0.25, 0.30, 0.35};
    std::vector<std::optional<int>> tau_c_sweep = {10, 30, 50, std::nullopt};
    int workers = 1;
    int pair_tries = 400;
};

struct EvalPair {
    Pose start;
    WorldPoint goal;
};

// Feasible pairs: >= 3 m apart and reachable on the inflated truth map.
inline std::vector<EvalPair> sample_pairs(const Scene& scene, int count, uint64_t seed,
                                          const SimConfig& cfg, int max_tries = 400) {
    SampleOptions opts;
    opts.agent_radius = cfg.agent_radius;
    GridMap inflated = planning_map(scene, opts);
    std::vector<PixelCoord> free_cells;
    for (int r = 0; r < inflated.height; ++r)
        for (int c = 0; c < inflated.width; ++c)
            if (inflated.at(c, r) == Cell::Free) free_cells.push_back({c, r});
    if (free_cells.size() < 2) return {};

    Rng rng(derive_seed(seed, "pairs:" + scene.id));
    std::vector<EvalPair> pairs;
    int tries = 0;
    while (static_cast<int>(pairs.size()) < count && tries++ < max_tries) {
        PixelCoord su = free_cells[rng.uniform_int(free_cells.size())];
        PixelCoord gu = free_cells[rng.uniform_int(free_cells.size())];
        WorldPoint sp = pixel_to_world(su, inflated);
        WorldPoint gp = pixel_to_world(gu, inflated);
        if (distance(sp, gp) < 3.0) continue;
        if (!astar(inflated, su, gu).reachable) continue;
        pairs.push_back({{sp, rng.uniform(0.0, 2.0 * M_PI)}, gp});
    }
    return pairs;
}

inline ResultTable run_benchmark(const std::vector<AgentSpec>& specs,
                                 const std::vector<const Scene*>& scenes, const SimConfig& cfg,
                                 const BenchConfig& bench, uint64_t seed,
                                 std::vector<StepLog>* logs = nullptr) {
    if (scenes.empty()) throw Error("run_benchmark: no scenes");
    ResultTable out;

    struct Task {
        const AgentSpec* spec;
        const Scene* scene;
        int pair_index;
        EvalPair pair;
        uint64_t seed;
    };
    std::vector<Task> tasks;
    for (const Scene* scene : scenes) {
        auto pairs = sample_pairs(*scene, bench.pairs_per_scene, seed, cfg, bench.pair_tries);
        if (pairs.empty()) {
            out.skipped_scenes.push_back(scene->id);
            continue;
        }
        for (const auto& spec : specs)
            for (size_t pi = 0; pi < pairs.size(); ++pi)
                tasks.push_back({&spec, scene, static_cast<int>(pi), pairs[pi],
                                 derive_seed(seed, "episode:" + scene->id + ":" + spec.name, pi)});
    }

    out.records.resize(tasks.size());
    if (logs) logs->resize(tasks.size());
    auto run_range = [&](size_t lo, size_t hi) {
        for (size_t i = lo; i < hi; ++i) {
            const Task& t = tasks[i];
            EvalRecord rec = run_episode(*t.spec, *t.scene, t.pair.start, t.pair.goal, cfg, t.seed,
                                         logs ? &(*logs)[i] : nullptr);
            rec.pair_index = t.pair_index;
            out.records[i] = rec;
        }
    };
    int W = std::max(1, bench.workers);
    if (W == 1 || tasks.size() < 2) {
        run_range(0, tasks.size());
    } else {
        std::vector<std::thread> threads;
        for (int w = 0; w < W; ++w)
            threads.emplace_back(run_range, tasks.size() * w / W, tasks.size() * (w + 1) / W);
        for (auto& th : threads) th.join();
    }

    for (const auto& spec : specs) {
        std::vector<EvalRecord> mine;
        for (const auto& r : out.records)
            if (r.method == spec.name) mine.push_back(r);
        if (mine.empty()) continue;
        for (double td : bench.tau_d_sweep)
            for (const auto& tc : bench.tau_c_sweep) {
                TableCell cell;
                cell.method = spec.name;
                cell.tau_d = td;
                cell.tau_c = tc;
                cell.sr = sr(mine, td, tc, cfg.max_travel);
                cell.spl = spl(mine, td, tc, cfg.max_travel);
                cell.mean_collisions = mean_collisions(mine, td, tc, cfg.max_travel);
                cell.n_episodes = static_cast<int>(mine.size());
                out.cells.push_back(cell);
            }
    }
    return out;
}

namespace detail {

inline std::string fmt_double(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

}  // namespace detail

inline void write_results_csv(const ResultTable& table, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open for writing: " + path);
    f << "method,tau_d,tau_c,sr,spl,mean_collisions,n_episodes\n";
    for (const auto& c : table.cells) {
        f << c.method << "," << detail::fmt_double(c.tau_d) << ","
          << (c.tau_c ? std::to_string(*c.tau_c) : "inf") << "," << detail::fmt_double(c.sr)
          << "," << detail::fmt_double(c.spl) << ","
          << (c.mean_collisions ? detail::fmt_double(*c.mean_collisions) : "") << ","
          << c.n_episodes << "\n";
    }
}

inline void write_results_json(const ResultTable& table, const std::string& path) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& c : table.cells) {
        nlohmann::ordered_json jc;
        jc["method"] = c.method;
        jc["tau_d"] = c.tau_d;
        if (c.tau_c)
            jc["tau_c"] = *c.tau_c;
        else
            jc["tau_c"] = "inf";
        jc["sr"] = c.sr;
        jc["spl"] = c.spl;
        if (c.mean_collisions)
            jc["mean_collisions"] = *c.mean_collisions;
        else
            jc["mean_collisions"] = nullptr;
        jc["n_episodes"] = c.n_episodes;
        cells.push_back(jc);
    }
    j["table"] = std::move(cells);
    nlohmann::ordered_json recs = nlohmann::ordered_json::array();
    for (const auto& r : table.records) {
        nlohmann::ordered_json jr;
        jr["method"] = r.method;
        jr["scene_id"] = r.scene_id;
        jr["pair_index"] = r.pair_index;
        jr["final_distance"] = r.final_distance;
        jr["collisions"] = r.collisions;
        jr["traveled"] = r.traveled;
        jr["shortest"] = r.shortest;
        jr["steps"] = r.steps;
        jr["replans"] = r.replans;
        recs.push_back(jr);
    }
    j["records"] = std::move(recs);
    j["skipped_scenes"] = table.skipped_scenes;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open for writing: " + path);
    f << j.dump(2) << "\n";
}

// step logs (consumed by the renderer)

inline void write_step_log(const StepLog& log, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open for writing: " + path);
    nlohmann::ordered_json head;
    head["type"] = "header";
    head["method"] = log.method;
    head["scene_id"] = log.scene_id;
    head["start"] = {{"x", log.start.position.x}, {"y", log.start.position.y},
                     {"theta", log.start.theta}};
    head["goal"] = {{"x", log.goal.x}, {"y", log.goal.y}};
    f << head.dump() << "\n";
    for (const auto& e : log.entries) {
        nlohmann::ordered_json je;
        je["type"] = "step";
        je["pose"] = {{"x", e.pose.position.x}, {"y", e.pose.position.y}, {"theta", e.pose.theta}};
        je["action"] = {e.action.x, e.action.y};
        je["collided"] = e.collided;
        je["replanned"] = e.replanned;
        f << je.dump() << "\n";
    }
}

inline StepLog read_step_log(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open: " + path);
    StepLog log;
    std::string line;
    size_t line_no = 0;
    bool have_header = false;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::ordered_json j;
        try {
            j = nlohmann::ordered_json::parse(line);
        } catch (const std::exception& e) {
            throw Error("step log " + path + " line " + std::to_string(line_no) + ": " + e.what());
        }
        if (j.value("type", "") == "header") {
            log.method = j.at("method");
            log.scene_id = j.at("scene_id");
            log.start = {{j.at("start").at("x"), j.at("start").at("y")}, j.at("start").at("theta")};
            log.goal = {j.at("goal").at("x"), j.at("goal").at("y")};
            have_header = true;
        } else {
            StepLogEntry e;
            e.pose = {{j.at("pose").at("x"), j.at("pose").at("y")}, j.at("pose").at("theta")};
            e.action = {j.at("action")[0], j.at("action")[1]};
            e.collided = j.at("collided");
            e.replanned = j.at("replanned");
            log.entries.push_back(e);
        }
    }
    if (!have_header) throw Error("step log missing header line: " + path);
    return log;
}

}  // namespace floornav
