#pragma once
// Episode sampling on the inflated truth map and line-delimited JSON
// dataset storage. Start/goal pairs are drawn uniformly from inflated-free
// cells, rejected until >= 3 m apart and reachable, and the demonstration
// is the A* path with orientations and per-step actions attached.

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "floornav/core.hpp"
#include "floornav/planner.hpp"
#include "floornav/rng.hpp"
#include "floornav/scene.hpp"

namespace floornav {

struct Episode {
    std::string scene_id;
    Pose start;
    WorldPoint goal;
    Trajectory trajectory;
    std::vector<Action> actions;
    double shortest_length = 0.0;
};

struct SampleOptions {
    double agent_radius = kDefaultAgentRadius;
    // extra planning inflation beyond the agent radius, in cells;
    // one cell makes disk-safe replay a geometric guarantee
    double margin_cells = 1.0;
    double min_separation = 3.0;  // meters, straight line
    int max_tries = 1000;
};

inline double planning_radius(const GridMap& map, const SampleOptions& opts) {
    return opts.agent_radius + opts.margin_cells * map.resolution;
}

inline GridMap planning_map(const Scene& scene, const SampleOptions& opts = {}) {
    return inflate(scene.truth_map, planning_radius(scene.truth_map, opts));
}

// `inflated` must be planning_map(scene, opts); passed in so callers can
// amortize it across many episodes of one scene.
inline Episode sample_episode(const Scene& scene, const GridMap& inflated, uint64_t seed,
                              const SampleOptions& opts = {}) {
    std::vector<PixelCoord> free_cells;
    for (int r = 0; r < inflated.height; ++r)
        for (int c = 0; c < inflated.width; ++c)
            if (inflated.at(c, r) == Cell::Free) free_cells.push_back({c, r});
    if (free_cells.size() < 2)
        throw Error("sample_episode: scene " + scene.id + " has no usable free space");

    Rng rng(derive_seed(seed, "sample_episode"));
    for (int attempt = 0; attempt < opts.max_tries; ++attempt) {
        PixelCoord su = free_cells[rng.uniform_int(free_cells.size())];
        PixelCoord gu = free_cells[rng.uniform_int(free_cells.size())];
        WorldPoint sp = pixel_to_world(su, inflated);
        WorldPoint gp = pixel_to_world(gu, inflated);
        if (distance(sp, gp) < opts.min_separation) continue;
        AstarResult plan = astar(inflated, su, gu);
        if (!plan.reachable) continue;

        Episode ep;
        ep.scene_id = scene.id;
        ep.trajectory = assign_orientations(path_to_world(plan.path, inflated));
        ep.actions = path_to_actions(ep.trajectory);
        ep.start = ep.trajectory.poses.front();
        ep.goal = gp;
        ep.shortest_length = path_length(ep.trajectory);
        return ep;
    }
    throw Error("sample_episode: rejection budget exhausted for scene " + scene.id);
}

inline Episode sample_episode(const Scene& scene, uint64_t seed, const SampleOptions& opts = {}) {
    return sample_episode(scene, planning_map(scene, opts), seed, opts);
}

// Paper-scale counts divided by a desk scale factor, floor with minimum 1.
inline int episodes_per_scene(SizeClass size_class, int scale_factor = 10) {
    if (scale_factor < 1) throw Error("episodes_per_scene: scale_factor must be >= 1");
    int full = 0;
    switch (size_class) {
        case SizeClass::Small: full = 150; break;
        case SizeClass::Medium: full = 180; break;
        case SizeClass::Large: full = 200; break;
    }
    return std::max(1, full / scale_factor);
}

struct DistStats {
    double min = 0.0, max = 0.0, mean = 0.0, median = 0.0;
};

struct DatasetStats {
    DistStats straight_line;
    DistStats travel;
    size_t count = 0;
};

namespace detail {

inline DistStats dist_stats(std::vector<double> v) {
    DistStats s;
    std::sort(v.begin(), v.end());
    s.min = v.front();
    s.max = v.back();
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    size_t n = v.size();
    s.median = (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    return s;
}

}  // namespace detail

inline DatasetStats compute_stats(const std::vector<Episode>& episodes) {
    if (episodes.empty()) throw Error("compute_stats: empty episode set");
    std::vector<double> straight, travel;
    straight.reserve(episodes.size());
    travel.reserve(episodes.size());
    for (const auto& ep : episodes) {
        straight.push_back(distance(ep.start.position, ep.goal));
        travel.push_back(path_length(ep.trajectory));
    }
    DatasetStats s;
    s.straight_line = detail::dist_stats(std::move(straight));
    s.travel = detail::dist_stats(std::move(travel));
    s.count = episodes.size();
    return s;
}

inline nlohmann::ordered_json episode_to_json(const Episode& ep) {
    nlohmann::ordered_json j;
    j["scene_id"] = ep.scene_id;
    j["start"] = {{"x", ep.start.position.x}, {"y", ep.start.position.y}, {"theta", ep.start.theta}};
    j["goal"] = {{"x", ep.goal.x}, {"y", ep.goal.y}};
    nlohmann::ordered_json pos = nlohmann::ordered_json::array();
    nlohmann::ordered_json ori = nlohmann::ordered_json::array();
    for (const auto& p : ep.trajectory.poses) {
        pos.push_back({p.position.x, p.position.y});
        ori.push_back(p.theta);
    }
    j["positions"] = std::move(pos);
    j["orientations"] = std::move(ori);
    nlohmann::ordered_json act = nlohmann::ordered_json::array();
    for (const auto& a : ep.actions) act.push_back({a.x, a.y});
    j["actions"] = std::move(act);
    j["shortest_length"] = ep.shortest_length;
    return j;
}

inline Episode episode_from_json(const nlohmann::ordered_json& j) {
    Episode ep;
    ep.scene_id = j.at("scene_id").get<std::string>();
    ep.start.position = {j.at("start").at("x").get<double>(), j.at("start").at("y").get<double>()};
    ep.start.theta = j.at("start").at("theta").get<double>();
    ep.goal = {j.at("goal").at("x").get<double>(), j.at("goal").at("y").get<double>()};
    const auto& pos = j.at("positions");
    const auto& ori = j.at("orientations");
    if (pos.size() != ori.size()) throw Error("positions/orientations length mismatch");
    ep.trajectory.poses.resize(pos.size());
    for (size_t i = 0; i < pos.size(); ++i)
        ep.trajectory.poses[i] = {{pos[i][0].get<double>(), pos[i][1].get<double>()},
                                  ori[i].get<double>()};
    for (const auto& a : j.at("actions"))
        ep.actions.push_back({a[0].get<double>(), a[1].get<double>()});
    ep.shortest_length = j.at("shortest_length").get<double>();
    return ep;
}

inline void save_dataset(const std::vector<Episode>& episodes, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open for writing: " + path);
    for (const auto& ep : episodes) f << episode_to_json(ep).dump() << "\n";
}

inline std::vector<Episode> load_dataset(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open: " + path);
    std::vector<Episode> episodes;
    std::string line;
    size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            episodes.push_back(episode_from_json(nlohmann::ordered_json::parse(line)));
        } catch (const std::exception& e) {
            throw Error("dataset " + path + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return episodes;
}

}  // namespace floornav
