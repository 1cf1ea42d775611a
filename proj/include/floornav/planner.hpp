#pragma once
// Grid path planning: A* over 8-connected moves (straight cost 1,
// diagonal sqrt(2), no corner cutting) with octile heuristic and
// deterministic tie-breaking, plus trajectory post-processing.
//
// Path costs are tracked as integer (straight, diagonal) step counts and
// materialized as s + d*sqrt(2) in one rounding, so two optimal searches
// produce bit-identical costs.

#include <cmath>
#include <queue>
#include <vector>

#include "floornav/core.hpp"
#include "floornav/grid.hpp"

namespace floornav {

struct PixelPath {
    std::vector<PixelCoord> cells;  // start..goal inclusive
};

struct AstarResult {
    bool reachable = false;
    PixelPath path;
    int straight_steps = 0;
    int diag_steps = 0;

    double cost_cells() const { return straight_steps + diag_steps * std::sqrt(2.0); }
};

namespace detail {

struct StepCount {
    int s = 0;  // straight moves
    int d = 0;  // diagonal moves
    double value() const { return s + d * std::sqrt(2.0); }
};

struct OpenEntry {
    double f;
    double h;
    int idx;  // row-major cell index
    StepCount g;
};

struct OpenOrder {
    bool operator()(const OpenEntry& a, const OpenEntry& b) const {
        if (a.f != b.f) return a.f > b.f;
        if (a.h != b.h) return a.h > b.h;
        return a.idx > b.idx;
    }
};

inline StepCount octile(const PixelCoord& a, const PixelCoord& b) {
    int dx = std::abs(a.col - b.col);
    int dy = std::abs(a.row - b.row);
    return {std::max(dx, dy) - std::min(dx, dy), std::min(dx, dy)};
}

}  // namespace detail

inline AstarResult astar(const GridMap& grid, const PixelCoord& start, const PixelCoord& goal) {
    if (!grid.in_bounds(start) || !grid.in_bounds(goal))
        throw Error("astar: start/goal out of bounds");
    if (!grid.is_free(start)) throw Error("astar: start cell is not free");
    if (!grid.is_free(goal)) throw Error("astar: goal cell is not free");

    const int W = grid.width, H = grid.height;
    const size_t N = static_cast<size_t>(W) * H;
    std::vector<detail::StepCount> best(N);
    std::vector<uint8_t> has_best(N, 0), closed(N, 0);
    std::vector<int> parent(N, -1);

    auto cell_idx = [W](const PixelCoord& u) { return u.row * W + u.col; };

    std::priority_queue<detail::OpenEntry, std::vector<detail::OpenEntry>, detail::OpenOrder> open;
    {
        detail::StepCount h0 = detail::octile(start, goal);
        best[cell_idx(start)] = {0, 0};
        has_best[cell_idx(start)] = 1;
        open.push({h0.value(), h0.value(), cell_idx(start), {0, 0}});
    }

    const int dc8[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    const int dr8[8] = {0, 0, 1, -1, 1, -1, 1, -1};

    AstarResult result;
    int goal_idx = cell_idx(goal);
    while (!open.empty()) {
        detail::OpenEntry cur = open.top();
        open.pop();
        if (closed[cur.idx]) continue;
        if (cur.g.s != best[cur.idx].s || cur.g.d != best[cur.idx].d) continue;  // stale
        closed[cur.idx] = 1;
        if (cur.idx == goal_idx) break;

        int cc = cur.idx % W, cr = cur.idx / W;
        for (int k = 0; k < 8; ++k) {
            int nc = cc + dc8[k], nr = cr + dr8[k];
            if (!grid.in_bounds(nc, nr) || grid.is_obstacle(nc, nr)) continue;
            bool diag = (k >= 4);
            if (diag && (grid.is_obstacle(cc + dc8[k], cr) || grid.is_obstacle(cc, cr + dr8[k])))
                continue;  // no corner cutting
            detail::StepCount ng{cur.g.s + (diag ? 0 : 1), cur.g.d + (diag ? 1 : 0)};
            int ni = nr * W + nc;
            if (has_best[ni] && ng.value() >= best[ni].value()) continue;
            best[ni] = ng;
            has_best[ni] = 1;
            parent[ni] = cur.idx;
            detail::StepCount h = detail::octile({nc, nr}, goal);
            detail::StepCount f{ng.s + h.s, ng.d + h.d};
            open.push({f.value(), h.value(), ni, ng});
        }
    }

    if (!closed[goal_idx]) return result;  // explicit no-path

    result.reachable = true;
    result.straight_steps = best[goal_idx].s;
    result.diag_steps = best[goal_idx].d;
    std::vector<PixelCoord> rev;
    for (int i = goal_idx; i != -1; i = parent[i]) rev.push_back({i % W, i / W});
    result.path.cells.assign(rev.rbegin(), rev.rend());
    return result;
}

inline std::vector<WorldPoint> path_to_world(const PixelPath& path, const GridMap& grid) {
    std::vector<WorldPoint> pts;
    pts.reserve(path.cells.size());
    for (const auto& u : path.cells) pts.push_back(pixel_to_world(u, grid));
    return pts;
}

struct Trajectory {
    std::vector<Pose> poses;
};

inline double path_length(const std::vector<WorldPoint>& pts) {
    if (pts.empty()) throw Error("path_length: empty path");
    double total = 0.0;
    for (size_t i = 1; i < pts.size(); ++i) total += distance(pts[i - 1], pts[i]);
    return total;
}

inline double path_length(const PixelPath& path, const GridMap& grid) {
    return path_length(path_to_world(path, grid));
}

inline double path_length(const Trajectory& traj) {
    if (traj.poses.empty()) throw Error("path_length: empty trajectory");
    double total = 0.0;
    for (size_t i = 1; i < traj.poses.size(); ++i)
        total += distance(traj.poses[i - 1].position, traj.poses[i].position);
    return total;
}

// Orientation at i points at the sixth future point (clamped to the end);
// a zero difference reuses the previous orientation (0 at the start).
inline Trajectory assign_orientations(const std::vector<WorldPoint>& points) {
    if (points.size() < 2) throw Error("assign_orientations: need at least 2 points");
    Trajectory traj;
    traj.poses.resize(points.size());
    const size_t last = points.size() - 1;
    for (size_t i = 0; i < points.size(); ++i) {
        size_t j = std::min(i + 6, last);
        Vec2 diff = points[j] - points[i];
        double theta;
        if (diff.x == 0.0 && diff.y == 0.0)
            theta = (i == 0) ? 0.0 : traj.poses[i - 1].theta;
        else
            theta = std::atan2(diff.y, diff.x);
        traj.poses[i] = {points[i], theta};
    }
    return traj;
}

// a_t = p_t - p_{t-1}; exactly len-1 actions.
inline std::vector<Action> path_to_actions(const Trajectory& traj) {
    if (traj.poses.size() < 2) throw Error("path_to_actions: need at least 2 poses");
    std::vector<Action> actions;
    actions.reserve(traj.poses.size() - 1);
    for (size_t i = 1; i < traj.poses.size(); ++i)
        actions.push_back(traj.poses[i].position - traj.poses[i - 1].position);
    return actions;
}

}  // namespace floornav
