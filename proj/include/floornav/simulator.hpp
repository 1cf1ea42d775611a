#pragma once
// Kinematic execution on the truth map: sub-stepped disk collision with
// stop-at-contact semantics, the 45-degree clockwise recovery rotation,
// raycast observations, parametric pose noise, and the success judgment.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "floornav/core.hpp"
#include "floornav/grid.hpp"
#include "floornav/rng.hpp"
#include "floornav/scene.hpp"

namespace floornav {

struct SimConfig {
    double agent_radius = kDefaultAgentRadius;  // meters
    double tau_d = 0.3;                         // success distance threshold, meters
    std::optional<int> tau_c = std::nullopt;    // collision budget; nullopt = unbounded
    double max_travel = 100.0;                  // meters
    double fov_deg = 45.0;
    int rays = 32;
    int substeps = 8;
    double max_range = 10.0;  // raycast clip, meters
};

struct AgentState {
    Pose pose;
    int collision_count = 0;
    double traveled = 0.0;
    int step_count = 0;
};

struct Observation {
    std::vector<double> rays;  // normalized hit distances in [0,1]
    WorldPoint goal;
    std::optional<Pose> pose_channel;
};

// True if a disk of `radius` at `center` overlaps any Occupied/Unknown cell
// rectangle. Space outside the grid counts as an obstacle.
inline bool disk_collides(const GridMap& map, const WorldPoint& center, double radius) {
    const double mu = map.resolution;
    if (center.x - radius < map.offset.x || center.y - radius < map.offset.y ||
        center.x + radius > map.offset.x + map.width * mu ||
        center.y + radius > map.offset.y + map.height * mu)
        return true;
    int c0 = static_cast<int>(std::floor((center.x - radius - map.offset.x) / mu));
    int c1 = static_cast<int>(std::floor((center.x + radius - map.offset.x) / mu));
    int r0 = static_cast<int>(std::floor((center.y - radius - map.offset.y) / mu));
    int r1 = static_cast<int>(std::floor((center.y + radius - map.offset.y) / mu));
    const double rad2 = radius * radius;
    for (int r = std::max(r0, 0); r <= std::min(r1, map.height - 1); ++r) {
        for (int c = std::max(c0, 0); c <= std::min(c1, map.width - 1); ++c) {
            if (!map.is_obstacle(c, r)) continue;
            double lox = map.offset.x + c * mu, hix = lox + mu;
            double loy = map.offset.y + r * mu, hiy = loy + mu;
            double nx = std::clamp(center.x, lox, hix);
            double ny = std::clamp(center.y, loy, hiy);
            double dx = center.x - nx, dy = center.y - ny;
            if (dx * dx + dy * dy <= rad2) return true;
        }
    }
    return false;
}

// Apply one displacement action. The motion is checked at `substeps`
// evenly spaced points; on contact the agent stops at the last clear
// sub-position and the collision counter increments once.
inline std::pair<AgentState, bool> step(const AgentState& state, const Action& action,
                                        const Scene& scene, const SimConfig& cfg) {
    AgentState next = state;
    next.step_count += 1;
    if (action.x == 0.0 && action.y == 0.0) return {next, false};

    next.pose.theta = std::atan2(action.y, action.x);
    WorldPoint reached = state.pose.position;
    bool collided = false;
    for (int j = 1; j <= cfg.substeps; ++j) {
        double frac = static_cast<double>(j) / cfg.substeps;
        WorldPoint cand = state.pose.position + action * frac;
        if (disk_collides(scene.truth_map, cand, cfg.agent_radius)) {
            collided = true;
            break;
        }
        reached = cand;
    }
    if (collided) next.collision_count += 1;
    next.traveled += distance(state.pose.position, reached);
    next.pose.position = reached;
    return {next, collided};
}

// Rotate 45 degrees clockwise (y-up frame: negative theta); position fixed.
inline AgentState recover(const AgentState& state) {
    AgentState next = state;
    next.pose.theta = wrap_angle(next.pose.theta - M_PI / 4.0);
    return next;
}

// First-obstacle hit distance along a ray, via grid traversal. Leaving the
// grid counts as a hit; result is clipped at max_range.
inline double raycast(const GridMap& map, const WorldPoint& origin, double angle,
                      double max_range) {
    const double mu = map.resolution;
    double dirx = std::cos(angle), diry = std::sin(angle);
    int col = static_cast<int>(std::floor((origin.x - map.offset.x) / mu));
    int row = static_cast<int>(std::floor((origin.y - map.offset.y) / mu));
    if (!map.in_bounds(col, row) || map.is_obstacle(col, row)) return 0.0;

    const double inf = std::numeric_limits<double>::infinity();
    int step_c = dirx > 0 ? 1 : (dirx < 0 ? -1 : 0);
    int step_r = diry > 0 ? 1 : (diry < 0 ? -1 : 0);
    double tmax_x = inf, tmax_y = inf, tdelta_x = inf, tdelta_y = inf;
    if (step_c > 0) tmax_x = (map.offset.x + (col + 1) * mu - origin.x) / dirx;
    if (step_c < 0) tmax_x = (map.offset.x + col * mu - origin.x) / dirx;
    if (step_r > 0) tmax_y = (map.offset.y + (row + 1) * mu - origin.y) / diry;
    if (step_r < 0) tmax_y = (map.offset.y + row * mu - origin.y) / diry;
    if (step_c != 0) tdelta_x = mu / std::abs(dirx);
    if (step_r != 0) tdelta_y = mu / std::abs(diry);

    while (true) {
        double t;
        if (tmax_x <= tmax_y) {
            t = tmax_x;
            col += step_c;
            tmax_x += tdelta_x;
        } else {
            t = tmax_y;
            row += step_r;
            tmax_y += tdelta_y;
        }
        if (t >= max_range) return max_range;
        if (!map.in_bounds(col, row)) return t;
        if (map.is_obstacle(col, row)) return t;
    }
}

// R rays evenly spanning the field of view centered on the heading
// (endpoints inclusive), normalized by max_range.
inline Observation observe(const AgentState& state, const Scene& scene, const SimConfig& cfg) {
    Observation obs;
    obs.rays.resize(cfg.rays);
    const double fov = cfg.fov_deg * M_PI / 180.0;
    for (int i = 0; i < cfg.rays; ++i) {
        double frac = cfg.rays > 1 ? static_cast<double>(i) / (cfg.rays - 1) - 0.5 : 0.0;
        double angle = state.pose.theta + fov * frac;
        double hit = raycast(scene.truth_map, state.pose.position, angle, cfg.max_range);
        obs.rays[i] = hit / cfg.max_range;
    }
    return obs;
}

enum class OrientMode { Keep, UniformResample };

// Gaussian position noise with the given per-axis variance; orientation
// either preserved or resampled uniformly (diagnostic mode).
inline Pose noisy_pose(const Pose& pose, double pos_var, OrientMode orient_mode, Rng& rng) {
    if (pos_var < 0.0) throw Error("noisy_pose: variance must be >= 0");
    Pose out = pose;
    double std_dev = std::sqrt(pos_var);
    out.position.x += std_dev * rng.normal();
    out.position.y += std_dev * rng.normal();
    if (orient_mode == OrientMode::UniformResample)
        out.theta = rng.uniform(0.0, 2.0 * M_PI);
    return out;
}

struct Judgment {
    bool success = false;
    std::string reason;  // first violated condition: distance, collisions, travel
};

inline Judgment judge(const AgentState& final_state, const WorldPoint& goal,
                      const SimConfig& cfg) {
    if (distance(final_state.pose.position, goal) > cfg.tau_d) return {false, "distance"};
    if (cfg.tau_c.has_value() && final_state.collision_count > *cfg.tau_c)
        return {false, "collisions"};
    if (final_state.traveled > cfg.max_travel) return {false, "travel"};
    return {true, ""};
}

}  // namespace floornav
