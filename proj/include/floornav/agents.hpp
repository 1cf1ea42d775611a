#pragma once
// Closed-loop navigation agents behind one interface: grid planning on the
// floor plan (deliberately blind to furniture), the diffusion policy with
// ground-truth/noisy/learned localization, and a random-walk floor. All
// share the step/recover/judge semantics and replan immediately after any
// collision.

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "floornav/core.hpp"
#include "floornav/episodes.hpp"
#include "floornav/planner.hpp"
#include "floornav/policy.hpp"
#include "floornav/rng.hpp"
#include "floornav/scene.hpp"
#include "floornav/simulator.hpp"

namespace floornav {

enum class AgentKind { LocAstar, DiffusionLoc, DiffusionNaive, RandomWalk };

enum class LocalizerKind { GroundTruth, Noisy };

struct Localizer {
    LocalizerKind kind = LocalizerKind::GroundTruth;
    double pos_var = 0.0;  // m^2 per axis
    OrientMode orient_mode = OrientMode::Keep;
};

struct AgentSpec {
    AgentKind kind = AgentKind::LocAstar;
    Localizer localizer;                 // ignored for Naive and RandomWalk
    const PolicyNet* policy = nullptr;   // diffusion kinds
    bool mask_floorplan = false;         // ablation: zero the plan features
    int chunk = 16;                      // actions per replan (grid planner / random walk)
    int replan_budget = 200;
    double snap_radius = 1.0;            // m, off-map localization recovery
    std::string name = "loc-astar";
};

struct EvalRecord {
    std::string method;
    std::string scene_id;
    int pair_index = 0;
    double final_distance = 0.0;
    int collisions = 0;
    double traveled = 0.0;
    double shortest = 0.0;  // planner length on the inflated truth map
    int steps = 0;
    int replans = 0;
};

struct StepLogEntry {
    Pose pose;       // after the step
    Action action;
    bool collided = false;
    bool replanned = false;  // first step of a fresh plan
};

struct StepLog {
    std::string method;
    std::string scene_id;
    Pose start;
    WorldPoint goal;
    std::vector<StepLogEntry> entries;
};

// A* chunk on the inflated floor plan from an estimated pose. The estimate
// may sit inside an inflated obstacle (noisy localizers, wall-hugging
// poses); it snaps to the nearest free cell within snap_radius, else the
// replan yields no actions.
inline std::vector<Action> loc_astar_plan(const GridMap& inflated_plan, const Pose& est_pose,
                                          const WorldPoint& goal, int chunk,
                                          double snap_radius) {
    PixelCoord goal_cell;
    try {
        goal_cell = world_to_pixel(goal, inflated_plan);
    } catch (const Error&) {
        return {};
    }
    if (!inflated_plan.is_free(goal_cell)) return {};

    PixelCoord start_cell;
    bool have_start = false;
    try {
        start_cell = world_to_pixel(est_pose.position, inflated_plan);
        have_start = inflated_plan.is_free(start_cell);
    } catch (const Error&) {
        have_start = false;
    }
    if (!have_start) {
        double best = snap_radius;
        int span = static_cast<int>(std::ceil(snap_radius / inflated_plan.resolution)) + 1;
        PixelCoord near{};
        int cc = static_cast<int>(std::floor((est_pose.position.x - inflated_plan.offset.x) /
                                             inflated_plan.resolution));
        int cr = static_cast<int>(std::floor((est_pose.position.y - inflated_plan.offset.y) /
                                             inflated_plan.resolution));
        for (int r = cr - span; r <= cr + span; ++r)
            for (int c = cc - span; c <= cc + span; ++c) {
                if (!inflated_plan.in_bounds(c, r) || !inflated_plan.is_free({c, r})) continue;
                double d = distance(pixel_to_world({c, r}, inflated_plan), est_pose.position);
                if (d <= best) {
                    best = d;
                    near = {c, r};
                    have_start = true;
                }
            }
        if (!have_start) return {};
        start_cell = near;
    }

    AstarResult plan = astar(inflated_plan, start_cell, goal_cell);
    if (!plan.reachable || plan.path.cells.size() < 2) return {};

    std::vector<Action> actions;
    WorldPoint prev = est_pose.position;
    for (size_t i = 1; i < plan.path.cells.size() && static_cast<int>(actions.size()) < chunk;
         ++i) {
        WorldPoint w = pixel_to_world(plan.path.cells[i], inflated_plan);
        actions.push_back(w - prev);
        prev = w;
    }
    return actions;
}

namespace detail {

inline Pose localize(const Localizer& loc, const Pose& true_pose, Rng& rng) {
    if (loc.kind == LocalizerKind::GroundTruth) return true_pose;
    return noisy_pose(true_pose, loc.pos_var, loc.orient_mode, rng);
}

}  // namespace detail

// Run one navigation episode. The harness terminates the loop when the true
// position is within tau_d, travel exceeds the cap, or the replan budget is
// spent; judge() decides success from the final state.
inline EvalRecord run_episode(const AgentSpec& spec, const Scene& scene, const Pose& start,
                              const WorldPoint& goal, const SimConfig& cfg, uint64_t seed,
                              StepLog* log = nullptr) {
    if (disk_collides(scene.truth_map, start.position, cfg.agent_radius))
        throw Error("run_episode: start pose collides on the truth map");
    {
        PixelCoord gc = world_to_pixel(goal, scene.floor_plan);
        if (!scene.floor_plan.is_free(gc))
            throw Error("run_episode: goal is not free on the floor plan");
    }

    SampleOptions opts;
    opts.agent_radius = cfg.agent_radius;
    GridMap inflated_truth = planning_map(scene, opts);
    AstarResult shortest = astar(inflated_truth, world_to_pixel(start.position, inflated_truth),
                                 world_to_pixel(goal, inflated_truth));
    if (!shortest.reachable)
        throw Error("run_episode: goal unreachable from start on the inflated truth map");
    double shortest_len = path_length(shortest.path, inflated_truth);

    GridMap inflated_plan;
    if (spec.kind == AgentKind::LocAstar)
        inflated_plan = inflate(scene.floor_plan, planning_radius(scene.floor_plan, opts));

    NoiseSchedule sched;
    std::vector<double> plan_feats;
    const bool diffusion =
        spec.kind == AgentKind::DiffusionLoc || spec.kind == AgentKind::DiffusionNaive;
    if (diffusion) {
        if (!spec.policy) throw Error("run_episode: diffusion agent needs a policy");
        sched = square_cosine_schedule(spec.policy->cfg.diffusion_steps);
        plan_feats = spec.mask_floorplan
                         ? std::vector<double>(
                               static_cast<size_t>(spec.policy->cfg.plan_patch) *
                                   spec.policy->cfg.plan_patch,
                               0.0)
                         : downsample_plan(scene.floor_plan, spec.policy->cfg.plan_patch);
    }

    Rng rng(derive_seed(seed, "run_episode"));
    Rng loc_rng = rng.fork("localizer");
    Rng policy_rng = rng.fork("policy");
    Rng walk_rng = rng.fork("walk");

    AgentState state;
    state.pose = start;

    std::deque<std::vector<double>> history;
    SimConfig obs_cfg = cfg;
    if (diffusion) {
        obs_cfg.rays = spec.policy->cfg.rays;
        auto first = observe(state, scene, obs_cfg).rays;
        for (int i = 0; i <= spec.policy->cfg.context_len; ++i) history.push_back(first);
    }

    if (log) {
        log->method = spec.name;
        log->scene_id = scene.id;
        log->start = start;
        log->goal = goal;
    }

    EvalRecord rec;
    rec.method = spec.name;
    rec.scene_id = scene.id;
    rec.shortest = shortest_len;

    bool done = distance(state.pose.position, goal) <= cfg.tau_d;
    int replans = 0;
    while (!done && replans < spec.replan_budget) {
        replans += 1;
        std::vector<Action> chunk;
        switch (spec.kind) {
            case AgentKind::LocAstar: {
                Pose est = detail::localize(spec.localizer, state.pose, loc_rng);
                chunk = loc_astar_plan(inflated_plan, est, goal, spec.chunk, spec.snap_radius);
                break;
            }
            case AgentKind::DiffusionLoc:
            case AgentKind::DiffusionNaive: {
                ContextInput ctx;
                ctx.obs_history.assign(history.begin(), history.end());
                ctx.plan_features = plan_feats;
                ctx.goal = goal;
                if (spec.kind == AgentKind::DiffusionLoc)
                    ctx.pose = detail::localize(spec.localizer, state.pose, loc_rng);
                chunk = act(*spec.policy, ctx, sched, policy_rng);
                break;
            }
            case AgentKind::RandomWalk: {
                chunk.resize(spec.chunk);
                for (auto& a : chunk) {
                    double ang = walk_rng.uniform(0.0, 2.0 * M_PI);
                    double len = scene.truth_map.resolution;
                    a = {len * std::cos(ang), len * std::sin(ang)};
                }
                break;
            }
        }

        bool fresh = true;
        for (const Action& a : chunk) {
            auto [next, collided] = step(state, a, scene, cfg);
            state = next;
            if (log) log->entries.push_back({state.pose, a, collided, fresh});
            fresh = false;
            if (collided) state = recover(state);
            if (diffusion) {
                history.push_back(observe(state, scene, obs_cfg).rays);
                while (static_cast<int>(history.size()) >
                       spec.policy->cfg.context_len + 1)
                    history.pop_front();
            }
            if (distance(state.pose.position, goal) <= cfg.tau_d ||
                state.traveled > cfg.max_travel) {
                done = true;
                break;
            }
            if (collided) break;  // replan from the post-recovery pose
        }
    }

    rec.final_distance = distance(state.pose.position, goal);
    rec.collisions = state.collision_count;
    rec.traveled = state.traveled;
    rec.steps = state.step_count;
    rec.replans = replans;
    return rec;
}

// canonical specs

inline AgentSpec spec_loc_astar(Localizer loc = {}, int chunk = 16) {
    AgentSpec s;
    s.kind = AgentKind::LocAstar;
    s.localizer = loc;
    s.chunk = chunk;
    s.name = loc.kind == LocalizerKind::GroundTruth ? "loc-astar(gt)" : "loc-astar(noisy)";
    return s;
}

inline AgentSpec spec_diffusion(const PolicyNet& net, Localizer loc = {},
                                bool mask_floorplan = false) {
    AgentSpec s;
    s.kind = net.variant == Variant::Naive ? AgentKind::DiffusionNaive : AgentKind::DiffusionLoc;
    s.localizer = loc;
    s.policy = &net;
    s.mask_floorplan = mask_floorplan;
    s.chunk = net.cfg.exec_horizon;
    if (s.kind == AgentKind::DiffusionNaive)
        s.name = "diffusion-naive";
    else
        s.name = loc.kind == LocalizerKind::GroundTruth ? "diffusion-loc(gt)"
                                                        : "diffusion-loc(noisy)";
    if (mask_floorplan) s.name += "[masked-plan]";
    return s;
}

inline AgentSpec spec_random_walk(int chunk = 16) {
    AgentSpec s;
    s.kind = AgentKind::RandomWalk;
    s.chunk = chunk;
    s.name = "random-walk";
    return s;
}

}  // namespace floornav
