// floornav: scene synthesis, episode generation, policy training,
// benchmarking, rendering, and dataset statistics behind one binary.
// Every subcommand accepts --seed and produces byte-identical outputs for
// identical inputs; --config loads an INI file and the effective
// configuration is echoed next to each command's primary output.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"

#include <floornav/agents.hpp>
#include <floornav/episodes.hpp>
#include <floornav/eval.hpp>
#include <floornav/policy.hpp>
#include <floornav/render.hpp>
#include <floornav/scene.hpp>

namespace fs = std::filesystem;
using namespace floornav;

namespace {

struct SynthArgs {
    std::string out = "out/scenes";
    int count = 6;
    std::string size = "mixed";
    double density = 0.15;
    double resolution = 0.1;
    uint64_t seed = 0;
};

struct GenArgs {
    std::string scenes = "out/scenes";
    std::string out = "out/datasets/dataset.jsonl";
    int scale_factor = 10;
    int workers = 1;
    uint64_t seed = 0;
};

struct TrainArgs {
    std::string dataset = "out/datasets/dataset.jsonl";
    std::string scenes = "out/scenes";
    std::string variant = "loc";
    std::string out = "out/checkpoints/policy.json";
    ModelConfig model;
    TrainConfig train;
};

struct EvalArgs {
    std::string scenes = "out/scenes";
    std::string out = "out/results";
    std::string checkpoint;
    std::string methods = "loc-astar-gt,random-walk";
    double noise_var = 0.3;
    std::string noise_orient = "keep";
    bool mask_floorplan = false;
    int pairs = 10;
    int workers = 1;
    bool save_logs = false;
    uint64_t seed = 0;
    SimConfig sim;
};

struct RenderArgs {
    std::string scenes = "out/scenes";
    std::string scene_id;
    std::vector<std::string> logs;
    std::string out = "out/renders/trajectory.png";
    int scale = 4;
};

struct StatsArgs {
    std::string dataset = "out/datasets/dataset.jsonl";
};

void echo_config(CLI::App& app, const std::string& near_path) {
    fs::path dir = fs::path(near_path).parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    fs::path echo = dir / "config_echo.ini";
    std::ofstream f(echo);
    f << app.config_to_str(true, false);
}

std::string sanitize(const std::string& s) {
    std::string out;
    for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-') ? c : '_';
    return out;
}

int cmd_synth(CLI::App& app, const SynthArgs& a) {
    fs::create_directories(a.out);
    std::vector<SizeClass> classes;
    if (a.size == "mixed")
        classes = {SizeClass::Small, SizeClass::Medium, SizeClass::Large};
    else
        classes = {size_class_from_string(a.size)};
    std::vector<std::string> ids;
    for (int i = 0; i < a.count; ++i) {
        SizeClass sc = classes[i % classes.size()];
        Scene scene = synth_scene(derive_seed(a.seed, "scene", i), sc, a.density, a.resolution);
        save_scene(scene, a.out);
        ids.push_back(scene.id);
    }
    echo_config(app, a.out + "/x");
    std::printf("wrote %d scenes to %s\n", a.count, a.out.c_str());
    for (const auto& id : ids) std::printf("  %s\n", id.c_str());
    return 0;
}

int cmd_gen(CLI::App& app, const GenArgs& a) {
    auto ids = list_scene_ids(a.scenes);
    if (ids.empty()) throw Error("no scenes found in " + a.scenes);

    struct Task {
        const Scene* scene;
        const GridMap* inflated;
        int index;
        uint64_t seed;
        Episode result;
        bool failed = false;
        std::string error;
    };
    std::vector<Scene> scenes;
    scenes.reserve(ids.size());
    for (const auto& id : ids) scenes.push_back(load_scene(a.scenes, id));
    std::vector<GridMap> inflated;
    inflated.reserve(scenes.size());
    for (const auto& s : scenes) inflated.push_back(planning_map(s));

    std::vector<Task> tasks;
    for (size_t si = 0; si < scenes.size(); ++si) {
        int n = episodes_per_scene(scenes[si].size_class, a.scale_factor);
        for (int i = 0; i < n; ++i)
            tasks.push_back({&scenes[si], &inflated[si], i,
                             derive_seed(a.seed, "episode:" + scenes[si].id, i)});
    }

    auto run_range = [&](size_t lo, size_t hi) {
        for (size_t i = lo; i < hi; ++i) {
            try {
                tasks[i].result =
                    sample_episode(*tasks[i].scene, *tasks[i].inflated, tasks[i].seed);
            } catch (const std::exception& e) {
                tasks[i].failed = true;
                tasks[i].error = e.what();
            }
        }
    };
    int W = std::max(1, a.workers);
    if (W == 1) {
        run_range(0, tasks.size());
    } else {
        std::vector<std::thread> threads;
        for (int w = 0; w < W; ++w)
            threads.emplace_back(run_range, tasks.size() * w / W, tasks.size() * (w + 1) / W);
        for (auto& th : threads) th.join();
    }

    std::vector<Episode> episodes;
    for (const auto& t : tasks) {
        if (t.failed) throw Error("episode generation failed: " + t.error);
        episodes.push_back(t.result);
    }

    fs::path out(a.out);
    if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
    save_dataset(episodes, a.out);

    DatasetStats st = compute_stats(episodes);
    nlohmann::ordered_json js;
    js["count"] = st.count;
    js["straight_line"] = {{"min", st.straight_line.min},
                           {"max", st.straight_line.max},
                           {"mean", st.straight_line.mean},
                           {"median", st.straight_line.median}};
    js["travel"] = {{"min", st.travel.min},
                    {"max", st.travel.max},
                    {"mean", st.travel.mean},
                    {"median", st.travel.median}};
    std::ofstream sf(a.out + ".stats.json");
    sf << js.dump(2) << "\n";
    echo_config(app, a.out);
    std::printf("wrote %zu episodes to %s\n", episodes.size(), a.out.c_str());
    return 0;
}

int cmd_train(CLI::App& app, const TrainArgs& a) {
    auto episodes = load_dataset(a.dataset);
    if (episodes.empty()) throw Error("empty dataset: " + a.dataset);

    SceneTable table;
    for (const auto& id : list_scene_ids(a.scenes)) {
        Scene s = load_scene(a.scenes, id);
        table.add(std::move(s), a.model.plan_patch);
    }

    SimConfig sim;
    sim.rays = a.model.rays;
    PolicyNet net = make_policy(a.model, variant_from_string(a.variant));
    TrainLog log;
    if (a.train.epochs > 0) {
        log = train(net, episodes, table, sim, a.train);
    } else {
        // epoch-free initialization: checkpoint of initialized params
        Rng rng(derive_seed(a.train.seed, "policy_init"));
        init_params(net, rng);
        net.train_seed = a.train.seed;
        double a_scale = 0.0, p_scale = 0.0;
        for (const auto& ep : episodes) {
            for (const auto& act : ep.actions)
                a_scale = std::max({a_scale, std::abs(act.x), std::abs(act.y)});
            for (const auto& pose : ep.trajectory.poses)
                p_scale = std::max({p_scale, std::abs(pose.position.x), std::abs(pose.position.y)});
        }
        net.action_scale = a_scale > 0 ? a_scale : 1.0;
        net.pos_scale = p_scale > 0 ? p_scale : 1.0;
    }

    fs::path out(a.out);
    if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
    save_checkpoint(net, a.out);
    std::ofstream lf(a.out + ".loss.csv");
    lf << "step,loss\n";
    lf.precision(17);
    for (size_t i = 0; i < log.step_loss.size(); ++i) lf << i << "," << log.step_loss[i] << "\n";
    echo_config(app, a.out);
    std::printf("wrote checkpoint %s (%zu params)\n", a.out.c_str(), net.param_count());
    if (!log.epoch_loss.empty())
        std::printf("epoch loss: first %.6f last %.6f\n", log.epoch_loss.front(),
                    log.epoch_loss.back());
    return 0;
}

int cmd_eval(CLI::App& app, const EvalArgs& a) {
    std::vector<Scene> scenes;
    for (const auto& id : list_scene_ids(a.scenes)) scenes.push_back(load_scene(a.scenes, id));
    if (scenes.empty()) throw Error("no scenes found in " + a.scenes);
    std::vector<const Scene*> scene_ptrs;
    for (const auto& s : scenes) scene_ptrs.push_back(&s);

    PolicyNet net;
    bool have_net = false;
    Localizer noisy{LocalizerKind::Noisy, a.noise_var,
                    a.noise_orient == "uniform" ? OrientMode::UniformResample : OrientMode::Keep};

    std::vector<AgentSpec> specs;
    std::stringstream ss(a.methods);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        if (tok == "loc-astar-gt") {
            specs.push_back(spec_loc_astar());
        } else if (tok == "loc-astar-noisy") {
            specs.push_back(spec_loc_astar(noisy));
        } else if (tok == "random-walk") {
            specs.push_back(spec_random_walk());
        } else if (tok == "diffusion-loc-gt" || tok == "diffusion-loc-noisy" ||
                   tok == "diffusion-naive") {
            if (!have_net) {
                if (a.checkpoint.empty())
                    throw Error("method '" + tok + "' needs --checkpoint");
                net = load_checkpoint(a.checkpoint);
                have_net = true;
            }
            if (tok == "diffusion-naive" && net.variant != Variant::Naive)
                throw Error("checkpoint is not a naive-variant policy");
            if (tok != "diffusion-naive" && net.variant != Variant::Loc)
                throw Error("checkpoint is not a loc-variant policy");
            specs.push_back(spec_diffusion(net, tok == "diffusion-loc-noisy" ? noisy : Localizer{},
                                           a.mask_floorplan));
        } else {
            throw CLI::ValidationError("--methods", "unknown method: " + tok);
        }
    }
    if (specs.empty()) throw Error("no methods selected");

    BenchConfig bench;
    bench.pairs_per_scene = a.pairs;
    bench.workers = a.workers;

    fs::create_directories(a.out);
    std::vector<StepLog> logs;
    ResultTable table = run_benchmark(specs, scene_ptrs, a.sim, bench, a.seed,
                                      a.save_logs ? &logs : nullptr);
    write_results_csv(table, a.out + "/results.csv");
    write_results_json(table, a.out + "/results.json");
    if (a.save_logs) {
        fs::create_directories(a.out + "/logs");
        for (size_t i = 0; i < logs.size(); ++i) {
            const auto& rec = table.records[i];
            std::string name = sanitize(rec.method) + "_" + sanitize(rec.scene_id) + "_" +
                               std::to_string(rec.pair_index) + ".jsonl";
            write_step_log(logs[i], a.out + "/logs/" + name);
        }
    }
    echo_config(app, a.out + "/x");
    for (const auto& w : table.skipped_scenes)
        std::fprintf(stderr, "warning: skipped infeasible scene %s\n", w.c_str());

    std::printf("%-24s %6s %6s %8s %8s\n", "method", "tau_d", "tau_c", "SR%", "SPL%");
    for (const auto& c : table.cells)
        std::printf("%-24s %6.2f %6s %8.1f %8.1f\n", c.method.c_str(), c.tau_d,
                    c.tau_c ? std::to_string(*c.tau_c).c_str() : "inf", 100.0 * c.sr,
                    100.0 * c.spl);
    return 0;
}

int cmd_render(CLI::App& app, const RenderArgs& a) {
    if (a.scene_id.empty()) throw Error("--scene is required");
    Scene scene = load_scene(a.scenes, a.scene_id);
    std::vector<StepLog> logs;
    for (const auto& p : a.logs) logs.push_back(read_step_log(p));
    fs::path out(a.out);
    if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
    render_trajectory(scene, logs, a.out, {a.scale});
    echo_config(app, a.out);
    std::printf("wrote %s\n", a.out.c_str());
    return 0;
}

int cmd_stats(const StatsArgs& a) {
    auto episodes = load_dataset(a.dataset);
    DatasetStats st = compute_stats(episodes);
    std::printf("%-22s %8s %8s %8s %8s\n", "", "min", "max", "mean", "median");
    std::printf("%-22s %8.2f %8.2f %8.2f %8.2f\n", "straight-line distance",
                st.straight_line.min, st.straight_line.max, st.straight_line.mean,
                st.straight_line.median);
    std::printf("%-22s %8.2f %8.2f %8.2f %8.2f\n", "travel distance", st.travel.min,
                st.travel.max, st.travel.mean, st.travel.median);
    std::printf("episodes: %zu\n", st.count);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"floor-plan-guided navigation toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "INI config file; flags override file values");
    app.allow_config_extras(false);

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth-scenes", "generate synthetic scenes");
    synth->add_option("--out", sa.out, "output scene directory");
    synth->add_option("--count", sa.count, "number of scenes");
    synth->add_option("--size", sa.size, "small|medium|large|mixed");
    synth->add_option("--density", sa.density, "furniture density in [0,1)");
    synth->add_option("--resolution", sa.resolution, "meters per cell");
    synth->add_option("--seed", sa.seed, "master seed");

    GenArgs ga;
    auto* gen = app.add_subcommand("gen-episodes", "sample planner demonstrations");
    gen->add_option("--scenes", ga.scenes, "scene directory");
    gen->add_option("--out", ga.out, "output dataset (.jsonl)");
    gen->add_option("--scale-factor", ga.scale_factor, "desk-scale divisor of paper counts");
    gen->add_option("--workers", ga.workers, "parallel workers");
    gen->add_option("--seed", ga.seed, "master seed");

    TrainArgs ta;
    auto* tr = app.add_subcommand("train", "train the diffusion policy");
    tr->add_option("--dataset", ta.dataset, "episode dataset (.jsonl)");
    tr->add_option("--scenes", ta.scenes, "scene directory");
    tr->add_option("--variant", ta.variant, "naive|loc");
    tr->add_option("--out", ta.out, "checkpoint path");
    tr->add_option("--lr", ta.train.lr, "learning rate");
    tr->add_option("--epochs", ta.train.epochs, "training epochs");
    tr->add_option("--batch", ta.train.batch, "batch size");
    tr->add_option("--lambda-d", ta.train.lambda_d, "distance head weight");
    tr->add_option("--lambda-pose", ta.train.lambda_pose, "pose head weight");
    tr->add_option("--weight-decay", ta.train.weight_decay, "decoupled weight decay");
    tr->add_option("--workers", ta.train.workers, "gradient workers");
    tr->add_option("--seed", ta.train.seed, "master seed");
    tr->add_option("--rays", ta.model.rays, "observation rays");
    tr->add_option("--context-len", ta.model.context_len, "history length l");
    tr->add_option("--plan-patch", ta.model.plan_patch, "floor plan patch side");
    tr->add_option("--d-model", ta.model.d_model, "context dimension");
    tr->add_option("--n-layers", ta.model.n_layers, "attention layers");
    tr->add_option("--n-heads", ta.model.n_heads, "attention heads");
    tr->add_option("--d-ff", ta.model.d_ff, "feed-forward width");
    tr->add_option("--h-psi", ta.model.h_psi, "observation encoder width");
    tr->add_option("--h-phi", ta.model.h_phi, "plan encoder width");
    tr->add_option("--h-eps", ta.model.h_eps, "denoiser width");
    tr->add_option("--eps-blocks", ta.model.eps_blocks, "denoiser residual blocks");
    tr->add_option("--h-head", ta.model.h_head, "head width");
    tr->add_option("--k-emb", ta.model.k_emb, "step embedding width");
    tr->add_option("--horizon", ta.model.horizon, "diffusion horizon H_p");
    tr->add_option("--exec-horizon", ta.model.exec_horizon, "executed steps H_a");
    tr->add_option("--diffusion-steps", ta.model.diffusion_steps, "denoising steps K");
    tr->add_flag("--positional-encoding", ta.model.positional_encoding,
                 "add positional encodings to the token sequence");

    EvalArgs ea;
    auto* ev = app.add_subcommand("eval", "run the benchmark");
    ev->add_option("--scenes", ea.scenes, "scene directory");
    ev->add_option("--out", ea.out, "output directory");
    ev->add_option("--checkpoint", ea.checkpoint, "policy checkpoint for diffusion methods");
    ev->add_option("--methods", ea.methods,
                   "comma list: loc-astar-gt,loc-astar-noisy,diffusion-loc-gt,"
                   "diffusion-loc-noisy,diffusion-naive,random-walk");
    ev->add_option("--noise-var", ea.noise_var, "noisy localizer variance (m^2)");
    ev->add_option("--noise-orient", ea.noise_orient, "keep|uniform");
    ev->add_flag("--mask-floorplan", ea.mask_floorplan, "zero the plan features (ablation)");
    ev->add_option("--pairs", ea.pairs, "start/goal pairs per scene");
    ev->add_option("--workers", ea.workers, "parallel workers");
    ev->add_flag("--save-logs", ea.save_logs, "write per-episode step logs");
    ev->add_option("--seed", ea.seed, "master seed");
    ev->add_option("--tau-d", ea.sim.tau_d, "success distance for termination");
    ev->add_option("--max-travel", ea.sim.max_travel, "travel cap in meters");
    ev->add_option("--agent-radius", ea.sim.agent_radius, "agent radius in meters");

    RenderArgs ra;
    auto* re = app.add_subcommand("render", "render trajectories over the floor plan");
    re->add_option("--scenes", ra.scenes, "scene directory");
    re->add_option("--scene", ra.scene_id, "scene id");
    re->add_option("--log", ra.logs, "step log file(s)");
    re->add_option("--out", ra.out, "output PNG");
    re->add_option("--scale", ra.scale, "pixels per cell");

    StatsArgs st;
    auto* stc = app.add_subcommand("stats", "dataset summary statistics");
    stc->add_option("--dataset", st.dataset, "episode dataset (.jsonl)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::ofstream devnull("/dev/null");
        app.exit(e, devnull, devnull);
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 1;
    }

    try {
        if (synth->parsed()) return cmd_synth(app, sa);
        if (gen->parsed()) return cmd_gen(app, ga);
        if (tr->parsed()) return cmd_train(app, ta);
        if (ev->parsed()) return cmd_eval(app, ea);
        if (re->parsed()) return cmd_render(app, ra);
        if (stc->parsed()) return cmd_stats(st);
    } catch (const CLI::Error& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
