#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include <floornav/policy.hpp>

#include "helpers.hpp"

using namespace floornav;

namespace {

ModelConfig tiny_config() {
    ModelConfig m;
    m.rays = 4;
    m.context_len = 1;
    m.plan_patch = 4;
    m.d_model = 8;
    m.n_layers = 1;
    m.n_heads = 2;
    m.d_ff = 8;
    m.h_psi = 6;
    m.h_phi = 6;
    m.h_eps = 10;
    m.eps_blocks = 1;
    m.h_head = 5;
    m.k_emb = 4;
    m.horizon = 2;
    m.exec_horizon = 1;
    return m;
}

ContextInput random_context(const ModelConfig& m, Rng& rng, bool with_pose) {
    ContextInput ctx;
    ctx.obs_history.assign(m.context_len + 1, std::vector<double>(m.rays));
    for (auto& o : ctx.obs_history)
        for (auto& v : o) v = rng.uniform01();
    ctx.plan_features.resize(static_cast<size_t>(m.plan_patch) * m.plan_patch);
    for (auto& v : ctx.plan_features) v = rng.uniform01();
    ctx.goal = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    if (with_pose) ctx.pose = Pose{{rng.uniform(-1, 1), rng.uniform(-1, 1)}, rng.uniform(-3, 3)};
    return ctx;
}

TrainSample random_sample(const ModelConfig& m, Rng& rng, Variant variant) {
    TrainSample s;
    s.ctx = random_context(m, rng, variant == Variant::Loc);
    s.a0 = ActionSeq(m.horizon);
    for (auto& v : s.a0.v) v = rng.uniform(-1, 1);
    s.eps = ActionSeq(m.horizon);
    for (auto& v : s.eps.v) v = rng.normal();
    s.k = 1 + static_cast<int>(rng.uniform_int(m.diffusion_steps));
    s.d_target = rng.uniform(0, 2);
    if (variant == Variant::Naive) {
        double th = rng.uniform(-3, 3);
        s.pose_target = {rng.uniform(-1, 1), rng.uniform(-1, 1), std::cos(th), std::sin(th)};
    }
    return s;
}

}  // namespace

TEST_CASE("tiny policy stays under the gradient-check budget") {
    PolicyNet net = make_policy(tiny_config(), Variant::Naive);
    CHECK(net.param_count() <= 2000);
    CHECK(net.param_count() > 100);
}

TEST_CASE("encode_context output and determinism") {
    ModelConfig m = tiny_config();
    PolicyNet net = make_policy(m, Variant::Loc);
    Rng rng(11);
    init_params(net, rng);
    ContextInput ctx = random_context(m, rng, true);
    auto c1 = encode_context(net, ctx);
    auto c2 = encode_context(net, ctx);
    REQUIRE(static_cast<int>(c1.size()) == m.d_model);
    CHECK(c1 == c2);
    for (double v : c1) CHECK(std::isfinite(v));
}

TEST_CASE("context is invariant to history permutation without positional encoding") {
    ModelConfig m = tiny_config();
    m.context_len = 3;
    PolicyNet net = make_policy(m, Variant::Loc);
    Rng rng(12);
    init_params(net, rng);
    ContextInput ctx = random_context(m, rng, true);
    auto base = encode_context(net, ctx);

    ContextInput shuffled = ctx;
    std::swap(shuffled.obs_history[0], shuffled.obs_history[2]);
    std::swap(shuffled.obs_history[1], shuffled.obs_history[3]);
    auto perm = encode_context(net, shuffled);
    for (size_t i = 0; i < base.size(); ++i)
        CHECK(base[i] == Catch::Approx(perm[i]).margin(1e-12));

    ModelConfig mp = m;
    mp.positional_encoding = true;
    PolicyNet netp = make_policy(mp, Variant::Loc);
    Rng rng2(12);
    init_params(netp, rng2);
    auto b2 = encode_context(netp, ctx);
    auto p2 = encode_context(netp, shuffled);
    double diff = 0;
    for (size_t i = 0; i < b2.size(); ++i) diff = std::max(diff, std::abs(b2[i] - p2[i]));
    CHECK(diff > 1e-9);
}

TEST_CASE("heads contracts") {
    ModelConfig m = tiny_config();
    PolicyNet net = make_policy(m, Variant::Naive);
    Rng rng(13);
    init_params(net, rng);
    for (int trial = 0; trial < 10; ++trial) {
        ContextInput ctx = random_context(m, rng, false);
        ActionSeq a_k(m.horizon);
        for (auto& v : a_k.v) v = rng.normal();
        HeadOutputs out = heads(net, ctx, a_k, 1 + trial % m.diffusion_steps);
        CHECK(out.d_hat >= 0.0);
        REQUIRE(out.eps_hat.size() == static_cast<size_t>(2 * m.horizon));
        double norm = std::hypot(out.pose_vec[2], out.pose_vec[3]);
        CHECK(norm == Catch::Approx(1.0).margin(1e-6));
    }
}

TEST_CASE("loss is zero under oracle predictions") {
    Rng rng(14);
    ActionSeq eps(4);
    for (auto& v : eps.v) v = rng.normal();
    std::vector<double> eps_hat = eps.v;
    std::vector<double> pose_t{0.1, 0.2, std::cos(0.5), std::sin(0.5)};
    double loss = sample_loss_from_predictions(eps_hat, eps, 1.7, 1.7, pose_t, pose_t, 0.001,
                                               0.005);
    CHECK(loss == 0.0);
}

TEST_CASE("batch loss matches a scalar reference on hand-built samples") {
    ModelConfig m = tiny_config();
    for (Variant variant : {Variant::Naive, Variant::Loc}) {
        PolicyNet net = make_policy(m, variant);
        Rng rng(15);
        init_params(net, rng);
        NoiseSchedule sched = square_cosine_schedule(m.diffusion_steps);
        std::vector<TrainSample> batch;
        for (int i = 0; i < 4; ++i) batch.push_back(random_sample(m, rng, variant));

        double lambda_d = 0.001, lambda_pose = variant == Variant::Naive ? 0.005 : 0.0;
        double got = batch_loss(net, batch, sched, lambda_d, lambda_pose, nullptr);

        // reference: recompute per sample from the public prediction path
        double want = 0.0;
        for (const auto& s : batch) {
            double sa = std::sqrt(sched.alpha_bar[s.k]);
            double sb = std::sqrt(1.0 - sched.alpha_bar[s.k]);
            ActionSeq a_k(m.horizon);
            for (size_t i = 0; i < a_k.v.size(); ++i)
                a_k.v[i] = sa * s.a0.v[i] + sb * s.eps.v[i];
            HeadOutputs out = heads(net, s.ctx, a_k, s.k);
            double mse_eps = 0;
            for (size_t i = 0; i < s.eps.v.size(); ++i) {
                double d = out.eps_hat[i] - s.eps.v[i];
                mse_eps += d * d;
            }
            mse_eps /= static_cast<double>(s.eps.v.size());
            double term = mse_eps + lambda_d * (out.d_hat - s.d_target) * (out.d_hat - s.d_target);
            if (variant == Variant::Naive) {
                double mp = 0;
                for (int i = 0; i < 4; ++i) {
                    double d = out.pose_vec[i] - s.pose_target[i];
                    mp += d * d;
                }
                term += lambda_pose * mp / 4.0;
            }
            want += term;
        }
        want /= batch.size();
        CHECK(got == Catch::Approx(want).margin(1e-10));
    }
}

TEST_CASE("zero weights reduce the loss to the noise-prediction MSE") {
    ModelConfig m = tiny_config();
    PolicyNet net = make_policy(m, Variant::Naive);
    Rng rng(16);
    init_params(net, rng);
    NoiseSchedule sched = square_cosine_schedule(m.diffusion_steps);
    std::vector<TrainSample> batch{random_sample(m, rng, Variant::Naive)};

    double bare = batch_loss(net, batch, sched, 0.0, 0.0, nullptr);
    const TrainSample& s = batch[0];
    ActionSeq a_k = forward_noise(s.a0, s.k, s.eps, sched);
    HeadOutputs out = heads(net, s.ctx, a_k, s.k);
    double mse = 0;
    for (size_t i = 0; i < s.eps.v.size(); ++i) {
        double d = out.eps_hat[i] - s.eps.v[i];
        mse += d * d;
    }
    mse /= static_cast<double>(s.eps.v.size());
    CHECK(bare == Catch::Approx(mse).margin(1e-12));
}

TEST_CASE("loss_loc is the shared core with the pose weight at zero") {
    ModelConfig m = tiny_config();
    PolicyNet net = make_policy(m, Variant::Loc);
    Rng rng(17);
    init_params(net, rng);
    NoiseSchedule sched = square_cosine_schedule(m.diffusion_steps);
    std::vector<TrainSample> batch;
    for (int i = 0; i < 3; ++i) batch.push_back(random_sample(m, rng, Variant::Loc));
    TrainConfig tc;
    CHECK(loss_loc(net, batch, sched, tc) ==
          batch_loss(net, batch, sched, tc.lambda_d, 0.0, nullptr));
    CHECK_THROWS_AS(loss_naive(net, batch, sched, tc), Error);
}

TEST_CASE("analytic gradients match central finite differences") {
    ModelConfig m = tiny_config();
    NoiseSchedule sched = square_cosine_schedule(m.diffusion_steps);
    for (Variant variant : {Variant::Naive, Variant::Loc}) {
        for (uint64_t seed : {21u, 22u}) {
            PolicyNet net = make_policy(m, variant);
            Rng rng(seed);
            init_params(net, rng);
            REQUIRE(net.param_count() <= 2000);
            std::vector<TrainSample> batch;
            for (int i = 0; i < 3; ++i) batch.push_back(random_sample(m, rng, variant));

            double lambda_d = 0.001, lambda_pose = variant == Variant::Naive ? 0.005 : 0.0;
            std::vector<double> grad;
            batch_loss(net, batch, sched, lambda_d, lambda_pose, &grad);

            auto loss_fn = [&] {
                return batch_loss(net, batch, sched, lambda_d, lambda_pose, nullptr);
            };
            auto fd = testutil::finite_diff(loss_fn, net.params, 1e-5);
            double err = testutil::max_rel_error(grad, fd);
            INFO("variant " << to_string(variant) << " seed " << seed << " err " << err);
            REQUIRE(err <= 1e-4);
        }
    }
}

TEST_CASE("gradient of a weighted sum is the weighted sum of gradients") {
    ModelConfig m = tiny_config();
    PolicyNet net = make_policy(m, Variant::Naive);
    Rng rng(23);
    init_params(net, rng);
    NoiseSchedule sched = square_cosine_schedule(m.diffusion_steps);
    std::vector<TrainSample> batch{random_sample(m, rng, Variant::Naive)};

    std::vector<double> g_bare, g_d, g_full;
    batch_loss(net, batch, sched, 0.0, 0.0, &g_bare);
    batch_loss(net, batch, sched, 1.0, 0.0, &g_d);
    batch_loss(net, batch, sched, 0.4, 0.0, &g_full);
    for (size_t i = 0; i < g_full.size(); ++i) {
        double want = g_bare[i] + 0.4 * (g_d[i] - g_bare[i]);
        REQUIRE(g_full[i] == Catch::Approx(want).margin(1e-9));
    }
}

namespace {

struct ToyWorld {
    SceneTable table;
    std::vector<Episode> episodes;
    SimConfig sim;
    ModelConfig model;

    explicit ToyWorld(int n_episodes, uint64_t seed = 500) {
        model.rays = 8;
        model.context_len = 2;
        model.plan_patch = 8;
        model.d_model = 16;
        model.n_layers = 1;
        model.n_heads = 2;
        model.d_ff = 16;
        model.h_psi = 12;
        model.h_phi = 12;
        model.h_eps = 32;
        model.eps_blocks = 1;
        model.h_head = 8;
        model.k_emb = 8;
        model.horizon = 8;
        model.exec_horizon = 4;
        sim.rays = model.rays;

        Scene scene = synth_scene(seed, SizeClass::Small, 0.1);
        GridMap inflated = planning_map(scene);
        for (int i = 0; i < n_episodes; ++i)
            episodes.push_back(sample_episode(scene, inflated, seed + 1000 + i));
        table.add(std::move(scene), model.plan_patch);
    }
};

}  // namespace

TEST_CASE("training on a toy set halves the loss and is deterministic") {
    ToyWorld world(10);
    TrainConfig tc;
    tc.lr = 2e-3;
    tc.epochs = 4;
    tc.batch = 16;
    tc.seed = 7;

    PolicyNet net = make_policy(world.model, Variant::Loc);
    TrainLog log = train(net, world.episodes, world.table, world.sim, tc);
    REQUIRE(log.epoch_loss.size() == 4);
    INFO("epoch losses: " << log.epoch_loss.front() << " -> " << log.epoch_loss.back());
    CHECK(log.epoch_loss.back() <= 0.5 * log.epoch_loss.front());

    PolicyNet net2 = make_policy(world.model, Variant::Loc);
    train(net2, world.episodes, world.table, world.sim, tc);
    REQUIRE(net.params == net2.params);  // bit-identical
    CHECK(net.action_scale == net2.action_scale);
}

TEST_CASE("normalization round trip on dataset actions") {
    ToyWorld world(3);
    TrainConfig tc;
    tc.epochs = 1;
    tc.batch = 8;
    PolicyNet net = make_policy(world.model, Variant::Loc);
    train(net, world.episodes, world.table, world.sim, tc);
    REQUIRE(net.action_scale > 0.0);
    for (const auto& ep : world.episodes)
        for (const auto& a : ep.actions) {
            double nx = a.x / net.action_scale, ny = a.y / net.action_scale;
            CHECK(std::abs(nx) <= 1.0 + 1e-12);
            CHECK(std::abs(nx * net.action_scale - a.x) <= 1e-12);
            CHECK(std::abs(ny * net.action_scale - a.y) <= 1e-12);
        }
}

TEST_CASE("act returns the execution horizon and reproduces from checkpoints") {
    ToyWorld world(4);
    TrainConfig tc;
    tc.epochs = 1;
    tc.batch = 8;
    tc.seed = 99;
    PolicyNet net = make_policy(world.model, Variant::Loc);
    train(net, world.episodes, world.table, world.sim, tc);
    NoiseSchedule sched = square_cosine_schedule(world.model.diffusion_steps);

    const Episode& ep = world.episodes[0];
    const Scene& scene = world.table.get(ep.scene_id);
    ContextInput ctx;
    ctx.obs_history = observation_history(scene, ep.trajectory, 0, world.sim, world.model.context_len);
    ctx.plan_features = world.table.feats(ep.scene_id);
    ctx.goal = ep.goal;
    ctx.pose = ep.start;

    Rng r1(5), r2(5);
    auto a1 = act(net, ctx, sched, r1);
    auto a2 = act(net, ctx, sched, r2);
    REQUIRE(static_cast<int>(a1.size()) == world.model.exec_horizon);
    for (size_t i = 0; i < a1.size(); ++i) CHECK(a1[i] == a2[i]);

    auto dir = std::filesystem::temp_directory_path() / "floornav_policy_test";
    std::filesystem::create_directories(dir);
    std::string path = (dir / "ckpt.json").string();
    save_checkpoint(net, path);
    PolicyNet back = load_checkpoint(path);
    REQUIRE(back.params == net.params);
    CHECK(back.action_scale == net.action_scale);
    CHECK(back.pos_scale == net.pos_scale);
    Rng r3(5);
    auto a3 = act(back, ctx, sched, r3);
    for (size_t i = 0; i < a1.size(); ++i) {
        CHECK(a3[i].x == a1[i].x);
        CHECK(a3[i].y == a1[i].y);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("default execution horizon is sixteen") {
    ModelConfig m;
    CHECK(m.exec_horizon == 16);
    CHECK(m.horizon == 32);
    CHECK(m.diffusion_steps == 10);
}
