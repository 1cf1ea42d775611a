#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include <floornav/episodes.hpp>
#include <floornav/simulator.hpp>

using namespace floornav;

TEST_CASE("sample_episode satisfies the contract") {
    Scene scene = synth_scene(100, SizeClass::Medium, 0.1);
    GridMap inflated = planning_map(scene);
    for (uint64_t seed = 0; seed < 20; ++seed) {
        Episode ep = sample_episode(scene, inflated, seed);
        CHECK(ep.scene_id == scene.id);
        CHECK(distance(ep.start.position, ep.goal) >= 3.0);
        CHECK(ep.trajectory.poses.size() >= 2);
        CHECK(ep.actions.size() == ep.trajectory.poses.size() - 1);
        // endpoints coincide with start/goal (cell centers, so exactly)
        CHECK(distance(ep.trajectory.poses.front().position, ep.start.position) == 0.0);
        CHECK(distance(ep.trajectory.poses.back().position, ep.goal) <=
              scene.truth_map.resolution);
        CHECK(ep.shortest_length == path_length(ep.trajectory));
    }
}

TEST_CASE("sample_episode is deterministic in (scene, seed)") {
    Scene scene = synth_scene(101, SizeClass::Small, 0.1);
    Episode a = sample_episode(scene, 9);
    Episode b = sample_episode(scene, 9);
    CHECK(a.start.position == b.start.position);
    CHECK(a.goal == b.goal);
    REQUIRE(a.trajectory.poses.size() == b.trajectory.poses.size());
    for (size_t i = 0; i < a.trajectory.poses.size(); ++i) {
        CHECK(a.trajectory.poses[i].position == b.trajectory.poses[i].position);
        CHECK(a.trajectory.poses[i].theta == b.trajectory.poses[i].theta);
    }
}

TEST_CASE("sample_episode fails cleanly when no pair is far enough") {
    Scene tiny;
    tiny.floor_plan = GridMap(10, 10, 0.1);  // 1 m square, every pair < 3 m
    tiny.truth_map = tiny.floor_plan;
    tiny.id = "small-tiny";
    CHECK_THROWS_WITH(sample_episode(tiny, 1),
                      Catch::Matchers::ContainsSubstring("small-tiny"));
}

TEST_CASE("episodes replay collision-free to the goal") {
    Scene scene = synth_scene(102, SizeClass::Medium, 0.15);
    GridMap inflated = planning_map(scene);
    SimConfig cfg;
    for (uint64_t seed = 0; seed < 10; ++seed) {
        Episode ep = sample_episode(scene, inflated, seed);
        AgentState st;
        st.pose = ep.start;
        for (const Action& a : ep.actions) {
            auto [next, collided] = step(st, a, scene, cfg);
            st = next;
            REQUIRE_FALSE(collided);
        }
        CHECK(st.collision_count == 0);
        CHECK(distance(st.pose.position, ep.goal) <= scene.truth_map.resolution);
    }
}

TEST_CASE("episodes_per_scene scales the paper counts") {
    CHECK(episodes_per_scene(SizeClass::Small, 1) == 150);
    CHECK(episodes_per_scene(SizeClass::Medium, 1) == 180);
    CHECK(episodes_per_scene(SizeClass::Large, 1) == 200);
    CHECK(episodes_per_scene(SizeClass::Large, 10) == 20);
    CHECK(episodes_per_scene(SizeClass::Medium, 1000) == 1);  // floor with minimum
}

namespace {

Episode fake_episode(double straight, double travel) {
    // two-pose trajectory of the requested lengths (travel >= straight)
    Episode ep;
    ep.scene_id = "small-fake";
    ep.trajectory.poses = {{{0, 0}, 0}, {{travel / 2, 0}, 0}, {{travel / 2, travel / 2}, 0}};
    ep.start = ep.trajectory.poses.front();
    ep.goal = {straight, 0.0};
    ep.actions = path_to_actions(ep.trajectory);
    ep.shortest_length = travel;
    return ep;
}

}  // namespace

TEST_CASE("compute_stats basics") {
    CHECK_THROWS_AS(compute_stats({}), Error);

    auto one = compute_stats({fake_episode(5.0, 7.0)});
    CHECK(one.straight_line.min == 5.0);
    CHECK(one.straight_line.max == 5.0);
    CHECK(one.straight_line.mean == 5.0);
    CHECK(one.straight_line.median == 5.0);
    CHECK(one.travel.mean == 7.0);
    CHECK(one.count == 1);

    auto two = compute_stats({fake_episode(4.0, 6.0), fake_episode(5.0, 10.0)});
    CHECK(two.travel.median == 8.0);
    CHECK(two.travel.mean == 8.0);
}

TEST_CASE("compute_stats matches a sort-based oracle") {
    Rng rng(404);
    std::vector<Episode> eps;
    std::vector<double> straight, travel;
    for (int i = 0; i < 50; ++i) {
        double s = rng.uniform(1, 10), t = s + rng.uniform(0, 5);
        eps.push_back(fake_episode(s, t));
        straight.push_back(distance(eps.back().start.position, eps.back().goal));
        travel.push_back(path_length(eps.back().trajectory));
    }
    DatasetStats got = compute_stats(eps);
    auto oracle = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        double sum = 0;
        for (double x : v) sum += x;
        size_t n = v.size();
        return std::array<double, 4>{v.front(), v.back(), sum / n,
                                     n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2])};
    };
    auto so = oracle(straight);
    CHECK(got.straight_line.min == so[0]);
    CHECK(got.straight_line.max == so[1]);
    CHECK(got.straight_line.mean == Catch::Approx(so[2]).epsilon(1e-12));
    CHECK(got.straight_line.median == so[3]);
    auto to = oracle(travel);
    CHECK(got.travel.min == to[0]);
    CHECK(got.travel.max == to[1]);
    CHECK(got.travel.mean == Catch::Approx(to[2]).epsilon(1e-12));
    CHECK(got.travel.median == to[3]);
    // basic ordering invariants
    CHECK(got.travel.min <= got.travel.median);
    CHECK(got.travel.median <= got.travel.max);
}

TEST_CASE("dataset save/load round trip") {
    auto dir = std::filesystem::temp_directory_path() / "floornav_ep_test";
    std::filesystem::create_directories(dir);
    std::string path = (dir / "d.jsonl").string();

    SECTION("empty dataset") {
        save_dataset({}, path);
        CHECK(load_dataset(path).empty());
    }

    SECTION("sampled episodes round trip exactly") {
        Scene scene = synth_scene(103, SizeClass::Small, 0.1);
        GridMap inflated = planning_map(scene);
        std::vector<Episode> eps;
        for (uint64_t s = 0; s < 30; ++s) eps.push_back(sample_episode(scene, inflated, s));
        save_dataset(eps, path);
        auto back = load_dataset(path);
        REQUIRE(back.size() == eps.size());
        for (size_t i = 0; i < eps.size(); ++i) {
            CHECK(back[i].scene_id == eps[i].scene_id);
            CHECK(back[i].start.position == eps[i].start.position);
            CHECK(back[i].start.theta == eps[i].start.theta);
            CHECK(back[i].goal == eps[i].goal);
            CHECK(back[i].shortest_length == eps[i].shortest_length);
            REQUIRE(back[i].trajectory.poses.size() == eps[i].trajectory.poses.size());
            for (size_t j = 0; j < eps[i].trajectory.poses.size(); ++j) {
                CHECK(back[i].trajectory.poses[j].position == eps[i].trajectory.poses[j].position);
                CHECK(back[i].trajectory.poses[j].theta == eps[i].trajectory.poses[j].theta);
            }
            REQUIRE(back[i].actions.size() == eps[i].actions.size());
            for (size_t j = 0; j < eps[i].actions.size(); ++j)
                CHECK(back[i].actions[j] == eps[i].actions[j]);
        }
    }

    SECTION("truncated line reports its number") {
        std::ofstream f(path, std::ios::trunc);
        f << episode_to_json(fake_episode(4, 5)).dump() << "\n";
        f << R"({"scene_id": "x", "start")" << "\n";  // cut off
        f.close();
        CHECK_THROWS_WITH(load_dataset(path), Catch::Matchers::ContainsSubstring("line 2"));
    }
    std::filesystem::remove_all(dir);
}
