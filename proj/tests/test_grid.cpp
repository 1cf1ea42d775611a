#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include <floornav/grid.hpp>
#include <floornav/rng.hpp>

#include "helpers.hpp"

using namespace floornav;

TEST_CASE("pixel_to_world returns cell centers") {
    GridMap g(32, 32, 0.1);
    CHECK(pixel_to_world({0, 0}, g).x == Catch::Approx(0.05).margin(1e-15));
    CHECK(pixel_to_world({0, 0}, g).y == Catch::Approx(0.05).margin(1e-15));

    GridMap g2(32, 32, 0.1, {1.0, 2.0});
    WorldPoint p = pixel_to_world({10, 20}, g2);
    CHECK(p.x == Catch::Approx(2.05).margin(1e-12));
    CHECK(p.y == Catch::Approx(4.05).margin(1e-12));

    CHECK_THROWS_AS(pixel_to_world({32, 0}, g), Error);
    CHECK_THROWS_AS(pixel_to_world({0, -1}, g), Error);
}

TEST_CASE("world_to_pixel floor semantics") {
    GridMap g(32, 32, 0.1);
    CHECK(world_to_pixel({0.05, 0.05}, g) == PixelCoord{0, 0});

    GridMap g2(32, 32, 0.1, {1.0, 2.0});
    CHECK(world_to_pixel({2.05, 4.05}, g2) == PixelCoord{10, 20});

    CHECK_THROWS_AS(world_to_pixel({-0.01, 0.5}, g), Error);
    CHECK_THROWS_AS(world_to_pixel({3.25, 0.5}, g), Error);
}

TEST_CASE("world_to_pixel on exact cell edges") {
    // reference: largest i with offset + i*res <= p, i.e. the edge belongs
    // to the upper cell; exact representable geometry (res 0.25)
    GridMap g(8, 8, 0.25);
    CHECK(world_to_pixel({0.5, 0.25}, g) == PixelCoord{2, 1});
    CHECK(world_to_pixel({0.75, 0.75}, g) == PixelCoord{3, 3});
    // the grid's own outer max edge resolves into the last cell
    CHECK(world_to_pixel({2.0, 2.0}, g) == PixelCoord{7, 7});
    CHECK(world_to_pixel({0.0, 0.0}, g) == PixelCoord{0, 0});
}

TEST_CASE("transform round trip over random pixels") {
    Rng rng(1234);
    for (int trial = 0; trial < 1000; ++trial) {
        int w = 1 + static_cast<int>(rng.uniform_int(60));
        int h = 1 + static_cast<int>(rng.uniform_int(60));
        double res = rng.uniform(0.02, 0.5);
        GridMap g(w, h, res, {rng.uniform(-5, 5), rng.uniform(-5, 5)});
        PixelCoord u{static_cast<int>(rng.uniform_int(w)), static_cast<int>(rng.uniform_int(h))};
        CHECK(world_to_pixel(pixel_to_world(u, g), g) == u);
    }
}

TEST_CASE("inflate radius zero maps Unknown to Occupied and keeps Free") {
    GridMap g(8, 8, 0.1);
    g.set(2, 3, Cell::Unknown);
    g.set(5, 5, Cell::Occupied);
    GridMap out = inflate(g, 0.0);
    CHECK(out.at(2, 3) == Cell::Occupied);
    CHECK(out.at(5, 5) == Cell::Occupied);
    int occupied = 0;
    for (auto c : out.cells)
        if (c == Cell::Occupied) occupied++;
    CHECK(occupied == 2);
}

TEST_CASE("inflate single cell matches brute-force disk") {
    GridMap g(16, 16, 0.1);
    g.set(8, 8, Cell::Occupied);
    GridMap got = inflate(g, 0.2);
    GridMap want = testutil::inflate_bruteforce(g, 0.2);
    CHECK(got.cells == want.cells);
    CHECK(got.at(8, 6) == Cell::Occupied);  // 0.2 away, within 0.2 + 0.05
    CHECK(got.at(8, 5) == Cell::Free);      // 0.3 away
}

TEST_CASE("inflate equals brute-force oracle on random grids") {
    Rng rng(77);
    for (int trial = 0; trial < 25; ++trial) {
        int w = 4 + static_cast<int>(rng.uniform_int(29));
        int h = 4 + static_cast<int>(rng.uniform_int(29));
        GridMap g = testutil::random_grid(rng, w, h, 0.2);
        double radius = rng.uniform(0.0, 0.45);
        GridMap got = inflate(g, radius);
        GridMap want = testutil::inflate_bruteforce(g, radius);
        REQUIRE(got.cells == want.cells);
    }
}

TEST_CASE("inflate is monotone in the radius") {
    Rng rng(78);
    for (int trial = 0; trial < 10; ++trial) {
        GridMap g = testutil::random_grid(rng, 20, 20, 0.15);
        double r1 = rng.uniform(0.0, 0.3);
        double r2 = r1 + rng.uniform(0.0, 0.3);
        GridMap a = inflate(g, r1);
        GridMap b = inflate(g, r2);
        for (size_t i = 0; i < a.cells.size(); ++i)
            if (a.cells[i] == Cell::Occupied) REQUIRE(b.cells[i] == Cell::Occupied);
    }
}

TEST_CASE("all-free map stays all-free under inflation") {
    GridMap g(12, 9, 0.1);
    GridMap out = inflate(g, 0.5);
    for (auto c : out.cells) REQUIRE(c == Cell::Free);
}

TEST_CASE("map save/load round trip") {
    auto dir = std::filesystem::temp_directory_path() / "floornav_grid_test";
    std::filesystem::create_directories(dir);
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        int w = 1 + static_cast<int>(rng.uniform_int(40));
        int h = 1 + static_cast<int>(rng.uniform_int(40));
        GridMap g(w, h, rng.uniform(0.05, 0.3), {rng.uniform(-2, 2), rng.uniform(-2, 2)});
        for (auto& c : g.cells) {
            double u = rng.uniform01();
            c = u < 0.6 ? Cell::Free : (u < 0.85 ? Cell::Occupied : Cell::Unknown);
        }
        std::string path = (dir / ("m" + std::to_string(trial) + ".pgm")).string();
        save_map(g, path, "scene-x");
        LoadedMap back = load_map(path);
        REQUIRE(back.map == g);
        REQUIRE(back.scene_id == "scene-x");
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("map raster byte-exact round trip") {
    auto dir = std::filesystem::temp_directory_path() / "floornav_grid_bytes";
    std::filesystem::create_directories(dir);
    GridMap g(7, 5, 0.1, {0.25, -1.5});
    g.set(3, 2, Cell::Occupied);
    g.set(1, 4, Cell::Unknown);
    std::string p1 = (dir / "a.pgm").string(), p2 = (dir / "b.pgm").string();
    save_map(g, p1, "s");
    save_map(load_map(p1).map, p2, "s");
    auto slurp = [](const std::string& p) {
        std::ifstream f(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
    };
    CHECK(slurp(p1) == slurp(p2));
    CHECK(slurp(sidecar_path(p1)) == slurp(sidecar_path(p2)));
    std::filesystem::remove_all(dir);
}

TEST_CASE("map load error contracts") {
    auto dir = std::filesystem::temp_directory_path() / "floornav_grid_err";
    std::filesystem::create_directories(dir);
    GridMap g(4, 4, 0.1);
    std::string path = (dir / "m.pgm").string();
    save_map(g, path, "s");

    SECTION("missing sidecar") {
        std::filesystem::remove(sidecar_path(path));
        CHECK_THROWS_WITH(load_map(path), Catch::Matchers::ContainsSubstring("sidecar"));
    }
    SECTION("bad pixel value") {
        std::ofstream f(path, std::ios::binary);
        f << "P5\n4 4\n255\n";
        std::vector<uint8_t> px(16, 200);  // not in {0,127,255}
        f.write(reinterpret_cast<char*>(px.data()), px.size());
        f.close();
        CHECK_THROWS_WITH(load_map(path), Catch::Matchers::ContainsSubstring("malformed"));
    }
    SECTION("dimension mismatch") {
        std::ofstream meta(sidecar_path(path), std::ios::trunc);
        meta << "resolution_m=0.1\noffset_x_m=0\noffset_y_m=0\nwidth=5\nheight=4\nscene_id=s\n";
        meta.close();
        CHECK_THROWS_WITH(load_map(path), Catch::Matchers::ContainsSubstring("disagree"));
    }
    std::filesystem::remove_all(dir);
}
