#pragma once
// Paired-map scenes: an abstract floor plan (walls only) and a furnished
// truth map (walls + furniture) over the same grid. The generator builds
// connected multi-room layouts by recursive splitting with door gaps and
// then places furniture rectangles that never block a door or disconnect
// the free space.

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "floornav/core.hpp"
#include "floornav/grid.hpp"
#include "floornav/rng.hpp"

namespace floornav {

constexpr double kDefaultAgentRadius = 0.18;  // meters

enum class SizeClass { Small, Medium, Large };

inline const char* to_string(SizeClass s) {
    switch (s) {
        case SizeClass::Small: return "small";
        case SizeClass::Medium: return "medium";
        case SizeClass::Large: return "large";
    }
    return "?";
}

inline SizeClass size_class_from_string(const std::string& s) {
    if (s == "small") return SizeClass::Small;
    if (s == "medium") return SizeClass::Medium;
    if (s == "large") return SizeClass::Large;
    throw Error("unknown size class: " + s);
}

struct Scene {
    GridMap floor_plan;  // walls only
    GridMap truth_map;   // walls + furniture
    SizeClass size_class = SizeClass::Small;
    std::string id;
};

// 4-connected component labels over Free cells; label -1 for obstacles.
struct FreeComponents {
    std::vector<int> labels;
    int count = 0;
};

inline FreeComponents flood_fill_free(const GridMap& map) {
    FreeComponents fc;
    fc.labels.assign(map.cells.size(), -1);
    std::vector<size_t> stack;
    for (int r = 0; r < map.height; ++r) {
        for (int c = 0; c < map.width; ++c) {
            size_t i = map.index(c, r);
            if (map.cells[i] != Cell::Free || fc.labels[i] >= 0) continue;
            int label = fc.count++;
            stack.push_back(i);
            fc.labels[i] = label;
            while (!stack.empty()) {
                size_t j = stack.back();
                stack.pop_back();
                int jr = static_cast<int>(j) / map.width;
                int jc = static_cast<int>(j) % map.width;
                const int dc[4] = {1, -1, 0, 0};
                const int dr[4] = {0, 0, 1, -1};
                for (int k = 0; k < 4; ++k) {
                    int nc = jc + dc[k], nr = jr + dr[k];
                    if (!map.in_bounds(nc, nr)) continue;
                    size_t nj = map.index(nc, nr);
                    if (map.cells[nj] == Cell::Free && fc.labels[nj] < 0) {
                        fc.labels[nj] = label;
                        stack.push_back(nj);
                    }
                }
            }
        }
    }
    return fc;
}

inline bool free_space_connected(const GridMap& map) {
    return flood_fill_free(map).count <= 1;
}

namespace detail {

struct Rect {
    int c0, r0, w, h;
};

// Two free cells at least `span` apart must exist (double-sweep diameter
// lower bound; requires the free space to be one component already).
inline bool spans_distance(const GridMap& map, double span) {
    std::vector<PixelCoord> cells;
    for (int r = 0; r < map.height; ++r)
        for (int c = 0; c < map.width; ++c)
            if (map.at(c, r) == Cell::Free) cells.push_back({c, r});
    if (cells.size() < 2) return false;
    PixelCoord cur = cells.front();
    double best = 0.0;
    for (int sweep = 0; sweep < 2; ++sweep) {
        PixelCoord far = cur;
        double far_d = -1.0;
        for (const auto& u : cells) {
            double dx = (u.col - cur.col) * map.resolution;
            double dy = (u.row - cur.row) * map.resolution;
            double d = std::hypot(dx, dy);
            if (d > far_d) {
                far_d = d;
                far = u;
            }
        }
        best = std::max(best, far_d);
        cur = far;
    }
    return best >= span;
}

inline void paint_rect(GridMap& map, const Rect& r, Cell v) {
    for (int rr = r.r0; rr < r.r0 + r.h; ++rr)
        for (int cc = r.c0; cc < r.c0 + r.w; ++cc) map.set(cc, rr, v);
}

inline bool rects_overlap(const Rect& a, const Rect& b) {
    return !(a.c0 + a.w <= b.c0 || b.c0 + b.w <= a.c0 || a.r0 + a.h <= b.r0 || b.r0 + b.h <= a.r0);
}

struct LayoutResult {
    GridMap plan;
    std::vector<Rect> door_guard;  // keep-out regions around door gaps
    int free_cells = 0;
};

inline LayoutResult make_floor_plan(Rng& rng, SizeClass size_class, double resolution) {
    const int border = 2;
    const int door_w = static_cast<int>(std::ceil(4.0 * (2.0 * kDefaultAgentRadius) / resolution));
    const int min_room = door_w + 1;

    int side_lo, side_hi, splits;
    switch (size_class) {
        case SizeClass::Small: side_lo = 41, side_hi = 44, splits = 1; break;
        case SizeClass::Medium: side_lo = 55, side_hi = 85, splits = 3; break;
        case SizeClass::Large: side_lo = 95, side_hi = 115, splits = 5; break;
    }
    int w = 0, h = 0;
    // keep total area inside the class band
    for (int tries = 0; tries < 100; ++tries) {
        w = side_lo + static_cast<int>(rng.uniform_int(side_hi - side_lo + 1));
        h = side_lo + static_cast<int>(rng.uniform_int(side_hi - side_lo + 1));
        double area = w * h * resolution * resolution;
        bool ok = false;
        switch (size_class) {
            case SizeClass::Small: ok = area < 20.0; break;
            case SizeClass::Medium: ok = area >= 20.0 && area <= 80.0; break;
            case SizeClass::Large: ok = area > 80.0; break;
        }
        if (ok) break;
    }

    LayoutResult out;
    out.plan = GridMap(w, h, resolution, {0.0, 0.0}, Cell::Free);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            if (r < border || r >= h - border || c < border || c >= w - border)
                out.plan.set(c, r, Cell::Occupied);

    std::vector<Rect> rooms{{border, border, w - 2 * border, h - 2 * border}};
    for (int s = 0; s < splits; ++s) {
        // split the largest splittable room
        int pick = -1;
        long best = -1;
        for (size_t i = 0; i < rooms.size(); ++i) {
            const Rect& rm = rooms[i];
            if (std::max(rm.w, rm.h) >= 2 * min_room + 1) {
                long area = static_cast<long>(rm.w) * rm.h;
                if (area > best) {
                    best = area;
                    pick = static_cast<int>(i);
                }
            }
        }
        if (pick < 0) break;
        Rect rm = rooms[pick];
        bool vertical = rm.w >= rm.h;  // wall perpendicular to the longer side
        if (vertical) {
            int sc = min_room + static_cast<int>(rng.uniform_int(rm.w - 2 * min_room));
            int wall_c = rm.c0 + sc;
            for (int rr = rm.r0; rr < rm.r0 + rm.h; ++rr) out.plan.set(wall_c, rr, Cell::Occupied);
            int dw = std::min(door_w, rm.h);
            int dr0 = rm.r0 + static_cast<int>(rng.uniform_int(rm.h - dw + 1));
            for (int rr = dr0; rr < dr0 + dw; ++rr) out.plan.set(wall_c, rr, Cell::Free);
            out.door_guard.push_back({wall_c - 4, dr0 - 4, 9, dw + 8});
            rooms[pick] = {rm.c0, rm.r0, sc, rm.h};
            rooms.push_back({wall_c + 1, rm.r0, rm.w - sc - 1, rm.h});
        } else {
            int sr = min_room + static_cast<int>(rng.uniform_int(rm.h - 2 * min_room));
            int wall_r = rm.r0 + sr;
            for (int cc = rm.c0; cc < rm.c0 + rm.w; ++cc) out.plan.set(cc, wall_r, Cell::Occupied);
            int dw = std::min(door_w, rm.w);
            int dc0 = rm.c0 + static_cast<int>(rng.uniform_int(rm.w - dw + 1));
            for (int cc = dc0; cc < dc0 + dw; ++cc) out.plan.set(cc, wall_r, Cell::Free);
            out.door_guard.push_back({dc0 - 4, wall_r - 4, dw + 8, 9});
            rooms[pick] = {rm.c0, rm.r0, rm.w, sr};
            rooms.push_back({rm.c0, wall_r + 1, rm.w, rm.h - sr - 1});
        }
    }

    for (Cell c : out.plan.cells)
        if (c == Cell::Free) out.free_cells++;
    return out;
}

}  // namespace detail

// Deterministic in (seed, size_class, furniture_density).
inline Scene synth_scene(uint64_t seed, SizeClass size_class, double furniture_density,
                         double resolution = 0.1) {
    if (furniture_density < 0.0 || furniture_density >= 1.0)
        throw Error("synth_scene: furniture_density must be in [0,1)");

    Rng rng(derive_seed(seed, "synth_scene"));
    const double plan_radius = kDefaultAgentRadius + resolution;
    const int max_scene_tries = 10;
    for (int attempt = 0; attempt < max_scene_tries; ++attempt) {
        detail::LayoutResult layout = detail::make_floor_plan(rng, size_class, resolution);
        GridMap truth = layout.plan;
        if (!free_space_connected(inflate(truth, plan_radius))) continue;

        if (furniture_density > 0.0) {
            const long target = static_cast<long>(furniture_density * layout.free_cells);
            long covered = 0;
            int budget = 800;
            while (covered < target && budget-- > 0) {
                int fw = 3 + static_cast<int>(rng.uniform_int(10));
                int fh = 3 + static_cast<int>(rng.uniform_int(10));
                if (fw > truth.width - 4 || fh > truth.height - 4) continue;
                int c0 = static_cast<int>(rng.uniform_int(truth.width - fw));
                int r0 = static_cast<int>(rng.uniform_int(truth.height - fh));
                detail::Rect cand{c0, r0, fw, fh};

                bool bad = false;
                for (const auto& g : layout.door_guard)
                    if (detail::rects_overlap(cand, g)) {
                        bad = true;
                        break;
                    }
                if (!bad) {
                    for (int rr = r0; rr < r0 + fh && !bad; ++rr)
                        for (int cc = c0; cc < c0 + fw; ++cc)
                            if (truth.at(cc, rr) != Cell::Free) {
                                bad = true;
                                break;
                            }
                }
                if (bad) continue;

                detail::paint_rect(truth, cand, Cell::Occupied);
                // free space must stay one component, and stay one
                // component for a planning-inflated agent as well
                if (!free_space_connected(truth) ||
                    !free_space_connected(inflate(truth, plan_radius))) {
                    detail::paint_rect(truth, cand, Cell::Free);
                    continue;
                }
                covered += static_cast<long>(fw) * fh;
            }
        }

        // the furnished scene must still admit episodes after inflation
        GridMap inflated = inflate(truth, plan_radius);
        if (detail::spans_distance(inflated, 3.2)) {
            Scene scene;
            scene.floor_plan = layout.plan;
            scene.truth_map = truth;
            scene.size_class = size_class;
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%s-%08x", to_string(size_class),
                          static_cast<unsigned>(derive_seed(seed, "scene_id") & 0xFFFFFFFFu));
            scene.id = buf;
            return scene;
        }
    }
    throw Error("synth_scene: retry limit exceeded (seed " + std::to_string(seed) + ")");
}

inline void save_scene(const Scene& scene, const std::string& dir) {
    std::filesystem::create_directories(dir);
    save_map(scene.floor_plan, dir + "/" + scene.id + ".plan.pgm", scene.id);
    save_map(scene.truth_map, dir + "/" + scene.id + ".truth.pgm", scene.id);
}

inline Scene load_scene(const std::string& dir, const std::string& id) {
    Scene scene;
    LoadedMap plan = load_map(dir + "/" + id + ".plan.pgm");
    LoadedMap truth = load_map(dir + "/" + id + ".truth.pgm");
    scene.floor_plan = std::move(plan.map);
    scene.truth_map = std::move(truth.map);
    scene.id = id;
    auto dash = id.find('-');
    scene.size_class = size_class_from_string(id.substr(0, dash));
    if (scene.floor_plan.width != scene.truth_map.width ||
        scene.floor_plan.height != scene.truth_map.height ||
        scene.floor_plan.resolution != scene.truth_map.resolution ||
        !(scene.floor_plan.offset == scene.truth_map.offset))
        throw Error("scene maps disagree on geometry: " + id);
    for (size_t i = 0; i < scene.floor_plan.cells.size(); ++i)
        if (scene.floor_plan.cells[i] != Cell::Free && scene.truth_map.cells[i] == Cell::Free)
            throw Error("scene " + id + ": truth map is missing a floor plan obstacle");
    return scene;
}

inline std::vector<std::string> list_scene_ids(const std::string& dir) {
    std::vector<std::string> ids;
    const std::string suffix = ".plan.pgm";
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        std::string name = entry.path().filename().string();
        if (name.size() > suffix.size() &&
            name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
            ids.push_back(name.substr(0, name.size() - suffix.size()));
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

}  // namespace floornav
