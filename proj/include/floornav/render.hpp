#pragma once
// Trajectory renders: floor plan underlay, truth-only obstacles in light
// gray, executed trajectories as colored polylines, red goal disk, blue
// start arrow. Output pixels are a pure function of the inputs.

#include <array>
#include <string>
#include <vector>

#include "floornav/core.hpp"
#include "floornav/eval.hpp"
#include "floornav/image.hpp"
#include "floornav/scene.hpp"

namespace floornav {

namespace detail {

struct Col {
    uint8_t r, g, b;
};

inline constexpr std::array<Col, 6> kTrajPalette = {{{235, 140, 30},
                                                     {60, 120, 230},
                                                     {50, 170, 90},
                                                     {160, 70, 200},
                                                     {230, 90, 170},
                                                     {90, 190, 190}}};

inline void fill_disk(ImageRGB& img, double cx, double cy, double rad, Col col) {
    int x0 = std::max(0, static_cast<int>(std::floor(cx - rad)));
    int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(cx + rad)));
    int y0 = std::max(0, static_cast<int>(std::floor(cy - rad)));
    int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(cy + rad)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= rad * rad)
                img.set(x, y, col.r, col.g, col.b);
}

inline void draw_line(ImageRGB& img, double x0, double y0, double x1, double y1, Col col) {
    double dx = x1 - x0, dy = y1 - y0;
    int n = std::max(1, static_cast<int>(std::ceil(std::max(std::abs(dx), std::abs(dy)))));
    for (int i = 0; i <= n; ++i) {
        double t = static_cast<double>(i) / n;
        fill_disk(img, x0 + t * dx, y0 + t * dy, 0.9, col);
    }
}

}  // namespace detail

struct RenderOptions {
    int scale = 4;  // pixels per cell
};

inline ImageRGB render_trajectory_image(const Scene& scene, const std::vector<StepLog>& logs,
                                        const RenderOptions& opt = {}) {
    for (const auto& log : logs)
        if (log.scene_id != scene.id)
            throw Error("render: step log scene '" + log.scene_id + "' does not match scene '" +
                        scene.id + "'");

    const GridMap& plan = scene.floor_plan;
    const int s = opt.scale;
    ImageRGB img;
    img.width = plan.width * s;
    img.height = plan.height * s;
    img.pixels.assign(static_cast<size_t>(img.width) * img.height * 3, 255);

    // +y up: image row 0 shows the top of the world
    auto to_px = [&](const WorldPoint& p) {
        double x = (p.x - plan.offset.x) / plan.resolution * s;
        double y = img.height - (p.y - plan.offset.y) / plan.resolution * s;
        return std::pair<double, double>{x, y};
    };

    for (int r = 0; r < plan.height; ++r) {
        for (int c = 0; c < plan.width; ++c) {
            detail::Col col{255, 255, 255};
            bool plan_obs = plan.is_obstacle(c, r);
            bool truth_obs = scene.truth_map.is_obstacle(c, r);
            if (plan_obs)
                col = plan.at(c, r) == Cell::Unknown ? detail::Col{120, 120, 120}
                                                     : detail::Col{30, 30, 30};
            else if (truth_obs)
                col = {190, 190, 190};  // furniture: truth-only obstacle
            else
                continue;
            for (int yy = 0; yy < s; ++yy)
                for (int xx = 0; xx < s; ++xx)
                    img.set(c * s + xx, img.height - 1 - (r * s + yy), col.r, col.g, col.b);
        }
    }

    for (size_t li = 0; li < logs.size(); ++li) {
        detail::Col col = detail::kTrajPalette[li % detail::kTrajPalette.size()];
        WorldPoint prev = logs[li].start.position;
        for (const auto& e : logs[li].entries) {
            auto [x0, y0] = to_px(prev);
            auto [x1, y1] = to_px(e.pose.position);
            detail::draw_line(img, x0, y0, x1, y1, col);
            prev = e.pose.position;
        }
    }

    for (const auto& log : logs) {
        auto [gx, gy] = to_px(log.goal);
        detail::fill_disk(img, gx, gy, 1.8 * s, {220, 40, 40});
        auto [sx, sy] = to_px(log.start.position);
        detail::Col navy{25, 50, 140};
        detail::fill_disk(img, sx, sy, 1.2 * s, navy);
        double th = log.start.theta;
        detail::draw_line(img, sx, sy, sx + 3.0 * s * std::cos(th), sy - 3.0 * s * std::sin(th),
                          navy);
    }
    return img;
}

inline void render_trajectory(const Scene& scene, const std::vector<StepLog>& logs,
                              const std::string& path, const RenderOptions& opt = {}) {
    write_png_rgb(render_trajectory_image(scene, logs, opt), path);
}

}  // namespace floornav
