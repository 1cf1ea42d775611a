#pragma once
// Basic geometric value types shared across the library.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace floornav {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
};

// World-frame point in meters. Actions are per-step displacements in meters.
using WorldPoint = Vec2;
using Action = Vec2;

struct PixelCoord {
    int col = 0;
    int row = 0;
    bool operator==(const PixelCoord& o) const { return col == o.col && row == o.row; }
};

struct Pose {
    WorldPoint position;
    double theta = 0.0;  // radians, y-up frame, 0 = +x
};

inline double distance(const WorldPoint& a, const WorldPoint& b) {
    return (a - b).norm();
}

// Wrap into (-pi, pi].
inline double wrap_angle(double a) {
    const double two_pi = 2.0 * M_PI;
    a = std::fmod(a, two_pi);
    if (a <= -M_PI) a += two_pi;
    if (a > M_PI) a -= two_pi;
    return a;
}

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace floornav
