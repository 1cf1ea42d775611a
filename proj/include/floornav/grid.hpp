#pragma once
// Occupancy grid: three-state raster with a world transform
// (resolution = meters per cell, offset = world position of the
// grid origin corner). Pixel (0,0) is the cell whose world extent is
// [offset, offset + resolution) on both axes; row index grows with +y.
//
// Raster file format: binary PGM, 255 = Free, 0 = Occupied, 127 = Unknown,
// plus a UTF-8 key=value sidecar at <path>.meta. Round trips are byte-exact.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "floornav/core.hpp"
#include "floornav/image.hpp"

namespace floornav {

enum class Cell : uint8_t { Free = 0, Occupied = 1, Unknown = 2 };

struct GridMap {
    int width = 0;      // cells
    int height = 0;     // cells
    double resolution = 0.1;  // meters per cell
    Vec2 offset;        // world coords of the (0,0) cell corner
    std::vector<Cell> cells;  // row-major

    GridMap() = default;
    GridMap(int w, int h, double res, Vec2 off = {}, Cell fill = Cell::Free)
        : width(w), height(h), resolution(res), offset(off),
          cells(static_cast<size_t>(w) * h, fill) {
        if (w < 1 || h < 1 || res <= 0.0)
            throw Error("GridMap: width/height must be >= 1 and resolution > 0");
    }

    size_t index(int col, int row) const { return static_cast<size_t>(row) * width + col; }
    bool in_bounds(int col, int row) const {
        return col >= 0 && col < width && row >= 0 && row < height;
    }
    bool in_bounds(const PixelCoord& u) const { return in_bounds(u.col, u.row); }

    Cell at(int col, int row) const { return cells[index(col, row)]; }
    Cell at(const PixelCoord& u) const { return cells[index(u.col, u.row)]; }
    void set(int col, int row, Cell c) { cells[index(col, row)] = c; }

    bool is_free(const PixelCoord& u) const { return at(u) == Cell::Free; }
    // Unknown counts as an obstacle for planning and collision.
    bool is_obstacle(int col, int row) const { return at(col, row) != Cell::Free; }

    bool operator==(const GridMap& o) const {
        return width == o.width && height == o.height && resolution == o.resolution &&
               offset == o.offset && cells == o.cells;
    }
};

// Cell-center world coordinates of a pixel.
inline WorldPoint pixel_to_world(const PixelCoord& u, const GridMap& map) {
    if (!map.in_bounds(u)) {
        throw Error("pixel_to_world: pixel (" + std::to_string(u.col) + "," +
                    std::to_string(u.row) + ") out of bounds");
    }
    return {(u.col + 0.5) * map.resolution + map.offset.x,
            (u.row + 0.5) * map.resolution + map.offset.y};
}

// floor((p - offset) / resolution); points exactly on the outer max edge
// resolve into the last cell so the closed world rectangle maps in-bounds.
inline PixelCoord world_to_pixel(const WorldPoint& p, const GridMap& map) {
    double fc = std::floor((p.x - map.offset.x) / map.resolution);
    double fr = std::floor((p.y - map.offset.y) / map.resolution);
    int col = static_cast<int>(fc);
    int row = static_cast<int>(fr);
    if (col == map.width && (p.x - map.offset.x) == map.width * map.resolution) col -= 1;
    if (row == map.height && (p.y - map.offset.y) == map.height * map.resolution) row -= 1;
    if (col < 0 || col >= map.width || row < 0 || row >= map.height) {
        std::ostringstream ss;
        ss << "world_to_pixel: point (" << p.x << "," << p.y << ") outside grid";
        throw Error(ss.str());
    }
    return {col, row};
}

// Dilate obstacles: output cell is Occupied iff any Occupied/Unknown input
// cell center lies within (radius + half cell) of the output cell center.
// Output holds only Free/Occupied.
inline GridMap inflate(const GridMap& map, double radius) {
    if (radius < 0.0) throw Error("inflate: radius must be >= 0");
    GridMap out = map;
    const double reach = radius + 0.5 * map.resolution;
    const int rad_cells = static_cast<int>(std::floor(reach / map.resolution)) + 1;
    const double reach2 = reach * reach;
    for (int r = 0; r < map.height; ++r) {
        for (int c = 0; c < map.width; ++c) {
            bool occ = false;
            for (int dr = -rad_cells; dr <= rad_cells && !occ; ++dr) {
                int rr = r + dr;
                if (rr < 0 || rr >= map.height) continue;
                for (int dc = -rad_cells; dc <= rad_cells; ++dc) {
                    int cc = c + dc;
                    if (cc < 0 || cc >= map.width) continue;
                    if (map.at(cc, rr) == Cell::Free) continue;
                    double d2 = (dc * map.resolution) * (dc * map.resolution) +
                                (dr * map.resolution) * (dr * map.resolution);
                    if (d2 <= reach2) {
                        occ = true;
                        break;
                    }
                }
            }
            out.set(c, r, occ ? Cell::Occupied : Cell::Free);
        }
    }
    return out;
}

namespace detail {

inline uint8_t cell_to_gray(Cell c) {
    switch (c) {
        case Cell::Free: return 255;
        case Cell::Occupied: return 0;
        case Cell::Unknown: return 127;
    }
    return 127;
}

inline Cell gray_to_cell(uint8_t v, const std::string& path) {
    if (v == 255) return Cell::Free;
    if (v == 0) return Cell::Occupied;
    if (v == 127) return Cell::Unknown;
    throw Error("malformed map raster (pixel value " + std::to_string(v) + "): " + path);
}

}  // namespace detail

inline std::string sidecar_path(const std::string& map_path) { return map_path + ".meta"; }

inline void save_map(const GridMap& map, const std::string& path, const std::string& scene_id) {
    ImageGray img;
    img.width = map.width;
    img.height = map.height;
    img.pixels.resize(map.cells.size());
    for (size_t i = 0; i < map.cells.size(); ++i) img.pixels[i] = detail::cell_to_gray(map.cells[i]);
    write_pgm(img, path);

    std::ofstream meta(sidecar_path(path), std::ios::binary);
    if (!meta) throw Error("cannot open for writing: " + sidecar_path(path));
    meta.precision(17);
    meta << "resolution_m=" << map.resolution << "\n";
    meta << "offset_x_m=" << map.offset.x << "\n";
    meta << "offset_y_m=" << map.offset.y << "\n";
    meta << "width=" << map.width << "\n";
    meta << "height=" << map.height << "\n";
    meta << "scene_id=" << scene_id << "\n";
}

struct LoadedMap {
    GridMap map;
    std::string scene_id;
};

inline LoadedMap load_map(const std::string& path) {
    ImageGray img = read_pgm(path);

    std::ifstream meta(sidecar_path(path), std::ios::binary);
    if (!meta) throw Error("missing map sidecar: " + sidecar_path(path));
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(meta, line)) {
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw Error("malformed sidecar line '" + line + "' in " + sidecar_path(path));
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    for (const char* key : {"resolution_m", "offset_x_m", "offset_y_m", "width", "height", "scene_id"}) {
        if (!kv.count(key)) throw Error(std::string("sidecar missing key '") + key + "': " + sidecar_path(path));
    }
    int w = std::stoi(kv["width"]);
    int h = std::stoi(kv["height"]);
    if (w != img.width || h != img.height)
        throw Error("sidecar dimensions disagree with raster: " + path);

    LoadedMap out;
    out.map = GridMap(w, h, std::stod(kv["resolution_m"]),
                      {std::stod(kv["offset_x_m"]), std::stod(kv["offset_y_m"])});
    for (size_t i = 0; i < out.map.cells.size(); ++i)
        out.map.cells[i] = detail::gray_to_cell(img.pixels[i], path);
    out.scene_id = kv["scene_id"];
    return out;
}

}  // namespace floornav
