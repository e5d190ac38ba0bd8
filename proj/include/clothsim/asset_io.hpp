#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "clothsim/frame_stats.hpp"
#include "clothsim/mesh.hpp"

namespace clothsim {

struct ObjLoadReport {
    std::size_t vertices = 0;
    std::size_t polygons = 0;
    std::size_t triangles = 0;
    std::size_t dropped_degenerate = 0;
};

// OBJ subset: `v x y z [w]` and `f i j k ...` (1-based or negative indices,
// `i/t/n` forms accepted, polygons fan-triangulated). vt, vn, g, o, s,
// usemtl and mtllib lines are ignored; line or point elements are rejected.
// Degenerate triangles are dropped and counted. Throws ParseError or
// IoError.
TriangleMesh load_obj(const std::filesystem::path& path, ObjLoadReport* report = nullptr);
TriangleMesh parse_obj(const std::string& text, const std::string& source_name = "<memory>",
                       ObjLoadReport* report = nullptr);

void write_obj(const TriangleMesh& mesh, const std::filesystem::path& path);

inline constexpr std::string_view kStatsCsvHeader =
    "frame,wall_ms,fps,nodes,springs,obstacle_triangles,collision_hits,backend";

// Fixed formatting: wall_ms with 6 decimals, fps with 3. Throws IoError.
void write_stats_csv(std::span<const FrameStats> stats, const std::filesystem::path& path);
std::string format_stats_csv(std::span<const FrameStats> stats);

// Strict parser for the schema above. Throws ParseError.
std::vector<FrameStats> read_stats_csv(const std::filesystem::path& path);

// Orthographic camera looking along `direction`.
struct CameraConfig {
    Vec3d center{0.0, 0.0, 0.0};    // world point at the image center
    Vec3d direction{0.0, 0.0, -1.0};  // view direction
    Vec3d up{0.0, 1.0, 0.0};
    double half_width = 1.0;          // world units from center to the left/right image edge
    std::uint32_t width = 256;
    std::uint32_t height = 256;
    std::uint8_t background = 32;     // gray level
};

struct SnapshotMesh {
    std::span<const Vec3d> positions;
    std::span<const Triangle> triangles;
    Vec3d tint{1.0, 1.0, 1.0};
};

struct Image {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint8_t> rgb;  // row-major, top row first

    std::array<std::uint8_t, 3> at(std::uint32_t x, std::uint32_t y) const {
        const std::size_t o = (std::size_t{y} * width + x) * 3;
        return {rgb[o], rgb[o + 1], rgb[o + 2]};
    }
};

// Software z-buffered raster; nearer surfaces are brighter. Pixel (x, y) is
// covered when its center lies inside the projected triangle.
Image render_depth(std::span<const SnapshotMesh> meshes, const CameraConfig& camera);

void write_png(const Image& image, const std::filesystem::path& path);

void snapshot_png(std::span<const SnapshotMesh> meshes, const CameraConfig& camera,
                  const std::filesystem::path& path);

}  // namespace clothsim
