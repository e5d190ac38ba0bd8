#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "clothsim/vec3.hpp"

namespace clothsim {

using Triangle = std::array<std::uint32_t, 3>;

struct Node {
    Vec3d position;
    Vec3d velocity;
    double mass = 1.0;
    bool pinned = false;
};

enum class SpringKind : std::uint8_t { structural = 0, shear = 1, bend = 2 };

struct Spring {
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    double rest_length = 0.0;
    SpringKind kind = SpringKind::structural;
};

struct SpringCounts {
    std::size_t structural = 0;
    std::size_t shear = 0;
    std::size_t bend = 0;

    std::size_t total() const { return structural + shear + bend; }
    friend bool operator==(const SpringCounts&, const SpringCounts&) = default;
};

// Grid node (i, j) lives at index j * nx + i. Row j = 0 is the "top" row.
struct ClothMesh {
    std::uint32_t nx = 0;
    std::uint32_t ny = 0;
    std::vector<Node> nodes;
    std::vector<Spring> springs;
    std::vector<Triangle> triangles;

    std::uint32_t index(std::uint32_t i, std::uint32_t j) const { return j * nx + i; }
    SpringCounts spring_counts() const;
    std::vector<Vec3d> positions() const;
};

// Static obstacle surface. Construct through make(), which validates the
// triangles and fills face_normals.
struct TriangleMesh {
    std::vector<Vec3d> vertices;
    std::vector<Triangle> triangles;
    std::vector<Vec3d> face_normals;

    static TriangleMesh make(std::vector<Vec3d> vertices, std::vector<Triangle> triangles);

    bool empty() const { return triangles.empty(); }
};

inline constexpr double kMinTriangleArea = 1e-12;

enum class GridPlane : std::uint8_t {
    xz,  // horizontal, normals along +y
    xy,  // vertical, normals along -z
};

struct ClothGridSpec {
    std::uint32_t nx = 2;
    std::uint32_t ny = 2;
    double width = 1.0;
    double height = 1.0;
    double total_mass = 1.0;
    std::vector<std::uint32_t> pinned_rows;
    GridPlane plane = GridPlane::xz;
    Vec3d center{};
};

// Rows pinned by the hanging scene.
std::vector<std::uint32_t> top_row();

ClothMesh generate_cloth_grid(const ClothGridSpec& spec);

SpringCounts spring_count_formula(std::uint32_t nx, std::uint32_t ny);

TriangleMesh generate_icosphere(int subdivisions, double radius, Vec3d center = {});

// Smallest distance from the icosphere center to any face plane.
double face_plane_inradius(const TriangleMesh& mesh, Vec3d center = {});

std::vector<Vec3d> compute_vertex_normals(std::span<const Vec3d> positions,
                                          std::span<const Triangle> triangles);
std::vector<Vec3d> compute_vertex_normals(const ClothMesh& mesh);

// Bit k of mask[t] is set when edge (tri[k], tri[(k+1)%3]) is first seen in
// triangle t. Shared edges are therefore owned by exactly one triangle.
std::vector<std::uint8_t> edge_owner_masks(std::span<const Triangle> triangles);

}  // namespace clothsim
