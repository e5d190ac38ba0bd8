#include "clothsim/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>

#include "clothsim/errors.hpp"
#include "clothsim/params.hpp"

namespace clothsim {

SpringCounts ClothMesh::spring_counts() const {
    SpringCounts c;
    for (const Spring& s : springs) {
        switch (s.kind) {
            case SpringKind::structural: ++c.structural; break;
            case SpringKind::shear: ++c.shear; break;
            case SpringKind::bend: ++c.bend; break;
        }
    }
    return c;
}

std::vector<Vec3d> ClothMesh::positions() const {
    std::vector<Vec3d> out;
    out.reserve(nodes.size());
    for (const Node& n : nodes) out.push_back(n.position);
    return out;
}

TriangleMesh TriangleMesh::make(std::vector<Vec3d> vertices, std::vector<Triangle> triangles) {
    TriangleMesh mesh;
    mesh.face_normals.reserve(triangles.size());
    for (std::size_t t = 0; t < triangles.size(); ++t) {
        const Triangle& tri = triangles[t];
        for (std::uint32_t idx : tri) {
            if (idx >= vertices.size()) {
                throw ConstructionError("triangle " + std::to_string(t) + " references vertex " +
                                        std::to_string(idx) + " out of range");
            }
        }
        const Vec3d n = cross(vertices[tri[1]] - vertices[tri[0]], vertices[tri[2]] - vertices[tri[0]]);
        const double area = 0.5 * length(n);
        if (!(area > kMinTriangleArea)) {
            throw ConstructionError("degenerate triangle " + std::to_string(t));
        }
        mesh.face_normals.push_back(n / (2.0 * area));
    }
    mesh.vertices = std::move(vertices);
    mesh.triangles = std::move(triangles);
    return mesh;
}

void SimParams::validate() const {
    auto fail = [](const std::string& what) { throw ConfigError("invalid parameters: " + what); };
    if (!(dt > 0.0)) fail("dt must be > 0");
    if (substeps == 0) fail("substeps must be >= 1");
    for (double k : stiffness) {
        if (!(k >= 0.0)) fail("stiffness must be >= 0");
    }
    if (!(damping >= 0.0)) fail("damping must be >= 0");
    if (!(epsilon_mt > 0.0)) fail("epsilonMT must be > 0");
    if (!(response_margin >= 0.0)) fail("response margin must be >= 0");
    if (!(fixed_point_scale >= 1.0)) fail("fixed-point scale must be >= 1");
    if (workgroup_size == 0) fail("workgroup size must be positive");
}

std::vector<std::uint32_t> top_row() { return {0}; }

ClothMesh generate_cloth_grid(const ClothGridSpec& spec) {
    if (spec.nx < 2 || spec.ny < 2) {
        throw ConstructionError("cloth grid needs at least 2x2 nodes, got " + std::to_string(spec.nx) +
                                "x" + std::to_string(spec.ny));
    }
    if (!(spec.width > 0.0) || !(spec.height > 0.0) || !(spec.total_mass > 0.0)) {
        throw ConstructionError("cloth width, height and mass must be positive");
    }
    const std::uint64_t count = std::uint64_t{spec.nx} * spec.ny;
    if (count > std::numeric_limits<std::uint32_t>::max()) {
        throw ConstructionError("cloth grid too large for 32-bit node indices");
    }

    ClothMesh mesh;
    mesh.nx = spec.nx;
    mesh.ny = spec.ny;
    const double node_mass = spec.total_mass / static_cast<double>(count);
    const double dx = spec.width / (spec.nx - 1);
    const double dy = spec.height / (spec.ny - 1);

    mesh.nodes.resize(count);
    for (std::uint32_t j = 0; j < spec.ny; ++j) {
        for (std::uint32_t i = 0; i < spec.nx; ++i) {
            const double u = -0.5 * spec.width + i * dx;
            const double v = -0.5 * spec.height + j * dy;
            Node& n = mesh.nodes[mesh.index(i, j)];
            n.position = spec.plane == GridPlane::xz ? Vec3d{u, 0.0, v} : Vec3d{u, -v, 0.0};
            n.position += spec.center;
            n.mass = node_mass;
        }
    }
    for (std::uint32_t row : spec.pinned_rows) {
        if (row >= spec.ny) {
            throw ConstructionError("pinned row " + std::to_string(row) + " outside grid");
        }
        for (std::uint32_t i = 0; i < spec.nx; ++i) mesh.nodes[mesh.index(i, row)].pinned = true;
    }

    const SpringCounts expected = spring_count_formula(spec.nx, spec.ny);
    mesh.springs.reserve(expected.total());
    auto add = [&](std::uint32_t a, std::uint32_t b, SpringKind kind) {
        mesh.springs.push_back(
            {a, b, length(mesh.nodes[b].position - mesh.nodes[a].position), kind});
    };
    for (std::uint32_t j = 0; j < spec.ny; ++j) {
        for (std::uint32_t i = 0; i < spec.nx; ++i) {
            const std::uint32_t here = mesh.index(i, j);
            if (i + 1 < spec.nx) add(here, mesh.index(i + 1, j), SpringKind::structural);
            if (j + 1 < spec.ny) add(here, mesh.index(i, j + 1), SpringKind::structural);
        }
    }
    for (std::uint32_t j = 0; j + 1 < spec.ny; ++j) {
        for (std::uint32_t i = 0; i + 1 < spec.nx; ++i) {
            add(mesh.index(i, j), mesh.index(i + 1, j + 1), SpringKind::shear);
            add(mesh.index(i + 1, j), mesh.index(i, j + 1), SpringKind::shear);
        }
    }
    for (std::uint32_t j = 0; j < spec.ny; ++j) {
        for (std::uint32_t i = 0; i < spec.nx; ++i) {
            const std::uint32_t here = mesh.index(i, j);
            if (i + 2 < spec.nx) add(here, mesh.index(i + 2, j), SpringKind::bend);
            if (j + 2 < spec.ny) add(here, mesh.index(i, j + 2), SpringKind::bend);
        }
    }

    // Winding gives +y normals on the xz plane.
    mesh.triangles.reserve(std::size_t{2} * (spec.nx - 1) * (spec.ny - 1));
    for (std::uint32_t j = 0; j + 1 < spec.ny; ++j) {
        for (std::uint32_t i = 0; i + 1 < spec.nx; ++i) {
            const std::uint32_t a = mesh.index(i, j);
            const std::uint32_t b = mesh.index(i + 1, j);
            const std::uint32_t c = mesh.index(i, j + 1);
            const std::uint32_t d = mesh.index(i + 1, j + 1);
            mesh.triangles.push_back({a, c, b});
            mesh.triangles.push_back({b, c, d});
        }
    }
    return mesh;
}

SpringCounts spring_count_formula(std::uint32_t nx, std::uint32_t ny) {
    if (nx < 2 || ny < 2) throw ConstructionError("spring_count_formula needs nx, ny >= 2");
    const std::size_t x = nx;
    const std::size_t y = ny;
    return {x * (y - 1) + y * (x - 1), 2 * (x - 1) * (y - 1),
            x * (y >= 2 ? y - 2 : 0) + y * (x >= 2 ? x - 2 : 0)};
}

TriangleMesh generate_icosphere(int subdivisions, double radius, Vec3d center) {
    if (subdivisions < 0 || subdivisions > 6) {
        throw ConstructionError("icosphere subdivisions must be in [0, 6]");
    }
    if (!(radius > 0.0)) throw ConstructionError("icosphere radius must be positive");

    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3d> unit = {
        {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
        {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
        {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1},
    };
    for (Vec3d& v : unit) v = normalize(v);
    std::vector<Triangle> faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
    };

    for (int level = 0; level < subdivisions; ++level) {
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoints;
        auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
            const auto key = std::minmax(a, b);
            if (auto it = midpoints.find(key); it != midpoints.end()) return it->second;
            const auto idx = static_cast<std::uint32_t>(unit.size());
            unit.push_back(normalize(unit[a] + unit[b]));
            midpoints.emplace(key, idx);
            return idx;
        };
        std::vector<Triangle> next;
        next.reserve(faces.size() * 4);
        for (const Triangle& f : faces) {
            const std::uint32_t ab = midpoint(f[0], f[1]);
            const std::uint32_t bc = midpoint(f[1], f[2]);
            const std::uint32_t ca = midpoint(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }

    for (Vec3d& v : unit) v = center + v * radius;
    return TriangleMesh::make(std::move(unit), std::move(faces));
}

double face_plane_inradius(const TriangleMesh& mesh, Vec3d center) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const double d = dot(mesh.vertices[mesh.triangles[t][0]] - center, mesh.face_normals[t]);
        best = std::min(best, std::abs(d));
    }
    return best;
}

std::vector<Vec3d> compute_vertex_normals(std::span<const Vec3d> positions,
                                          std::span<const Triangle> triangles) {
    std::vector<Vec3d> sums(positions.size());
    for (const Triangle& t : triangles) {
        const Vec3d n =
            normalize(cross(positions[t[1]] - positions[t[0]], positions[t[2]] - positions[t[0]]));
        for (std::uint32_t idx : t) sums[idx] += n;
    }
    for (Vec3d& n : sums) {
        const double len = length(n);
        n = len > 1e-12 ? n / len : Vec3d{0.0, 1.0, 0.0};
    }
    return sums;
}

std::vector<Vec3d> compute_vertex_normals(const ClothMesh& mesh) {
    const std::vector<Vec3d> pos = mesh.positions();
    return compute_vertex_normals(pos, mesh.triangles);
}

std::vector<std::uint8_t> edge_owner_masks(std::span<const Triangle> triangles) {
    std::unordered_map<std::uint64_t, std::uint32_t> seen;
    seen.reserve(triangles.size() * 2);
    std::vector<std::uint8_t> masks(triangles.size(), 0);
    for (std::size_t t = 0; t < triangles.size(); ++t) {
        for (int k = 0; k < 3; ++k) {
            const auto [lo, hi] = std::minmax(triangles[t][k], triangles[t][(k + 1) % 3]);
            const std::uint64_t key = (std::uint64_t{lo} << 32) | hi;
            if (seen.emplace(key, static_cast<std::uint32_t>(t)).second) {
                masks[t] |= static_cast<std::uint8_t>(1u << k);
            }
        }
    }
    return masks;
}

}  // namespace clothsim
