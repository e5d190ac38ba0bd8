#include "clothsim/gpu/layout.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "clothsim/mesh.hpp"

namespace clothsim::gpu {

std::string_view wgsl_name(BufferRole role) {
    switch (role) {
        case BufferRole::params_uniform: return "params";
        case BufferRole::positions: return "positions";
        case BufferRole::previous_positions: return "previousPositions";
        case BufferRole::velocities: return "velocities";
        case BufferRole::forces_fixed_point: return "forces";
        case BufferRole::spring_table: return "springs";
        case BufferRole::node_info: return "nodeInfo";
        case BufferRole::triangle_table: return "clothTriangles";
        case BufferRole::obstacle_vertices: return "obstacleVertices";
        case BufferRole::obstacle_triangles: return "obstacleTriangles";
        case BufferRole::response_accumulator: return "responseSum";
        case BufferRole::response_count: return "responseCount";
        case BufferRole::vertex_normals: return "normals";
        case BufferRole::adjacency_offsets: return "adjacencyOffsets";
        case BufferRole::adjacency_triangles: return "adjacencyTriangles";
        case BufferRole::status: return "status";
    }
    return "?";
}

LayoutCounts LayoutCounts::for_grid(std::uint32_t nx, std::uint32_t ny, std::uint64_t obstacle_vertices,
                                    std::uint64_t obstacle_triangles) {
    return {std::uint64_t{nx} * ny, spring_count_formula(nx, ny).total(),
            std::uint64_t{2} * (nx - 1) * (ny - 1), obstacle_vertices, obstacle_triangles};
}

GpuBufferLayout compute_layout(const LayoutCounts& c) {
    GpuBufferLayout layout;
    layout.counts = c;
    auto set = [&](BufferRole role, std::uint64_t stride, std::uint64_t count) {
        layout.buffers[static_cast<std::size_t>(role)] = {role, stride, count};
    };
    constexpr std::uint64_t vec3 = 3 * sizeof(float);
    set(BufferRole::params_uniform, sizeof(ParamsUniform), 1);
    set(BufferRole::positions, vec3, c.nodes);
    set(BufferRole::previous_positions, vec3, c.nodes);
    set(BufferRole::velocities, vec3, c.nodes);
    set(BufferRole::forces_fixed_point, 3 * sizeof(std::int32_t), c.nodes);
    set(BufferRole::spring_table, sizeof(SpringRecord), c.springs);
    set(BufferRole::node_info, sizeof(NodeInfoRecord), c.nodes);
    set(BufferRole::triangle_table, sizeof(TriangleRecord), c.cloth_triangles);
    set(BufferRole::obstacle_vertices, vec3, c.obstacle_vertices);
    set(BufferRole::obstacle_triangles, sizeof(ObstacleTriangleRecord), c.obstacle_triangles);
    set(BufferRole::response_accumulator, 3 * sizeof(std::int32_t), c.nodes);
    set(BufferRole::response_count, sizeof(std::int32_t), c.nodes);
    set(BufferRole::vertex_normals, vec3, c.nodes);
    set(BufferRole::adjacency_offsets, sizeof(std::uint32_t), c.nodes + 1);
    set(BufferRole::adjacency_triangles, sizeof(std::uint32_t), 3 * c.cloth_triangles);
    set(BufferRole::status, sizeof(StatusRecord), 1);
    return layout;
}

std::uint64_t GpuBufferLayout::total_bytes() const {
    std::uint64_t total = 0;
    for (const BufferSpec& b : buffers) total += b.size();
    return total;
}

const BufferSpec& GpuBufferLayout::largest_storage() const {
    const BufferSpec* best = &buffers[1];
    for (std::size_t i = 1; i < buffers.size(); ++i) {
        if (buffers[i].size() > best->size()) best = &buffers[i];
    }
    return *best;
}

std::optional<BufferRole> GpuBufferLayout::first_over(const Limits& limits) const {
    for (std::size_t i = 1; i < buffers.size(); ++i) {
        if (buffers[i].size() > limits.max_storage_buffer_binding_size ||
            buffers[i].size() > limits.max_buffer_size) {
            return buffers[i].role;
        }
    }
    return std::nullopt;
}

std::string layout_formula() {
    return fmt::format(
        "per node: positions/previousPositions/velocities/normals 4x12 B + forces 12 B + "
        "responseSum 12 B + responseCount 4 B + nodeInfo 8 B + adjacencyOffsets 4 B; "
        "per spring: {} B; per cloth triangle: {} B + adjacency 12 B; per obstacle vertex 12 B; "
        "per obstacle triangle {} B; square n x n cloth has 2n(n-1) + 2(n-1)^2 + 2n(n-2) springs "
        "and 2(n-1)^2 triangles",
        sizeof(SpringRecord), sizeof(TriangleRecord), sizeof(ObstacleTriangleRecord));
}

ProbeResult max_nodes_probe(const Limits& limits, std::uint64_t obstacle_vertices,
                            std::uint64_t obstacle_triangles) {
    auto layout_for = [&](std::uint32_t n) {
        return compute_layout(LayoutCounts::for_grid(n, n, obstacle_vertices, obstacle_triangles));
    };
    auto fits_binding = [&](std::uint32_t n) { return !layout_for(n).first_over(limits).has_value(); };
    auto fits_total = [&](std::uint32_t n) {
        return layout_for(n).total_bytes() <= limits.max_storage_buffer_binding_size;
    };
    // Largest n in [2, hi] with pred(n), or 0 if pred(2) fails. pred is monotone.
    auto search = [](auto pred) -> std::uint32_t {
        if (!pred(2)) return 0;
        std::uint32_t lo = 2;
        std::uint32_t hi = 65535;
        while (lo < hi) {
            const std::uint32_t mid = lo + (hi - lo + 1) / 2;
            if (pred(mid)) lo = mid; else hi = mid - 1;
        }
        return lo;
    };

    ProbeResult r;
    r.grid_side = search(fits_binding);
    r.max_nodes = std::uint64_t{r.grid_side} * r.grid_side;
    r.total_grid_side = search(fits_total);
    r.max_nodes_total = std::uint64_t{r.total_grid_side} * r.total_grid_side;
    if (r.grid_side == 0) {
        r.limiting_role = layout_for(2).first_over(limits);
        r.diagnostic = fmt::format("even a 2x2 cloth does not fit: binding ceiling {} bytes",
                                   limits.max_storage_buffer_binding_size);
    } else if (r.grid_side < 65535) {
        r.limiting_role = layout_for(r.grid_side + 1).first_over(limits);
        r.diagnostic = fmt::format("{}x{} grid is the largest that fits; buffer '{}' overflows next",
                                   r.grid_side, r.grid_side, wgsl_name(*r.limiting_role));
    } else {
        r.diagnostic = "search ceiling reached";
    }
    return r;
}

}  // namespace clothsim::gpu
