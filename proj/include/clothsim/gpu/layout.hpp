#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clothsim/gpu/device.hpp"

namespace clothsim::gpu {

// Device-side records. Vectors are stored as flat f32 triples (12-byte
// stride), which needs only 4-byte alignment in a WGSL array<f32>.
struct SpringRecord {
    std::uint32_t a;
    std::uint32_t b;
    float rest_length;
    std::uint32_t kind;
};

struct NodeInfoRecord {
    float mass;
    std::uint32_t flags;
};
inline constexpr std::uint32_t kNodePinned = 1u << 0;
inline constexpr std::uint32_t kNodePulled = 1u << 1;

struct TriangleRecord {
    std::uint32_t v[3];
    std::uint32_t edge_mask;
};

struct ObstacleTriangleRecord {
    std::uint32_t v[3];
    std::uint32_t edge_mask;
    float normal[3];
    float pad;
};

struct StatusRecord {
    std::int32_t hits;
    std::int32_t flags;
    std::int32_t first_bad_node;
    std::int32_t overflow_count;
};
inline constexpr std::int32_t kStatusDiverged = 1 << 0;
inline constexpr std::int32_t kStatusSaturated = 1 << 1;

inline constexpr std::uint32_t kFlagRawSum = 1u << 0;
inline constexpr std::uint32_t kFlagFromPrevious = 1u << 1;
inline constexpr std::uint32_t kFlagExplicitEuler = 1u << 2;

// std140-compatible; field order matches params.wgsl.
struct ParamsUniform {
    std::uint32_t num_nodes;
    std::uint32_t num_springs;
    std::uint32_t num_cloth_triangles;
    std::uint32_t num_obstacle_triangles;
    float dt;
    float damping;
    float epsilon;
    float margin;
    float stiffness[4];  // structural, shear, bend, unused
    float gravity[4];
    float pull[4];
    float fixed_scale;
    float inv_fixed_scale;
    std::uint32_t flags;
    std::uint32_t pair_row;  // dispatch row width for 2-D pair grids, in invocations
};

static_assert(sizeof(SpringRecord) == 16);
static_assert(sizeof(NodeInfoRecord) == 8);
static_assert(sizeof(TriangleRecord) == 16);
static_assert(sizeof(ObstacleTriangleRecord) == 32);
static_assert(sizeof(StatusRecord) == 16);
static_assert(sizeof(ParamsUniform) == 96);

enum class BufferRole : std::uint8_t {
    params_uniform,
    positions,
    previous_positions,
    velocities,
    forces_fixed_point,
    spring_table,
    node_info,
    triangle_table,
    obstacle_vertices,
    obstacle_triangles,
    response_accumulator,
    response_count,
    vertex_normals,
    adjacency_offsets,
    adjacency_triangles,
    status,
};
inline constexpr std::size_t kBufferRoleCount = 16;

// Binding index in group 0 equals the role's enum value; the WGSL assets
// declare the same indices and variable names.
std::string_view wgsl_name(BufferRole role);
inline constexpr std::uint32_t binding_index(BufferRole role) { return static_cast<std::uint32_t>(role); }

struct BufferSpec {
    BufferRole role;
    std::uint64_t stride = 0;  // bytes per element
    std::uint64_t count = 0;
    std::uint64_t size() const { return stride * count; }
};

struct LayoutCounts {
    std::uint64_t nodes = 0;
    std::uint64_t springs = 0;
    std::uint64_t cloth_triangles = 0;
    std::uint64_t obstacle_vertices = 0;
    std::uint64_t obstacle_triangles = 0;

    static LayoutCounts for_grid(std::uint32_t nx, std::uint32_t ny, std::uint64_t obstacle_vertices = 0,
                                 std::uint64_t obstacle_triangles = 0);
};

struct GpuBufferLayout {
    LayoutCounts counts;
    std::array<BufferSpec, kBufferRoleCount> buffers{};

    const BufferSpec& operator[](BufferRole r) const { return buffers[static_cast<std::size_t>(r)]; }
    std::uint64_t total_bytes() const;
    const BufferSpec& largest_storage() const;
    // First storage buffer over the binding ceiling, if any.
    std::optional<BufferRole> first_over(const Limits& limits) const;
};

GpuBufferLayout compute_layout(const LayoutCounts& counts);

// Human-readable per-node/per-spring byte formula.
std::string layout_formula();

struct ProbeResult {
    // Largest square grid whose every binding fits the per-binding ceiling.
    std::uint64_t max_nodes = 0;
    std::uint32_t grid_side = 0;
    std::optional<BufferRole> limiting_role;
    // Largest square grid whose buffers together fit in one ceiling's worth
    // of memory (the alternative reading of a "memory limit").
    std::uint64_t max_nodes_total = 0;
    std::uint32_t total_grid_side = 0;
    std::string diagnostic;
};

// Binary search over square n x n cloth grids.
ProbeResult max_nodes_probe(const Limits& limits, std::uint64_t obstacle_vertices = 0,
                            std::uint64_t obstacle_triangles = 0);

}  // namespace clothsim::gpu
