#pragma once

// Host translations of the WGSL kernels in shaders/. One function per entry
// point, invoked once per global invocation id. All arithmetic is f32.

#include <cmath>
#include <cstdint>

#include "clothsim/collision.hpp"
#include "clothsim/cpu_solver.hpp"
#include "clothsim/gpu/device.hpp"
#include "clothsim/gpu/layout.hpp"

namespace clothsim::gpu::kernels {

struct Bindings {
    const ParamsUniform* params = nullptr;
    float* positions = nullptr;
    float* previous_positions = nullptr;
    float* velocities = nullptr;
    std::int32_t* forces = nullptr;
    const SpringRecord* springs = nullptr;
    const NodeInfoRecord* node_info = nullptr;
    const TriangleRecord* cloth_triangles = nullptr;
    const float* obstacle_vertices = nullptr;
    const ObstacleTriangleRecord* obstacle_triangles = nullptr;
    std::int32_t* response_sum = nullptr;
    std::int32_t* response_count = nullptr;
    float* normals = nullptr;
    const std::uint32_t* adjacency_offsets = nullptr;
    const std::uint32_t* adjacency_triangles = nullptr;
    StatusRecord* status = nullptr;
};

inline Vec3f load3(const float* a, std::uint32_t i) { return {a[3 * i], a[3 * i + 1], a[3 * i + 2]}; }
inline void store3(float* a, std::uint32_t i, const Vec3f& v) {
    a[3 * i] = v.x;
    a[3 * i + 1] = v.y;
    a[3 * i + 2] = v.z;
}

// i32(round(v * scale)) with saturation; matches encodeFixed() in WGSL.
inline std::int32_t encode_fixed(float v, float scale, StatusRecord* status) {
    const float scaled = std::nearbyint(v * scale);
    if (!(std::abs(scaled) < 2147483520.0f)) {
        atomic_or(status->flags, kStatusSaturated);
        atomic_add(status->overflow_count, 1);
        if (std::isnan(scaled)) return 0;
        return scaled > 0 ? 2147483520 : -2147483520;
    }
    return static_cast<std::int32_t>(scaled);
}

inline void atomic_add3(std::int32_t* buf, std::uint32_t i, const Vec3f& v, float scale, StatusRecord* status) {
    atomic_add(buf[3 * i], encode_fixed(v.x, scale, status));
    atomic_add(buf[3 * i + 1], encode_fixed(v.y, scale, status));
    atomic_add(buf[3 * i + 2], encode_fixed(v.z, scale, status));
}

inline void zero_forces(const Bindings& b, std::uint64_t id) {
    const ParamsUniform& p = *b.params;
    if (id >= p.num_nodes) return;
    for (int k = 0; k < 3; ++k) atomic_store(b.forces[3 * id + k], 0);
}

// One invocation per spring; both endpoints updated with atomic adds.
inline void spring_force(const Bindings& b, std::uint64_t id) {
    const ParamsUniform& p = *b.params;
    if (id >= p.num_springs) return;
    const SpringRecord s = b.springs[id];
    const Vec3f force = clothsim::spring_force<float>(
        load3(b.positions, s.a), load3(b.positions, s.b), load3(b.velocities, s.a),
        load3(b.velocities, s.b), s.rest_length, p.stiffness[s.kind], p.damping);
    const float scale = p.fixed_scale;
    for (int k = 0; k < 3; ++k) {
        const std::int32_t e = encode_fixed(force[k], scale, b.status);
        atomic_add(b.forces[3 * s.a + k], e);
        atomic_add(b.forces[3 * s.b + k], -e);
    }
}

inline void integrate(const Bindings& b, std::uint64_t id) {
    const ParamsUniform& p = *b.params;
    if (id >= p.num_nodes) return;
    const auto i = static_cast<std::uint32_t>(id);
    const NodeInfoRecord info = b.node_info[i];
    const Vec3f x = load3(b.positions, i);
    store3(b.previous_positions, i, x);
    if (info.flags & kNodePinned) return;

    Vec3f f{static_cast<float>(atomic_load(b.forces[3 * i])) * p.inv_fixed_scale,
            static_cast<float>(atomic_load(b.forces[3 * i + 1])) * p.inv_fixed_scale,
            static_cast<float>(atomic_load(b.forces[3 * i + 2])) * p.inv_fixed_scale};
    f += Vec3f{p.gravity[0], p.gravity[1], p.gravity[2]} * info.mass;
    if (info.flags & kNodePulled) f += Vec3f{p.pull[0], p.pull[1], p.pull[2]} * info.mass;
    if (!is_finite(f)) {
        atomic_or(b.status->flags, kStatusDiverged);
        atomic_min(b.status->first_bad_node, static_cast<std::int32_t>(i));
        return;
    }
    const Vec3f accel = f / info.mass;
    Vec3f v = load3(b.velocities, i);
    Vec3f next = x;
    if (p.flags & kFlagExplicitEuler) {
        next += v * p.dt;
        v += accel * p.dt;
    } else {
        v += accel * p.dt;
        next += v * p.dt;
    }
    if (!is_finite(v) || !is_finite(next)) {
        atomic_or(b.status->flags, kStatusDiverged);
        atomic_min(b.status->first_bad_node, static_cast<std::int32_t>(i));
        return;
    }
    store3(b.velocities, i, v);
    store3(b.positions, i, next);
}

// One invocation per (cloth triangle, obstacle triangle) pair.
inline void collision_detect(const Bindings& b, std::uint64_t id) {
    const ParamsUniform& p = *b.params;
    const std::uint64_t pairs = std::uint64_t{p.num_cloth_triangles} * p.num_obstacle_triangles;
    if (id >= pairs) return;
    const auto cloth_index = static_cast<std::uint32_t>(id / p.num_obstacle_triangles);
    const auto obstacle_index = static_cast<std::uint32_t>(id % p.num_obstacle_triangles);

    const TriangleRecord ct = b.cloth_triangles[cloth_index];
    const ObstacleTriangleRecord& ot = b.obstacle_triangles[obstacle_index];
    const Triangle nodes{ct.v[0], ct.v[1], ct.v[2]};
    const std::array<Vec3f, 3> cloth{load3(b.positions, ct.v[0]), load3(b.positions, ct.v[1]),
                                     load3(b.positions, ct.v[2])};
    const std::array<Vec3f, 3> obstacle{load3(b.obstacle_vertices, ot.v[0]), load3(b.obstacle_vertices, ot.v[1]),
                                        load3(b.obstacle_vertices, ot.v[2])};
    const Vec3f normal{ot.normal[0], ot.normal[1], ot.normal[2]};

    const auto found = triangle_triangle_contacts<float>(nodes, cloth, obstacle, normal, p.epsilon, p.margin,
                                                         static_cast<std::uint8_t>(ct.edge_mask),
                                                         static_cast<std::uint8_t>(ot.edge_mask));
    if (found.hits == 0) return;
    atomic_add(b.status->hits, static_cast<std::int32_t>(found.hits));
    for (const Contact<float>& c : found.view()) {
        atomic_add3(b.response_sum, c.node, c.direction, p.fixed_scale, b.status);
        atomic_add(b.response_count[c.node], 1);
    }
}

// Velocity inversion, displacement by the (averaged) response, then both
// accumulators reset with atomic stores.
inline void collision_respond(const Bindings& b, std::uint64_t id) {
    const ParamsUniform& p = *b.params;
    if (id >= p.num_nodes) return;
    const auto i = static_cast<std::uint32_t>(id);
    const Vec3f base = (p.flags & kFlagFromPrevious) ? load3(b.previous_positions, i) : load3(b.positions, i);
    Vec3f vel = load3(b.velocities, i);
    const Vec3f sum{static_cast<float>(atomic_load(b.response_sum[3 * i])) * p.inv_fixed_scale,
                    static_cast<float>(atomic_load(b.response_sum[3 * i + 1])) * p.inv_fixed_scale,
                    static_cast<float>(atomic_load(b.response_sum[3 * i + 2])) * p.inv_fixed_scale};
    const std::int32_t count = atomic_load(b.response_count[i]);
    if (count > 0 && !(b.node_info[i].flags & kNodePinned)) {
        vel *= -0.5f;
        const Vec3f shift = (p.flags & kFlagRawSum) ? sum : sum / static_cast<float>(count);
        store3(b.velocities, i, vel);
        store3(b.positions, i, base + shift);
    }
    atomic_store(b.response_count[i], 0);
    for (int k = 0; k < 3; ++k) atomic_store(b.response_sum[3 * i + k], 0);
}

inline void update_normals(const Bindings& b, std::uint64_t id) {
    const ParamsUniform& p = *b.params;
    if (id >= p.num_nodes) return;
    const auto i = static_cast<std::uint32_t>(id);
    Vec3f sum{};
    for (std::uint32_t k = b.adjacency_offsets[i]; k < b.adjacency_offsets[i + 1]; ++k) {
        const TriangleRecord t = b.cloth_triangles[b.adjacency_triangles[k]];
        const Vec3f a = load3(b.positions, t.v[0]);
        sum += normalize(cross(load3(b.positions, t.v[1]) - a, load3(b.positions, t.v[2]) - a));
    }
    const float len = length(sum);
    store3(b.normals, i, len > 1e-12f ? sum / len : Vec3f{0.0f, 1.0f, 0.0f});
}

}  // namespace clothsim::gpu::kernels
