#include "clothsim/gpu/engine.hpp"

#include <chrono>
#include <limits>

#include <fmt/format.h>

#include "clothsim/collision.hpp"
#include "clothsim/errors.hpp"
#include "kernels.hpp"

namespace clothsim::gpu {

std::string_view to_string(Pass p) {
    switch (p) {
        case Pass::zero_forces: return "zero_forces";
        case Pass::spring_force: return "spring_force";
        case Pass::integrate: return "integrate";
        case Pass::collision_detect: return "collision_detect";
        case Pass::collision_respond: return "collision_respond";
        case Pass::update_normals: return "update_normals";
    }
    return "?";
}

GpuEngine::GpuEngine(GpuEngine&&) noexcept = default;
GpuEngine& GpuEngine::operator=(GpuEngine&&) noexcept = default;
GpuEngine::~GpuEngine() = default;

namespace {

std::vector<float> flatten(std::span<const Vec3d> v) {
    std::vector<float> out;
    out.reserve(v.size() * 3);
    for (const Vec3d& p : v) {
        out.push_back(static_cast<float>(p.x));
        out.push_back(static_cast<float>(p.y));
        out.push_back(static_cast<float>(p.z));
    }
    return out;
}

}  // namespace

GpuEngine GpuEngine::build(Device& device, const ClothMesh& mesh, const TriangleMesh* obstacle,
                           const SimParams& params, const ExternalForce& external) {
    params.validate();
    const bool has_obstacle = obstacle && !obstacle->empty();
    const LayoutCounts counts{mesh.nodes.size(), mesh.springs.size(), mesh.triangles.size(),
                              has_obstacle ? obstacle->vertices.size() : 0,
                              has_obstacle ? obstacle->triangles.size() : 0};
    if (counts.nodes > static_cast<std::uint64_t>(std::numeric_limits<std::int32_t>::max())) {
        throw CapacityError("node count exceeds 32-bit indexing", 0);
    }
    const std::uint64_t pairs = counts.cloth_triangles * counts.obstacle_triangles;
    if (pairs > params.max_collision_pairs) throw BudgetExceededError(pairs, params.max_collision_pairs);
    if (params.workgroup_size > device.limits().max_compute_workgroup_size_x ||
        params.workgroup_size > device.limits().max_compute_invocations_per_workgroup) {
        throw ConfigError(fmt::format("workgroup size {} exceeds device limit {}", params.workgroup_size,
                                      device.limits().max_compute_workgroup_size_x));
    }
    for (std::uint32_t i : external.nodes) {
        if (i >= mesh.nodes.size()) throw ConfigError("external force node index out of range");
    }

    GpuEngine e;
    e.device_ = &device;
    e.layout_ = compute_layout(counts);
    e.fixed_ = FixedPoint(params.fixed_point_scale);
    e.substeps_ = params.substeps;

    if (const auto over = e.layout_.first_over(device.limits())) {
        const BufferSpec& spec = e.layout_[*over];
        const ProbeResult probe = max_nodes_probe(device.limits(), counts.obstacle_vertices, counts.obstacle_triangles);
        throw CapacityError(fmt::format("buffer '{}' needs {} bytes ({} x {} B), binding ceiling is {} bytes",
                                        wgsl_name(*over), spec.size(), spec.count, spec.stride,
                                        device.limits().max_storage_buffer_binding_size),
                            probe.max_nodes);
    }

    for (const BufferSpec& spec : e.layout_.buffers) {
        const bool storage = spec.role != BufferRole::params_uniform;
        e.buffers_[static_cast<std::size_t>(spec.role)] =
            device.create_buffer(std::string(wgsl_name(spec.role)), spec.size(), storage);
    }

    // Uniforms.
    ParamsUniform u{};
    u.num_nodes = static_cast<std::uint32_t>(counts.nodes);
    u.num_springs = static_cast<std::uint32_t>(counts.springs);
    u.num_cloth_triangles = static_cast<std::uint32_t>(counts.cloth_triangles);
    u.num_obstacle_triangles = static_cast<std::uint32_t>(counts.obstacle_triangles);
    u.dt = static_cast<float>(params.substep_dt());
    u.damping = static_cast<float>(params.damping);
    u.epsilon = static_cast<float>(params.epsilon_mt);
    u.margin = static_cast<float>(params.response_margin);
    for (int k = 0; k < 3; ++k) {
        u.stiffness[k] = static_cast<float>(params.stiffness[k]);
        u.gravity[k] = static_cast<float>(params.gravity[k]);
        u.pull[k] = static_cast<float>(external.acceleration[k]);
    }
    u.fixed_scale = static_cast<float>(params.fixed_point_scale);
    u.inv_fixed_scale = static_cast<float>(1.0 / params.fixed_point_scale);
    u.flags = (params.averaging == ResponseAveraging::raw_sum ? kFlagRawSum : 0u) |
              (params.response_base == ResponseBase::previous ? kFlagFromPrevious : 0u) |
              (params.integrator == Integrator::explicit_euler ? kFlagExplicitEuler : 0u);
    u.pair_row = params.workgroup_size * device.limits().max_compute_workgroups_per_dimension;
    e.buffer(BufferRole::params_uniform).write(std::span<const ParamsUniform>(&u, 1));

    // Node state.
    const std::vector<Vec3d> pos = mesh.positions();
    std::vector<Vec3d> vel;
    std::vector<NodeInfoRecord> info;
    vel.reserve(mesh.nodes.size());
    info.reserve(mesh.nodes.size());
    for (const Node& n : mesh.nodes) {
        vel.push_back(n.pinned ? Vec3d{} : n.velocity);
        info.push_back({static_cast<float>(n.mass), n.pinned ? kNodePinned : 0u});
    }
    for (std::uint32_t i : external.nodes) {
        if (!external.empty()) info[i].flags |= kNodePulled;
    }
    const std::vector<float> fpos = flatten(pos);
    e.buffer(BufferRole::positions).write(std::span<const float>(fpos));
    e.buffer(BufferRole::previous_positions).write(std::span<const float>(fpos));
    e.buffer(BufferRole::velocities).write(std::span<const float>(flatten(vel)));
    e.buffer(BufferRole::node_info).write(std::span<const NodeInfoRecord>(info));

    std::vector<SpringRecord> springs;
    springs.reserve(mesh.springs.size());
    for (const Spring& s : mesh.springs) {
        springs.push_back({s.a, s.b, static_cast<float>(s.rest_length), static_cast<std::uint32_t>(s.kind)});
    }
    e.buffer(BufferRole::spring_table).write(std::span<const SpringRecord>(springs));

    const std::vector<std::uint8_t> cloth_masks = edge_owner_masks(mesh.triangles);
    std::vector<TriangleRecord> tris;
    tris.reserve(mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Triangle& tri = mesh.triangles[t];
        tris.push_back({{tri[0], tri[1], tri[2]}, cloth_masks[t]});
    }
    e.buffer(BufferRole::triangle_table).write(std::span<const TriangleRecord>(tris));

    // Vertex -> incident triangle lists, ordered by triangle index.
    std::vector<std::uint32_t> offsets(counts.nodes + 1, 0);
    for (const Triangle& tri : mesh.triangles) {
        for (std::uint32_t v : tri) ++offsets[v + 1];
    }
    for (std::size_t i = 1; i < offsets.size(); ++i) offsets[i] += offsets[i - 1];
    std::vector<std::uint32_t> adjacency(offsets.back());
    std::vector<std::uint32_t> fill(offsets.begin(), offsets.end() - 1);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        for (std::uint32_t v : mesh.triangles[t]) adjacency[fill[v]++] = static_cast<std::uint32_t>(t);
    }
    e.buffer(BufferRole::adjacency_offsets).write(std::span<const std::uint32_t>(offsets));
    e.buffer(BufferRole::adjacency_triangles).write(std::span<const std::uint32_t>(adjacency));

    if (has_obstacle) {
        e.buffer(BufferRole::obstacle_vertices).write(std::span<const float>(flatten(obstacle->vertices)));
        const std::vector<std::uint8_t> masks = edge_owner_masks(obstacle->triangles);
        std::vector<ObstacleTriangleRecord> recs;
        recs.reserve(obstacle->triangles.size());
        for (std::size_t t = 0; t < obstacle->triangles.size(); ++t) {
            const Triangle& tri = obstacle->triangles[t];
            const Vec3d& n = obstacle->face_normals[t];
            recs.push_back({{tri[0], tri[1], tri[2]},
                            masks[t],
                            {static_cast<float>(n.x), static_cast<float>(n.y), static_cast<float>(n.z)},
                            0.0f});
        }
        e.buffer(BufferRole::obstacle_triangles).write(std::span<const ObstacleTriangleRecord>(recs));
    }

    StatusRecord status{0, 0, std::numeric_limits<std::int32_t>::max(), 0};
    e.buffer(BufferRole::status).write(std::span<const StatusRecord>(&status, 1));

    const std::vector<Vec3d> normals = compute_vertex_normals(pos, mesh.triangles);
    e.buffer(BufferRole::vertex_normals).write(std::span<const float>(flatten(normals)));

    e.create_pipelines();
    return e;
}

void GpuEngine::create_pipelines() {
    kernels::Bindings b;
    b.params = buffer(BufferRole::params_uniform).view<ParamsUniform>().data();
    b.positions = buffer(BufferRole::positions).view<float>().data();
    b.previous_positions = buffer(BufferRole::previous_positions).view<float>().data();
    b.velocities = buffer(BufferRole::velocities).view<float>().data();
    b.forces = buffer(BufferRole::forces_fixed_point).view<std::int32_t>().data();
    b.springs = buffer(BufferRole::spring_table).view<SpringRecord>().data();
    b.node_info = buffer(BufferRole::node_info).view<NodeInfoRecord>().data();
    b.cloth_triangles = buffer(BufferRole::triangle_table).view<TriangleRecord>().data();
    b.obstacle_vertices = buffer(BufferRole::obstacle_vertices).view<float>().data();
    b.obstacle_triangles = buffer(BufferRole::obstacle_triangles).view<ObstacleTriangleRecord>().data();
    b.response_sum = buffer(BufferRole::response_accumulator).view<std::int32_t>().data();
    b.response_count = buffer(BufferRole::response_count).view<std::int32_t>().data();
    b.normals = buffer(BufferRole::vertex_normals).view<float>().data();
    b.adjacency_offsets = buffer(BufferRole::adjacency_offsets).view<std::uint32_t>().data();
    b.adjacency_triangles = buffer(BufferRole::adjacency_triangles).view<std::uint32_t>().data();
    b.status = buffer(BufferRole::status).view<StatusRecord>().data();

    const std::uint32_t wg = buffer(BufferRole::params_uniform).view<ParamsUniform>()[0].pair_row /
                             device_->limits().max_compute_workgroups_per_dimension;
    auto make = [&](Pass pass, auto fn) {
        pipelines_[static_cast<std::size_t>(pass)] = std::make_unique<ComputePipeline>(
            make_pipeline(std::string(to_string(pass)), wg, [b, fn](std::uint64_t id) { fn(b, id); }));
    };
    make(Pass::zero_forces, kernels::zero_forces);
    make(Pass::spring_force, kernels::spring_force);
    make(Pass::integrate, kernels::integrate);
    make(Pass::collision_detect, kernels::collision_detect);
    make(Pass::collision_respond, kernels::collision_respond);
    make(Pass::update_normals, kernels::update_normals);
}

DispatchCommand GpuEngine::command(Pass pass) const {
    const ComputePipeline* pipe = pipelines_[static_cast<std::size_t>(pass)].get();
    const std::uint32_t wg = pipe->workgroup_size();
    const LayoutCounts& c = layout_.counts;
    std::uint64_t invocations = 0;
    switch (pass) {
        case Pass::spring_force: invocations = c.springs; break;
        case Pass::collision_detect: invocations = c.cloth_triangles * c.obstacle_triangles; break;
        case Pass::collision_respond: invocations = collision_passes_noop() ? 0 : c.nodes; break;
        default: invocations = c.nodes; break;
    }
    return {pipe, invocations == 0 ? DispatchSize{0, 1} : dispatch_size(invocations, wg, device_->limits())};
}

void GpuEngine::run_pass(Pass pass) {
    const DispatchCommand cmd = command(pass);
    device_->submit(std::span<const DispatchCommand>(&cmd, 1));
}

FrameStats GpuEngine::step() {
    std::vector<DispatchCommand> commands;
    std::vector<Pass> order;
    commands.reserve(substeps_ * 5 + 1);
    for (std::uint32_t s = 0; s < substeps_; ++s) {
        for (Pass p : {Pass::zero_forces, Pass::spring_force, Pass::integrate, Pass::collision_detect,
                       Pass::collision_respond}) {
            commands.push_back(command(p));
            order.push_back(p);
        }
    }
    commands.push_back(command(Pass::update_normals));
    order.push_back(Pass::update_normals);

    // Host-side writeBuffer; not a readback.
    atomic_store(buffer(BufferRole::status).view<StatusRecord>()[0].hits, 0);

    PassObserver observer;
    if (observer_) {
        observer = [this, &order](std::size_t index, const ComputePipeline&) { observer_(order[index], *this); };
    }
    const auto start = std::chrono::steady_clock::now();
    device_->submit(commands, observer);
    const auto end = std::chrono::steady_clock::now();
    ++step_count_;

    const StatusRecord st = status();
    if (st.flags & kStatusDiverged) throw NumericalDivergenceError(static_cast<std::size_t>(st.first_bad_node));
    if (readback_ == ReadbackPolicy::every_step) last_readback_ = positions();

    FrameStats stats;
    stats.frame = step_count_;
    stats.set_wall_ms(std::chrono::duration<double, std::milli>(end - start).count());
    stats.nodes = layout_.counts.nodes;
    stats.springs = layout_.counts.springs;
    stats.obstacle_triangles = layout_.counts.obstacle_triangles;
    stats.collision_hits = static_cast<std::uint64_t>(st.hits);
    stats.backend = Backend::gpu;
    return stats;
}

std::vector<Vec3d> GpuEngine::read_vec3(BufferRole role) const {
    const auto f = buffer(role).view<float>();
    const std::size_t n = layout_[role].count;
    std::vector<Vec3d> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = {f[3 * i], f[3 * i + 1], f[3 * i + 2]};
    return out;
}

std::vector<FixedPointVec3> GpuEngine::read_fixed(BufferRole role) const {
    const auto w = buffer(role).view<std::int32_t>();
    const std::size_t n = layout_[role].count;
    std::vector<FixedPointVec3> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = {w[3 * i], w[3 * i + 1], w[3 * i + 2]};
    return out;
}

std::vector<std::int32_t> GpuEngine::response_counts() const {
    const auto w = buffer(BufferRole::response_count).view<std::int32_t>();
    return {w.begin(), w.begin() + static_cast<std::ptrdiff_t>(layout_.counts.nodes)};
}

StatusRecord GpuEngine::status() const { return buffer(BufferRole::status).view<StatusRecord>()[0]; }

void GpuEngine::write_vec3(BufferRole role, std::uint32_t node, const Vec3d& v) {
    auto f = buffer(role).view<float>();
    f[3 * node] = static_cast<float>(v.x);
    f[3 * node + 1] = static_cast<float>(v.y);
    f[3 * node + 2] = static_cast<float>(v.z);
}

void GpuEngine::write_fixed(BufferRole role, std::uint32_t node, const FixedPointVec3& v) {
    auto w = buffer(role).view<std::int32_t>();
    w[3 * node] = v.x;
    w[3 * node + 1] = v.y;
    w[3 * node + 2] = v.z;
}

void GpuEngine::write_count(std::uint32_t node, std::int32_t count) {
    buffer(BufferRole::response_count).view<std::int32_t>()[node] = count;
}

}  // namespace clothsim::gpu
