#include "clothsim/cpu_solver.hpp"

#include <algorithm>
#include <chrono>

#include "clothsim/errors.hpp"

namespace clothsim {

SolverState SolverState::from(const ClothMesh& mesh) {
    SolverState s;
    const std::size_t n = mesh.nodes.size();
    s.positions.reserve(n);
    s.velocities.reserve(n);
    for (const Node& node : mesh.nodes) {
        s.positions.push_back(node.position);
        s.velocities.push_back(node.pinned ? Vec3d{} : node.velocity);
    }
    s.previous_positions = s.positions;
    s.forces.assign(n, Vec3d{});
    s.normals = compute_vertex_normals(s.positions, mesh.triangles);
    return s;
}

void accumulate_forces(SolverState& state, const ClothMesh& mesh, const SimParams& params,
                       const ExternalForce& external) {
    auto& f = state.forces;
    for (const Spring& s : mesh.springs) {
        const Vec3d force = spring_force(state.positions[s.a], state.positions[s.b],
                                         state.velocities[s.a], state.velocities[s.b], s.rest_length,
                                         params.stiffness_of(s.kind), params.damping,
                                         &state.degenerate_springs);
        f[s.a] += force;
        f[s.b] -= force;
    }
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += params.gravity * mesh.nodes[i].mass;
    for (std::uint32_t i : external.nodes) f[i] += external.acceleration * mesh.nodes[i].mass;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (mesh.nodes[i].pinned) f[i] = Vec3d{};
    }
}

void integrate(SolverState& state, const ClothMesh& mesh, const SimParams& params, double dt) {
    for (std::size_t i = 0; i < state.size(); ++i) {
        if (!is_finite(state.forces[i])) throw NumericalDivergenceError(i);
    }
    for (std::size_t i = 0; i < state.size(); ++i) {
        state.previous_positions[i] = state.positions[i];
        if (mesh.nodes[i].pinned) continue;
        const Vec3d accel = state.forces[i] / mesh.nodes[i].mass;
        if (params.integrator == Integrator::semi_implicit_euler) {
            state.velocities[i] += accel * dt;
            state.positions[i] += state.velocities[i] * dt;
        } else {
            state.positions[i] += state.velocities[i] * dt;
            state.velocities[i] += accel * dt;
        }
    }
}

CpuSolver::CpuSolver(ClothMesh mesh, SimParams params, const TriangleMesh* obstacle,
                     ExternalForce external)
    : mesh_(std::move(mesh)), params_(params), external_(std::move(external)) {
    params_.validate();
    for (std::uint32_t i : external_.nodes) {
        if (i >= mesh_.nodes.size()) throw ConfigError("external force node index out of range");
    }
    if (obstacle && !obstacle->empty()) {
        obstacle_mesh_ = std::make_shared<const TriangleMesh>(*obstacle);
        obstacle_ = CollisionObstacle::from(*obstacle_mesh_);
    }
    cloth_edge_masks_ = edge_owner_masks(mesh_.triangles);
    state_ = SolverState::from(mesh_);
    accumulator_ = ContactAccumulator(mesh_.nodes.size());
}

FrameStats CpuSolver::step() {
    const auto start = std::chrono::steady_clock::now();
    const double dt = params_.substep_dt();
    std::uint64_t hits = 0;
    for (std::uint32_t sub = 0; sub < params_.substeps; ++sub) {
        std::fill(state_.forces.begin(), state_.forces.end(), Vec3d{});
        accumulate_forces(state_, mesh_, params_, external_);
        integrate(state_, mesh_, params_, dt);
        if (obstacle_.mesh) {
            hits += detect_all({state_.positions, mesh_.triangles, cloth_edge_masks_}, obstacle_,
                               accumulator_, params_.epsilon_mt, params_.response_margin,
                               params_.max_collision_pairs);
            apply_collision_response({state_.positions, state_.previous_positions, state_.velocities,
                                      mesh_.nodes},
                                     accumulator_, params_.averaging, params_.response_base);
            accumulator_clear_ = accumulator_.is_zero();
        }
    }
    state_.normals = compute_vertex_normals(state_.positions, mesh_.triangles);
    ++state_.step_count;
    last_hits_ = hits;

    FrameStats stats;
    stats.frame = state_.step_count;
    stats.set_wall_ms(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
    stats.nodes = mesh_.nodes.size();
    stats.springs = mesh_.springs.size();
    stats.obstacle_triangles = obstacle_.triangle_count();
    stats.collision_hits = hits;
    stats.backend = Backend::cpu;
    return stats;
}

}  // namespace clothsim
