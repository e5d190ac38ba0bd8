#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "clothsim/collision.hpp"
#include "clothsim/frame_stats.hpp"
#include "clothsim/mesh.hpp"
#include "clothsim/params.hpp"
#include "clothsim/vec3.hpp"

namespace clothsim {

// Hooke spring plus velocity damping along the spring axis. The result is
// the force on node A; node B receives its negation. Coincident endpoints
// produce a zero force and bump *degenerate when given.
template <typename T>
Vec3<T> spring_force(const Vec3<T>& pos_a, const Vec3<T>& pos_b, const Vec3<T>& vel_a,
                     const Vec3<T>& vel_b, T rest_length, T stiffness, T damping,
                     std::uint64_t* degenerate = nullptr) {
    const Vec3<T> delta = pos_b - pos_a;
    const T dist = length(delta);
    if (!(dist > T(1e-12))) {
        if (degenerate) ++*degenerate;
        return {};
    }
    const Vec3<T> dir = delta / dist;
    const T spring = stiffness * (dist - rest_length);
    const T damper = damping * (dot(vel_b, dir) - dot(vel_a, dir));
    return dir * (spring + damper);
}

struct SolverState {
    std::vector<Vec3d> positions;
    std::vector<Vec3d> previous_positions;
    std::vector<Vec3d> velocities;
    std::vector<Vec3d> forces;
    std::vector<Vec3d> normals;
    std::uint64_t step_count = 0;
    std::uint64_t degenerate_springs = 0;

    static SolverState from(const ClothMesh& mesh);
    std::size_t size() const { return positions.size(); }
};

// Adds spring, gravity and external forces into state.forces, then zeroes
// the forces of pinned nodes.
void accumulate_forces(SolverState& state, const ClothMesh& mesh, const SimParams& params,
                       const ExternalForce& external = {});

// One integration step of length dt. Throws NumericalDivergenceError on a
// non-finite force.
void integrate(SolverState& state, const ClothMesh& mesh, const SimParams& params, double dt);

// Serial reference solver: zero forces, springs, integrate, collision detect,
// collision respond, normals.
class CpuSolver {
public:
    CpuSolver(ClothMesh mesh, SimParams params, const TriangleMesh* obstacle = nullptr,
              ExternalForce external = {});

    FrameStats step();

    const SolverState& state() const { return state_; }
    SolverState& mutable_state() { return state_; }
    const ClothMesh& mesh() const { return mesh_; }
    const SimParams& params() const { return params_; }
    const ContactAccumulator& accumulator() const { return accumulator_; }
    bool has_obstacle() const { return obstacle_.mesh != nullptr; }
    std::uint64_t last_hits() const { return last_hits_; }

    // Checked after every respond pass.
    bool accumulator_clear_after_last_step() const { return accumulator_clear_; }

private:
    ClothMesh mesh_;
    SimParams params_;
    ExternalForce external_;
    std::shared_ptr<const TriangleMesh> obstacle_mesh_;
    CollisionObstacle obstacle_;
    std::vector<std::uint8_t> cloth_edge_masks_;
    SolverState state_;
    ContactAccumulator accumulator_;
    std::uint64_t last_hits_ = 0;
    bool accumulator_clear_ = true;
};

}  // namespace clothsim
