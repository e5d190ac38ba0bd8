#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "clothsim/mesh.hpp"
#include "clothsim/vec3.hpp"

namespace clothsim {

enum class Integrator : std::uint8_t { semi_implicit_euler, explicit_euler };

// How the accumulated response is applied to a node with count > 0.
enum class ResponseAveraging : std::uint8_t {
    average,  // responseSum / count
    raw_sum,  // responseSum as-is
};

// Which position the response displacement is added to.
enum class ResponseBase : std::uint8_t { current, previous };

struct SimParams {
    double dt = 0.016;
    std::uint32_t substeps = 1;
    Vec3d gravity{0.0, -9.81, 0.0};
    // Indexed by SpringKind.
    std::array<double, 3> stiffness{600.0, 600.0, 600.0};
    double damping = 4.0;
    double epsilon_mt = 1e-6;
    double response_margin = 1e-3;
    double fixed_point_scale = 65536.0;
    std::uint32_t workgroup_size = 256;
    std::uint64_t max_collision_pairs = std::uint64_t{1} << 28;
    Integrator integrator = Integrator::semi_implicit_euler;
    ResponseAveraging averaging = ResponseAveraging::average;
    ResponseBase response_base = ResponseBase::current;

    double stiffness_of(SpringKind kind) const { return stiffness[static_cast<std::size_t>(kind)]; }
    double substep_dt() const { return dt / substeps; }

    // Throws ConfigError.
    void validate() const;
};

// Constant acceleration on a subset of nodes (the pull scene).
struct ExternalForce {
    Vec3d acceleration{};
    std::vector<std::uint32_t> nodes;

    bool empty() const { return nodes.empty() || acceleration == Vec3d{}; }
};

}  // namespace clothsim
