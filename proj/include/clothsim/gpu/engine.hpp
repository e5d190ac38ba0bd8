#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string_view>
#include <vector>

#include "clothsim/fixed_point.hpp"
#include "clothsim/frame_stats.hpp"
#include "clothsim/gpu/device.hpp"
#include "clothsim/gpu/layout.hpp"
#include "clothsim/mesh.hpp"
#include "clothsim/params.hpp"

namespace clothsim::gpu {

enum class Pass : std::uint8_t {
    zero_forces,
    spring_force,
    integrate,
    collision_detect,
    collision_respond,
    update_normals,
};
inline constexpr std::size_t kPassCount = 6;
std::string_view to_string(Pass p);

enum class ReadbackPolicy : std::uint8_t {
    never,       // benchmark mode: frame timed on submission completion
    every_step,  // verification mode: positions copied back after each frame
};

// Invoked after each pass while a frame executes.
using EnginePassObserver = std::function<void(Pass, class GpuEngine&)>;

class GpuEngine {
public:
    GpuEngine(const GpuEngine&) = delete;
    GpuEngine& operator=(const GpuEngine&) = delete;
    GpuEngine(GpuEngine&&) noexcept;
    GpuEngine& operator=(GpuEngine&&) noexcept;
    ~GpuEngine();

    // Allocates and uploads every buffer and builds the six pipelines. Throws
    // CapacityError when a binding would exceed the device ceiling, and
    // BudgetExceededError when the per-frame collision pair count is over
    // params.max_collision_pairs. The device must outlive the engine.
    static GpuEngine build(Device& device, const ClothMesh& mesh, const TriangleMesh* obstacle,
                           const SimParams& params, const ExternalForce& external = {});

    FrameStats step();

    // Dispatches a single pass on its own. For tests and debugging.
    void run_pass(Pass pass);

    void set_readback_policy(ReadbackPolicy p) { readback_ = p; }
    ReadbackPolicy readback_policy() const { return readback_; }
    void set_pass_observer(EnginePassObserver observer) { observer_ = std::move(observer); }

    const GpuBufferLayout& layout() const { return layout_; }
    const FixedPoint& fixed_point() const { return fixed_; }
    bool collision_passes_noop() const { return layout_.counts.obstacle_triangles == 0; }
    std::uint64_t step_count() const { return step_count_; }
    Device& device() { return *device_; }

    Buffer& buffer(BufferRole role) { return *buffers_[static_cast<std::size_t>(role)]; }
    const Buffer& buffer(BufferRole role) const { return *buffers_[static_cast<std::size_t>(role)]; }

    // Readback helpers; each copies device memory to the host.
    std::vector<Vec3d> read_vec3(BufferRole role) const;
    std::vector<Vec3d> positions() const { return read_vec3(BufferRole::positions); }
    std::vector<Vec3d> velocities() const { return read_vec3(BufferRole::velocities); }
    std::vector<FixedPointVec3> read_fixed(BufferRole role) const;
    std::vector<std::int32_t> response_counts() const;
    StatusRecord status() const;

    // Positions captured by the last frame under ReadbackPolicy::every_step.
    const std::vector<Vec3d>& last_readback() const { return last_readback_; }

    void write_vec3(BufferRole role, std::uint32_t node, const Vec3d& v);
    void write_fixed(BufferRole role, std::uint32_t node, const FixedPointVec3& v);
    void write_count(std::uint32_t node, std::int32_t count);

private:
    GpuEngine() = default;
    void create_pipelines();
    DispatchCommand command(Pass pass) const;

    Device* device_ = nullptr;
    GpuBufferLayout layout_;
    FixedPoint fixed_;
    std::uint32_t substeps_ = 1;
    std::array<std::unique_ptr<Buffer>, kBufferRoleCount> buffers_{};
    std::array<std::unique_ptr<ComputePipeline>, kPassCount> pipelines_{};
    ReadbackPolicy readback_ = ReadbackPolicy::never;
    EnginePassObserver observer_;
    std::vector<Vec3d> last_readback_;
    std::uint64_t step_count_ = 0;
};

// Largest square cloth (node count) whose layout fits the device limits.
inline ProbeResult max_nodes_probe(const Device& device, std::uint64_t obstacle_vertices = 0,
                                   std::uint64_t obstacle_triangles = 0) {
    return max_nodes_probe(device.limits(), obstacle_vertices, obstacle_triangles);
}

}  // namespace clothsim::gpu
