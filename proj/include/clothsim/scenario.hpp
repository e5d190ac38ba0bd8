#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "clothsim/asset_io.hpp"
#include "clothsim/frame_stats.hpp"
#include "clothsim/gpu/device.hpp"
#include "clothsim/gpu/layout.hpp"
#include "clothsim/mesh.hpp"
#include "clothsim/params.hpp"

namespace clothsim {

enum class SceneKind : std::uint8_t { hanging, drop, pull };
enum class BackendChoice : std::uint8_t { cpu, gpu, both };

std::optional<SceneKind> parse_scene(std::string_view s);
std::optional<BackendChoice> parse_backend_choice(std::string_view s);
std::string_view to_string(SceneKind s);
std::string_view to_string(BackendChoice b);

struct ScenarioConfig {
    SceneKind scene = SceneKind::hanging;
    std::uint32_t nx = 64;
    std::uint32_t ny = 64;
    std::optional<std::string> obstacle;  // OBJ path or "icosphere:K"
    BackendChoice backend = BackendChoice::cpu;
    std::uint64_t frames = 300;
    SimParams params;
    std::optional<std::uint64_t> snapshot_every;
    std::filesystem::path output = "stats.csv";
    bool verify = false;

    double spacing = 1.0;    // rest distance between grid neighbours
    double node_mass = 1.0;
    double obstacle_radius_fraction = 0.3;  // obstacle radius / cloth width
    Vec3d pull_acceleration{6.0, 0.0, 0.0};

    std::uint64_t parity_frames = 120;  // frame at which `both` compares backends
    double parity_tolerance = 1e-3;
    std::uint64_t warmup_frames = 10;   // excluded from mean fps

    // Throws ConfigError: drop/pull need an obstacle, hanging forbids one.
    void validate() const;
};

struct Scene {
    ClothMesh cloth;
    std::optional<TriangleMesh> obstacle;
    Vec3d obstacle_center{};
    double obstacle_radius = 0.0;  // bounding radius after normalisation
    ExternalForce external;
    CameraConfig camera;
};

// Resolves the obstacle spec: "icosphere:K" or an OBJ path. Loaded meshes
// are centered at the origin and scaled to the given bounding radius.
TriangleMesh resolve_obstacle(const std::string& spec, double radius);

Scene build_scene(const ScenarioConfig& config);

struct ParityReport {
    std::uint64_t frame = 0;
    double max_deviation = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

struct RunResult {
    std::vector<FrameStats> stats;
    std::optional<ParityReport> parity;
    std::vector<std::string> failures;  // verification failures
    std::vector<std::filesystem::path> snapshots;

    bool ok() const { return failures.empty() && (!parity || parity->passed); }
};

// Steps the chosen backend(s) and writes the stats CSV to config.output.
// `device` is used for the GPU backend; when null one is requested from the
// environment. Throws CapacityError (with the max-fit node count),
// BudgetExceededError, AdapterUnavailableError.
RunResult run_scenario(const ScenarioConfig& config, gpu::Device* device = nullptr);

// Mean of 1000/wall_ms over frames after the warm-up window (all frames when
// there are not more than `warmup` of them).
double mean_fps(std::span<const FrameStats> stats, std::uint64_t warmup);
double mean_wall_ms(std::span<const FrameStats> stats, std::uint64_t warmup);

inline constexpr double kRealtimeFps = 30.0;

struct BackendSummary {
    bool ran = false;
    double mean_ms = 0.0;
    double mean_fps = 0.0;
    bool below_realtime = false;
    bool first_below_realtime = false;
    std::string status;  // ok | capacity | budget | diverged | skipped | error
    std::string reason;
};

struct SweepRow {
    std::uint32_t nx = 0;
    std::uint32_t ny = 0;
    std::uint64_t nodes = 0;
    std::uint64_t springs = 0;
    std::uint64_t obstacle_triangles = 0;
    std::uint64_t frames = 0;
    BackendSummary cpu;
    BackendSummary gpu;
    std::optional<double> gpu_cpu_ratio;  // gpu mean ms / cpu mean ms
};

// "4K" -> 64x64, "65.5K" -> 256x256, "10000" -> 100x100, "48x32" -> 48x32.
// Counts map to the smallest square grid holding at least that many nodes.
std::pair<std::uint32_t, std::uint32_t> parse_resolution(std::string_view text);

// Runs every resolution in order; failures become rows with a reason. Once a
// backend hits a capacity error, its larger resolutions are marked skipped.
std::vector<SweepRow> run_resolution_sweep(const ScenarioConfig& base,
                                           const std::vector<std::pair<std::uint32_t, std::uint32_t>>& resolutions,
                                           gpu::Device* device = nullptr);

inline constexpr std::string_view kSweepCsvHeader =
    "nodes,nx,ny,springs,obstacle_triangles,frames,"
    "cpu_status,cpu_mean_ms,cpu_mean_fps,cpu_below_30fps,cpu_first_below_30fps,"
    "gpu_status,gpu_mean_ms,gpu_mean_fps,gpu_below_30fps,gpu_first_below_30fps,"
    "gpu_cpu_time_ratio,reason";

std::string format_sweep_csv(std::span<const SweepRow> rows);
void write_sweep_csv(std::span<const SweepRow> rows, const std::filesystem::path& path);

struct LimitsReport {
    gpu::AdapterInfo adapter;
    gpu::ProbeResult probe;
    std::string formula;
    std::string text;  // printable summary
};

LimitsReport probe_limits(const gpu::Device& device);

}  // namespace clothsim
