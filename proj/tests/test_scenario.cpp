#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "clothsim/asset_io.hpp"
#include "clothsim/errors.hpp"
#include "clothsim/scenario.hpp"

using namespace clothsim;

namespace {

std::filesystem::path out_dir() {
    const auto p = std::filesystem::temp_directory_path() / "clothsim_scenario";
    std::filesystem::create_directories(p);
    return p;
}

gpu::Device make_device(std::uint64_t binding = 128ull << 20) {
    gpu::AdapterOptions o;
    o.threads = 1;
    o.limits.max_storage_buffer_binding_size = binding;
    return gpu::Device::request(o);
}

ScenarioConfig hanging(std::uint32_t n, std::uint64_t frames, BackendChoice backend) {
    ScenarioConfig c;
    c.scene = SceneKind::hanging;
    c.nx = c.ny = n;
    c.frames = frames;
    c.backend = backend;
    c.output = out_dir() / "stats.csv";
    return c;
}

}  // namespace

TEST(Scenario, ParseNames) {
    EXPECT_EQ(parse_scene("drop"), SceneKind::drop);
    EXPECT_EQ(parse_scene("pull"), SceneKind::pull);
    EXPECT_FALSE(parse_scene("fold").has_value());
    EXPECT_EQ(parse_backend_choice("both"), BackendChoice::both);
    EXPECT_FALSE(parse_backend_choice("tpu").has_value());
    EXPECT_EQ(to_string(SceneKind::hanging), "hanging");
    EXPECT_EQ(to_string(BackendChoice::gpu), "gpu");
}

TEST(Scenario, ConfigValidation) {
    ScenarioConfig c = hanging(8, 1, BackendChoice::cpu);
    EXPECT_NO_THROW(c.validate());
    c.obstacle = "icosphere:1";
    EXPECT_THROW(c.validate(), ConfigError);
    c.scene = SceneKind::drop;
    EXPECT_NO_THROW(c.validate());
    c.obstacle.reset();
    EXPECT_THROW(c.validate(), ConfigError);
    c.scene = SceneKind::pull;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Scenario, ResolveObstacle) {
    const TriangleMesh s = resolve_obstacle("icosphere:2", 2.0);
    EXPECT_EQ(s.triangles.size(), 320u);
    EXPECT_THROW(resolve_obstacle("icosphere:x", 1.0), ConfigError);
    EXPECT_THROW(resolve_obstacle((out_dir() / "missing.obj").string(), 1.0), IoError);

    const auto path = out_dir() / "tet.obj";
    write_obj(TriangleMesh::make({{10, 10, 10}, {12, 10, 10}, {10, 12, 10}, {10, 10, 12}},
                                 {{0, 2, 1}, {0, 1, 3}, {0, 3, 2}, {1, 2, 3}}),
              path);
    const TriangleMesh t = resolve_obstacle(path.string(), 1.5);
    double rmax = 0.0;
    Vec3d lo{1e9, 1e9, 1e9}, hi{-1e9, -1e9, -1e9};
    for (const Vec3d& v : t.vertices) {
        rmax = std::max(rmax, length(v));
        for (int k = 0; k < 3; ++k) {
            lo[k] = std::min(lo[k], v[k]);
            hi[k] = std::max(hi[k], v[k]);
        }
    }
    EXPECT_NEAR(rmax, 1.5, 1e-12);
    EXPECT_NEAR(length((lo + hi) / 2.0), 0.0, 1e-12);
}

TEST(Scenario, BuildScenes) {
    const Scene h = build_scene(hanging(6, 1, BackendChoice::cpu));
    EXPECT_EQ(h.cloth.nodes.size(), 36u);
    EXPECT_FALSE(h.obstacle.has_value());
    std::size_t pinned = 0;
    for (const Node& n : h.cloth.nodes) pinned += n.pinned;
    EXPECT_EQ(pinned, 6u);

    ScenarioConfig c = hanging(10, 1, BackendChoice::cpu);
    c.scene = SceneKind::pull;
    c.obstacle = "icosphere:1";
    const Scene p = build_scene(c);
    ASSERT_TRUE(p.obstacle.has_value());
    EXPECT_EQ(p.external.nodes.size(), 10u);
    EXPECT_EQ(p.external.acceleration, c.pull_acceleration);
    const double r = p.obstacle_radius;
    EXPECT_NEAR(r, 0.3 * 9.0, 1e-12);
    for (const Node& n : p.cloth.nodes) EXPECT_GT(n.position.y, r);
}

TEST(Scenario, HangingTwoByTwoTenFrames) {
    ScenarioConfig c = hanging(2, 10, BackendChoice::cpu);
    c.output = out_dir() / "h2" / "stats.csv";
    const RunResult r = run_scenario(c);
    EXPECT_TRUE(r.ok());
    ASSERT_EQ(r.stats.size(), 10u);
    for (const FrameStats& s : r.stats) {
        EXPECT_EQ(s.collision_hits, 0u);
        EXPECT_EQ(s.nodes, 4u);
        EXPECT_EQ(s.springs, 6u);
    }
    EXPECT_EQ(read_stats_csv(c.output).size(), 10u);
}

TEST(Scenario, BothBackendsParity) {
    gpu::Device dev = make_device();
    ScenarioConfig c = hanging(16, 40, BackendChoice::both);
    c.parity_frames = 40;
    c.verify = true;
    const RunResult r = run_scenario(c, &dev);
    ASSERT_TRUE(r.parity.has_value());
    EXPECT_EQ(r.parity->frame, 40u);
    EXPECT_LE(r.parity->max_deviation, 1e-3);
    EXPECT_TRUE(r.ok()) << (r.failures.empty() ? "" : r.failures.front());
    EXPECT_EQ(r.stats.size(), 80u);
}

TEST(Scenario, DropKeepsClothOutside) {
    gpu::Device dev = make_device();
    ScenarioConfig c = hanging(10, 150, BackendChoice::gpu);
    c.scene = SceneKind::drop;
    c.obstacle = "icosphere:2";
    c.verify = true;
    const RunResult r = run_scenario(c, &dev);
    EXPECT_TRUE(r.ok()) << (r.failures.empty() ? "" : r.failures.front());
    std::uint64_t hits = 0;
    for (const FrameStats& s : r.stats) hits += s.collision_hits;
    EXPECT_GT(hits, 0u);
}

TEST(Scenario, SnapshotsWritten) {
    ScenarioConfig c = hanging(4, 4, BackendChoice::cpu);
    c.snapshot_every = 2;
    c.output = out_dir() / "snap" / "stats.csv";
    const RunResult r = run_scenario(c);
    ASSERT_EQ(r.snapshots.size(), 2u);
    for (const auto& p : r.snapshots) EXPECT_TRUE(std::filesystem::exists(p)) << p;
}

TEST(Scenario, MeanFpsSkipsWarmup) {
    std::vector<FrameStats> s(4);
    s[0].set_wall_ms(100.0);
    s[1].set_wall_ms(100.0);
    s[2].set_wall_ms(10.0);
    s[3].set_wall_ms(20.0);
    EXPECT_NEAR(mean_fps(s, 2), 75.0, 1e-9);
    EXPECT_NEAR(mean_wall_ms(s, 2), 15.0, 1e-9);
    EXPECT_NEAR(mean_wall_ms(s, 10), 57.5, 1e-9);
}

TEST(Resolution, Parse) {
    using P = std::pair<std::uint32_t, std::uint32_t>;
    EXPECT_EQ(parse_resolution("4K"), (P{64, 64}));
    EXPECT_EQ(parse_resolution("10K"), (P{100, 100}));
    EXPECT_EQ(parse_resolution("16.3K"), (P{128, 128}));
    EXPECT_EQ(parse_resolution("65.5K"), (P{256, 256}));
    EXPECT_EQ(parse_resolution("640K"), (P{800, 800}));
    EXPECT_EQ(parse_resolution("1M"), (P{1000, 1000}));
    EXPECT_EQ(parse_resolution("10000"), (P{100, 100}));
    EXPECT_EQ(parse_resolution("48x32"), (P{48, 32}));
    EXPECT_EQ(parse_resolution("1"), (P{2, 2}));
    EXPECT_THROW(parse_resolution("big"), ConfigError);
    EXPECT_THROW(parse_resolution("1x5"), ConfigError);
}

TEST(Sweep, SingleResolutionOneRow) {
    gpu::Device dev = make_device();
    ScenarioConfig c = hanging(2, 12, BackendChoice::both);
    const auto rows = run_resolution_sweep(c, {{8, 8}}, &dev);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].nodes, 64u);
    EXPECT_EQ(rows[0].cpu.status, "ok");
    EXPECT_EQ(rows[0].gpu.status, "ok");
    ASSERT_TRUE(rows[0].gpu_cpu_ratio.has_value());
    EXPECT_NEAR(*rows[0].gpu_cpu_ratio, rows[0].gpu.mean_ms / rows[0].cpu.mean_ms, 1e-12);

    const std::string csv = format_sweep_csv(rows);
    std::istringstream in(csv);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    EXPECT_EQ(header, kSweepCsvHeader);
    EXPECT_EQ(row.rfind("64,8,8,", 0), 0u) << row;
    EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
}

TEST(Sweep, RejectsNonAscending) {
    ScenarioConfig c = hanging(2, 2, BackendChoice::cpu);
    EXPECT_THROW(run_resolution_sweep(c, {{8, 8}, {4, 4}}), ConfigError);
    EXPECT_THROW(run_resolution_sweep(c, {{8, 8}, {8, 8}}), ConfigError);
}

TEST(Sweep, CapacityStopsLargerGpuRuns) {
    gpu::Device dev = make_device(16 << 10);
    ScenarioConfig c = hanging(2, 3, BackendChoice::gpu);
    const auto rows = run_resolution_sweep(c, {{8, 8}, {64, 64}, {80, 80}}, &dev);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].gpu.status, "ok");
    EXPECT_EQ(rows[1].gpu.status, "capacity");
    EXPECT_NE(rows[1].gpu.reason.find("largest square cloth"), std::string::npos);
    EXPECT_EQ(rows[2].gpu.status, "skipped");
    EXPECT_FALSE(rows[0].cpu.ran);
}

TEST(Sweep, FirstBelowRealtimeFlaggedOnce) {
    ScenarioConfig c = hanging(2, 2, BackendChoice::cpu);
    c.warmup_frames = 0;
    const auto rows = run_resolution_sweep(c, {{4, 4}, {8, 8}}, nullptr);
    int first = 0;
    for (const SweepRow& r : rows) {
        first += r.cpu.first_below_realtime;
        EXPECT_EQ(r.cpu.below_realtime, r.cpu.mean_fps < kRealtimeFps);
    }
    EXPECT_LE(first, 1);
}

TEST(Probe, ReportText) {
    const gpu::Device dev = make_device(1 << 20);
    const LimitsReport r = probe_limits(dev);
    EXPECT_EQ(r.probe.max_nodes, 11025u);
    EXPECT_NE(r.text.find("maxStorageBufferBindingSize: 1048576"), std::string::npos);
    EXPECT_NE(r.text.find("11025 (105x105)"), std::string::npos);
    EXPECT_NE(r.text.find("per spring: 16 B"), std::string::npos);
}
