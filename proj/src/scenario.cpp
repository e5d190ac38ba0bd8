#include "clothsim/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>

#include <fmt/format.h>

#include "clothsim/cpu_solver.hpp"
#include "clothsim/errors.hpp"
#include "clothsim/gpu/engine.hpp"

namespace clothsim {

std::optional<SceneKind> parse_scene(std::string_view s) {
    if (s == "hanging") return SceneKind::hanging;
    if (s == "drop") return SceneKind::drop;
    if (s == "pull") return SceneKind::pull;
    return std::nullopt;
}

std::optional<BackendChoice> parse_backend_choice(std::string_view s) {
    if (s == "cpu") return BackendChoice::cpu;
    if (s == "gpu") return BackendChoice::gpu;
    if (s == "both") return BackendChoice::both;
    return std::nullopt;
}

std::string_view to_string(SceneKind s) {
    switch (s) {
        case SceneKind::hanging: return "hanging";
        case SceneKind::drop: return "drop";
        case SceneKind::pull: return "pull";
    }
    return "?";
}

std::string_view to_string(BackendChoice b) {
    switch (b) {
        case BackendChoice::cpu: return "cpu";
        case BackendChoice::gpu: return "gpu";
        case BackendChoice::both: return "both";
    }
    return "?";
}

void ScenarioConfig::validate() const {
    params.validate();
    if (nx < 2 || ny < 2) throw ConfigError("cloth grid must be at least 2x2");
    if (frames == 0) throw ConfigError("frames must be positive");
    if (scene == SceneKind::hanging && obstacle) {
        throw ConfigError("the hanging scene runs without collision processing; drop --obstacle");
    }
    if (scene != SceneKind::hanging && !obstacle) {
        throw ConfigError(fmt::format("the {} scene needs --obstacle", to_string(scene)));
    }
    if (snapshot_every && *snapshot_every == 0) throw ConfigError("snapshot interval must be positive");
    if (!(spacing > 0.0) || !(node_mass > 0.0)) throw ConfigError("spacing and node mass must be positive");
}

TriangleMesh resolve_obstacle(const std::string& spec, double radius) {
    constexpr std::string_view prefix = "icosphere:";
    if (spec.rfind(prefix, 0) == 0) {
        int k = -1;
        const std::string_view arg = std::string_view(spec).substr(prefix.size());
        const auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), k);
        if (ec != std::errc{} || ptr != arg.data() + arg.size()) {
            throw ConfigError("bad icosphere spec '" + spec + "', expected icosphere:K");
        }
        return generate_icosphere(k, radius);
    }
    TriangleMesh mesh = load_obj(spec);
    Vec3d lo = mesh.vertices.front();
    Vec3d hi = lo;
    for (const Vec3d& v : mesh.vertices) {
        for (int k = 0; k < 3; ++k) {
            lo[k] = std::min(lo[k], v[k]);
            hi[k] = std::max(hi[k], v[k]);
        }
    }
    const Vec3d center = (lo + hi) * 0.5;
    double extent = 0.0;
    for (const Vec3d& v : mesh.vertices) extent = std::max(extent, length(v - center));
    const double s = extent > 0.0 ? radius / extent : 1.0;
    for (Vec3d& v : mesh.vertices) v = (v - center) * s;
    return TriangleMesh::make(std::move(mesh.vertices), std::move(mesh.triangles));
}

Scene build_scene(const ScenarioConfig& config) {
    config.validate();
    Scene scene;
    const double width = (config.nx - 1) * config.spacing;
    const double height = (config.ny - 1) * config.spacing;
    const double total_mass = config.node_mass * config.nx * config.ny;

    ClothGridSpec grid{config.nx, config.ny, width, height, total_mass, {}, GridPlane::xz, {}};
    if (config.scene == SceneKind::hanging) {
        grid.pinned_rows = top_row();
        scene.cloth = generate_cloth_grid(grid);
        scene.camera.center = {0.0, -0.55 * height, -0.3 * height};
        scene.camera.direction = normalize(Vec3d{0.3, -0.2, -1.0});
        scene.camera.half_width = 0.9 * std::max(width, height);
        return scene;
    }

    scene.obstacle_radius = config.obstacle_radius_fraction * width;
    scene.obstacle = resolve_obstacle(*config.obstacle, scene.obstacle_radius);
    grid.center = {0.0, scene.obstacle_radius + 2.0 * config.spacing, 0.0};
    scene.cloth = generate_cloth_grid(grid);
    if (config.scene == SceneKind::pull) {
        scene.external.acceleration = config.pull_acceleration;
        for (std::uint32_t i = 0; i < config.nx; ++i) {
            scene.external.nodes.push_back(scene.cloth.index(i, config.ny - 1));
        }
    }
    scene.camera.center = {0.0, 0.0, 0.0};
    scene.camera.direction = normalize(Vec3d{-1.0, -0.6, -1.0});
    scene.camera.half_width = 0.75 * std::max(width, height);
    return scene;
}

double mean_fps(std::span<const FrameStats> stats, std::uint64_t warmup) {
    const std::size_t skip = stats.size() > warmup ? warmup : 0;
    double sum = 0.0;
    for (std::size_t i = skip; i < stats.size(); ++i) sum += stats[i].fps;
    return stats.size() > skip ? sum / static_cast<double>(stats.size() - skip) : 0.0;
}

double mean_wall_ms(std::span<const FrameStats> stats, std::uint64_t warmup) {
    const std::size_t skip = stats.size() > warmup ? warmup : 0;
    double sum = 0.0;
    for (std::size_t i = skip; i < stats.size(); ++i) sum += stats[i].wall_ms;
    return stats.size() > skip ? sum / static_cast<double>(stats.size() - skip) : 0.0;
}

namespace {

struct BackendRun {
    std::vector<FrameStats> stats;
    std::vector<Vec3d> parity_positions;
    std::vector<std::string> failures;
    std::vector<std::filesystem::path> snapshots;
};

std::filesystem::path snapshot_path(const ScenarioConfig& config, Backend backend, std::uint64_t frame) {
    const std::filesystem::path dir = config.output.has_parent_path() ? config.output.parent_path() : ".";
    return dir / fmt::format("{}_{}_f{:05d}.png", config.output.stem().string(), to_string(backend), frame);
}

void write_snapshot(const Scene& scene, std::span<const Vec3d> positions, const std::filesystem::path& path) {
    std::vector<SnapshotMesh> meshes;
    meshes.push_back({positions, scene.cloth.triangles, {0.95, 0.85, 0.70}});
    if (scene.obstacle) meshes.push_back({scene.obstacle->vertices, scene.obstacle->triangles, {0.6, 0.75, 1.0}});
    snapshot_png(meshes, scene.camera, path);
}

void check_frame(const Scene& scene, std::span<const Vec3d> positions, std::uint64_t frame,
                 std::vector<std::string>& failures) {
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (!is_finite(positions[i])) {
            failures.push_back(fmt::format("frame {}: node {} has a non-finite position", frame, i));
            return;
        }
        const Node& n = scene.cloth.nodes[i];
        if (n.pinned && !(Vec3<float>(positions[i]) == Vec3<float>(n.position))) {
            failures.push_back(fmt::format("frame {}: pinned node {} moved", frame, i));
            return;
        }
    }
}

BackendRun run_backend(const ScenarioConfig& config, const Scene& scene, Backend backend, gpu::Device* device,
                       std::uint64_t frames, bool keep_parity, bool snapshots) {
    BackendRun run;
    run.stats.reserve(frames);
    const std::uint64_t parity_frame = std::min(frames, config.parity_frames);
    const TriangleMesh* obstacle = scene.obstacle ? &*scene.obstacle : nullptr;

    auto after_frame = [&](std::uint64_t frame, const std::function<std::vector<Vec3d>()>& positions) {
        const bool want_snapshot = snapshots && config.snapshot_every && frame % *config.snapshot_every == 0;
        const bool want_parity = keep_parity && frame == parity_frame;
        if (!config.verify && !want_snapshot && !want_parity) return;
        const std::vector<Vec3d> pos = positions();
        if (config.verify) check_frame(scene, pos, frame, run.failures);
        if (want_parity) run.parity_positions = pos;
        if (want_snapshot) {
            run.snapshots.push_back(snapshot_path(config, backend, frame));
            write_snapshot(scene, pos, run.snapshots.back());
        }
    };

    if (backend == Backend::cpu) {
        CpuSolver solver(scene.cloth, config.params, obstacle, scene.external);
        for (std::uint64_t f = 1; f <= frames; ++f) {
            run.stats.push_back(solver.step());
            if (config.verify && solver.has_obstacle() && !solver.accumulator_clear_after_last_step()) {
                run.failures.push_back(fmt::format("frame {}: cpu accumulator not reset", f));
            }
            after_frame(f, [&] { return solver.state().positions; });
        }
        if (config.verify && solver.state().degenerate_springs > 0) {
            run.failures.push_back(fmt::format("{} degenerate spring evaluations", solver.state().degenerate_springs));
        }
        return run;
    }

    std::optional<gpu::Device> owned;
    if (!device) {
        owned.emplace(gpu::Device::request_default());
        device = &*owned;
    }
    gpu::GpuEngine engine = gpu::GpuEngine::build(*device, scene.cloth, obstacle, config.params, scene.external);
    engine.set_readback_policy(config.verify ? gpu::ReadbackPolicy::every_step : gpu::ReadbackPolicy::never);
    for (std::uint64_t f = 1; f <= frames; ++f) {
        run.stats.push_back(engine.step());
        if (config.verify && !engine.collision_passes_noop()) {
            const auto counts = engine.response_counts();
            const auto sums = engine.read_fixed(gpu::BufferRole::response_accumulator);
            const bool clear = std::all_of(counts.begin(), counts.end(), [](std::int32_t c) { return c == 0; }) &&
                               std::all_of(sums.begin(), sums.end(), [](const FixedPointVec3& v) { return v == FixedPointVec3{}; });
            if (!clear) run.failures.push_back(fmt::format("frame {}: gpu accumulators not reset", f));
        }
        if (config.verify && (engine.status().flags & gpu::kStatusSaturated)) {
            run.failures.push_back(fmt::format("frame {}: fixed-point accumulation saturated", f));
        }
        after_frame(f, [&] { return config.verify ? engine.last_readback() : engine.positions(); });
    }
    return run;
}

double max_component_deviation(std::span<const Vec3d> a, std::span<const Vec3d> b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (int k = 0; k < 3; ++k) worst = std::max(worst, std::abs(a[i][k] - b[i][k]));
    }
    return worst;
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& config, gpu::Device* device) {
    const Scene scene = build_scene(config);
    if (config.output.has_parent_path()) std::filesystem::create_directories(config.output.parent_path());
    RunResult result;
    const bool both = config.backend == BackendChoice::both;

    std::vector<Backend> order;
    if (config.backend != BackendChoice::gpu) order.push_back(Backend::cpu);
    if (config.backend != BackendChoice::cpu) order.push_back(Backend::gpu);

    std::vector<BackendRun> runs;
    for (Backend b : order) {
        runs.push_back(run_backend(config, scene, b, device, config.frames, both, true));
        BackendRun& r = runs.back();
        result.stats.insert(result.stats.end(), r.stats.begin(), r.stats.end());
        for (std::string& f : r.failures) result.failures.push_back(fmt::format("{}: {}", to_string(b), f));
        result.snapshots.insert(result.snapshots.end(), r.snapshots.begin(), r.snapshots.end());
    }
    if (both) {
        ParityReport parity;
        parity.frame = std::min(config.frames, config.parity_frames);
        parity.tolerance = config.parity_tolerance;
        parity.max_deviation = max_component_deviation(runs[0].parity_positions, runs[1].parity_positions);
        parity.passed = parity.max_deviation <= parity.tolerance;
        result.parity = parity;
    }
    write_stats_csv(result.stats, config.output);
    return result;
}

std::pair<std::uint32_t, std::uint32_t> parse_resolution(std::string_view text) {
    auto fail = [&]() -> std::pair<std::uint32_t, std::uint32_t> {
        throw ConfigError("bad resolution '" + std::string(text) + "'");
    };
    if (text.empty()) return fail();
    if (const auto x = text.find('x'); x != std::string_view::npos) {
        std::uint32_t nx = 0;
        std::uint32_t ny = 0;
        const auto a = std::from_chars(text.data(), text.data() + x, nx);
        const auto b = std::from_chars(text.data() + x + 1, text.data() + text.size(), ny);
        if (a.ec != std::errc{} || a.ptr != text.data() + x || b.ec != std::errc{} ||
            b.ptr != text.data() + text.size() || nx < 2 || ny < 2) {
            return fail();
        }
        return {nx, ny};
    }
    double scale = 1.0;
    std::string_view number = text;
    if (text.back() == 'K' || text.back() == 'k') {
        scale = 1e3;
        number.remove_suffix(1);
    } else if (text.back() == 'M' || text.back() == 'm') {
        scale = 1e6;
        number.remove_suffix(1);
    }
    double value = 0.0;
    const auto r = std::from_chars(number.data(), number.data() + number.size(), value);
    if (r.ec != std::errc{} || r.ptr != number.data() + number.size() || !(value > 0.0)) return fail();
    const double nodes = std::round(value * scale);
    auto side = static_cast<std::uint32_t>(std::ceil(std::sqrt(nodes) - 1e-9));
    side = std::max<std::uint32_t>(side, 2);
    return {side, side};
}

std::vector<SweepRow> run_resolution_sweep(const ScenarioConfig& base,
                                           const std::vector<std::pair<std::uint32_t, std::uint32_t>>& resolutions,
                                           gpu::Device* device) {
    for (std::size_t i = 1; i < resolutions.size(); ++i) {
        const auto prev = std::uint64_t{resolutions[i - 1].first} * resolutions[i - 1].second;
        const auto cur = std::uint64_t{resolutions[i].first} * resolutions[i].second;
        if (cur <= prev) throw ConfigError("sweep resolutions must be strictly ascending in node count");
    }

    std::optional<gpu::Device> owned;
    if (base.backend != BackendChoice::cpu && !device) {
        owned.emplace(gpu::Device::request_default());
        device = &*owned;
    }

    std::vector<SweepRow> rows;
    bool cpu_capped = false;
    bool gpu_capped = false;
    bool cpu_flagged = false;
    bool gpu_flagged = false;
    for (const auto& [nx, ny] : resolutions) {
        ScenarioConfig config = base;
        config.nx = nx;
        config.ny = ny;
        SweepRow row;
        row.nx = nx;
        row.ny = ny;
        row.nodes = std::uint64_t{nx} * ny;
        row.springs = spring_count_formula(nx, ny).total();
        row.frames = config.frames;

        std::optional<Scene> scene;
        std::string scene_error;
        try {
            scene = build_scene(config);
            row.obstacle_triangles = scene->obstacle ? scene->obstacle->triangles.size() : 0;
        } catch (const ClothError& e) {
            scene_error = e.what();
        }

        auto run_one = [&](Backend b, BackendSummary& out, bool& capped, bool& flagged) {
            out.ran = true;
            if (capped) {
                out.status = "skipped";
                out.reason = "above capacity";
                return;
            }
            if (!scene) {
                out.status = "error";
                out.reason = scene_error;
                return;
            }
            try {
                const BackendRun run = run_backend(config, *scene, b, device, config.frames, false, false);
                out.mean_ms = mean_wall_ms(run.stats, config.warmup_frames);
                out.mean_fps = mean_fps(run.stats, config.warmup_frames);
                out.below_realtime = out.mean_fps < kRealtimeFps;
                if (out.below_realtime && !flagged) {
                    out.first_below_realtime = true;
                    flagged = true;
                }
                out.status = run.failures.empty() ? "ok" : "verify-failed";
                if (!run.failures.empty()) out.reason = run.failures.front();
            } catch (const CapacityError& e) {
                out.status = "capacity";
                out.reason = e.what();
                capped = true;
            } catch (const BudgetExceededError& e) {
                out.status = "budget";
                out.reason = e.what();
            } catch (const NumericalDivergenceError& e) {
                out.status = "diverged";
                out.reason = e.what();
            }
        };
        if (base.backend != BackendChoice::gpu) run_one(Backend::cpu, row.cpu, cpu_capped, cpu_flagged);
        if (base.backend != BackendChoice::cpu) run_one(Backend::gpu, row.gpu, gpu_capped, gpu_flagged);
        if (row.cpu.status == "ok" && row.gpu.status == "ok" && row.cpu.mean_ms > 0.0) {
            row.gpu_cpu_ratio = row.gpu.mean_ms / row.cpu.mean_ms;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

std::string csv_field(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

std::string summary_fields(const BackendSummary& s) {
    if (!s.ran) return ",,,,";
    if (s.status != "ok" && s.status != "verify-failed") return fmt::format("{},,,,", s.status);
    return fmt::format("{},{:.6f},{:.3f},{},{}", s.status, s.mean_ms, s.mean_fps, s.below_realtime ? 1 : 0,
                       s.first_below_realtime ? 1 : 0);
}

}  // namespace

std::string format_sweep_csv(std::span<const SweepRow> rows) {
    std::string out(kSweepCsvHeader);
    out += '\n';
    for (const SweepRow& r : rows) {
        std::string reason = r.cpu.reason;
        if (!r.gpu.reason.empty()) reason += (reason.empty() ? "" : " | ") + r.gpu.reason;
        out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.nodes, r.nx, r.ny, r.springs, r.obstacle_triangles,
                           r.frames, summary_fields(r.cpu), summary_fields(r.gpu),
                           r.gpu_cpu_ratio ? fmt::format("{:.6f}", *r.gpu_cpu_ratio) : std::string(),
                           csv_field(reason));
    }
    return out;
}

void write_sweep_csv(std::span<const SweepRow> rows, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << format_sweep_csv(rows);
    if (!out) throw IoError("write failed for " + path.string());
}

LimitsReport probe_limits(const gpu::Device& device) {
    LimitsReport r;
    r.adapter = device.info();
    r.probe = gpu::max_nodes_probe(device.limits());
    r.formula = gpu::layout_formula();
    const gpu::Limits& l = device.limits();
    r.text = fmt::format(
        "adapter: {} (backend {}, {} threads)\n"
        "maxStorageBufferBindingSize: {} bytes ({:.1f} MiB)\n"
        "maxBufferSize: {} bytes\n"
        "maxComputeWorkgroupSizeX: {}\n"
        "maxComputeWorkgroupsPerDimension: {}\n"
        "max nodes (every binding under the ceiling): {} ({}x{})\n"
        "max nodes (all buffers together under one ceiling): {} ({}x{})\n"
        "probe: {}\n"
        "layout: {}\n",
        r.adapter.name, r.adapter.backend, r.adapter.threads, l.max_storage_buffer_binding_size,
        static_cast<double>(l.max_storage_buffer_binding_size) / (1024.0 * 1024.0), l.max_buffer_size,
        l.max_compute_workgroup_size_x, l.max_compute_workgroups_per_dimension, r.probe.max_nodes,
        r.probe.grid_side, r.probe.grid_side, r.probe.max_nodes_total, r.probe.total_grid_side,
        r.probe.total_grid_side, r.probe.diagnostic, r.formula);
    return r;
}

}  // namespace clothsim
