#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "clothsim/errors.hpp"
#include "clothsim/gpu/device.hpp"
#include "clothsim/scenario.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitNoAdapter = 3;

std::pair<std::uint32_t, std::uint32_t> parse_grid(const std::string& text) {
    const auto [nx, ny] = clothsim::parse_resolution(text);
    return {nx, ny};
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const std::size_t end = s.find(sep, start);
        const std::string part = s.substr(start, end == std::string::npos ? std::string::npos : end - start);
        if (!part.empty()) out.push_back(part);
        if (end == std::string::npos) break;
        start = end + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mass-spring cloth benchmark harness"};

    std::string scene = "hanging";
    std::string grid = "64x64";
    std::string obstacle;
    std::string backend = "cpu";
    std::uint64_t frames = 300;
    std::optional<double> dt;
    std::optional<double> stiffness;
    std::optional<double> damping;
    std::optional<std::uint64_t> snapshot_every;
    std::string out = "stats.csv";
    std::string sweep;
    bool probe = false;
    bool verify = false;

    app.add_option("--scene", scene, "hanging | drop | pull")->check(CLI::IsMember({"hanging", "drop", "pull"}));
    app.add_option("--grid", grid, "cloth grid NXxNY (or a node count such as 4K)");
    app.add_option("--obstacle", obstacle, "OBJ path or icosphere:K");
    app.add_option("--backend", backend, "cpu | gpu | both")->check(CLI::IsMember({"cpu", "gpu", "both"}));
    app.add_option("--frames", frames, "frames to simulate")->check(CLI::PositiveNumber);
    app.add_option("--dt", dt, "time step in seconds");
    app.add_option("--stiffness", stiffness, "spring stiffness for every spring kind");
    app.add_option("--damping", damping, "spring damping");
    app.add_option("--snapshot-every", snapshot_every, "write a PNG every K frames")->check(CLI::PositiveNumber);
    app.add_option("--out", out, "stats CSV path (sweep summary in sweep mode)");
    app.add_option("--sweep", sweep, "comma-separated ascending resolutions, e.g. 4K,10K,65.5K");
    app.add_flag("--probe-limits", probe, "print device limits and the max-fit node count");
    app.add_flag("--verify", verify, "read back every frame and run the oracle checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (probe) {
            const clothsim::gpu::Device device = clothsim::gpu::Device::request_default();
            std::cout << clothsim::probe_limits(device).text;
            return 0;
        }

        clothsim::ScenarioConfig config;
        config.scene = *clothsim::parse_scene(scene);
        config.backend = *clothsim::parse_backend_choice(backend);
        std::tie(config.nx, config.ny) = parse_grid(grid);
        if (!obstacle.empty()) config.obstacle = obstacle;
        config.frames = frames;
        if (dt) config.params.dt = *dt;
        if (stiffness) config.params.stiffness = {*stiffness, *stiffness, *stiffness};
        if (damping) config.params.damping = *damping;
        config.snapshot_every = snapshot_every;
        config.output = out;
        config.verify = verify;

        if (!sweep.empty()) {
            std::vector<std::pair<std::uint32_t, std::uint32_t>> resolutions;
            for (const std::string& r : split(sweep, ',')) resolutions.push_back(clothsim::parse_resolution(r));
            const auto rows = clothsim::run_resolution_sweep(config, resolutions);
            clothsim::write_sweep_csv(rows, config.output);
            std::cout << clothsim::format_sweep_csv(rows);
            bool ok = true;
            for (const auto& row : rows) {
                for (const auto* s : {&row.cpu, &row.gpu}) {
                    if (s->ran && s->status != "ok" && s->status != "capacity" && s->status != "skipped") ok = false;
                }
            }
            return ok ? 0 : kExitFailure;
        }

        const clothsim::RunResult result = clothsim::run_scenario(config);
        const auto frames_of = [&](clothsim::Backend b) {
            std::vector<clothsim::FrameStats> s;
            for (const auto& f : result.stats) {
                if (f.backend == b) s.push_back(f);
            }
            return s;
        };
        for (clothsim::Backend b : {clothsim::Backend::cpu, clothsim::Backend::gpu}) {
            const auto s = frames_of(b);
            if (s.empty()) continue;
            const double fps = clothsim::mean_fps(s, config.warmup_frames);
            fmt::print("{}: {} frames, mean {:.3f} ms, {:.2f} fps{}\n", clothsim::to_string(b), s.size(),
                       clothsim::mean_wall_ms(s, config.warmup_frames), fps,
                       fps < clothsim::kRealtimeFps ? " (below 30 fps)" : "");
        }
        if (result.parity) {
            fmt::print("parity at frame {}: max deviation {:.3e} (tolerance {:.1e}) {}\n", result.parity->frame,
                       result.parity->max_deviation, result.parity->tolerance,
                       result.parity->passed ? "PASS" : "FAIL");
        }
        for (const auto& p : result.snapshots) fmt::print("snapshot: {}\n", p.string());
        for (const auto& f : result.failures) fmt::print(stderr, "verify: {}\n", f);
        fmt::print("stats: {}\n", config.output.string());
        return result.ok() ? 0 : kExitFailure;
    } catch (const clothsim::AdapterUnavailableError& e) {
        fmt::print(stderr, "no compute adapter available: {}\n", e.what());
        return kExitNoAdapter;
    } catch (const clothsim::ClothError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitFailure;
    }
}
