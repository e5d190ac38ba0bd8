#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace clothsim {

enum class Backend : std::uint8_t { cpu, gpu };

std::string_view to_string(Backend b);
std::optional<Backend> parse_backend(std::string_view s);

// One benchmark CSV row.
struct FrameStats {
    std::uint64_t frame = 0;
    double wall_ms = 0.0;
    double fps = 0.0;
    std::uint64_t nodes = 0;
    std::uint64_t springs = 0;
    std::uint64_t obstacle_triangles = 0;
    std::uint64_t collision_hits = 0;
    Backend backend = Backend::cpu;

    // Sets wall_ms and fps together; a zero duration is clamped to 1 ns.
    void set_wall_ms(double ms);

    friend bool operator==(const FrameStats&, const FrameStats&) = default;
};

}  // namespace clothsim
