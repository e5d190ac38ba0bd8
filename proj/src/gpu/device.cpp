#include "clothsim/gpu/device.hpp"

#include <cstdlib>
#include <thread>

#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include "clothsim/errors.hpp"

namespace clothsim::gpu {

namespace {

std::optional<std::string> env(std::string_view name) {
    if (const char* v = std::getenv(std::string(name).c_str()); v && *v) return std::string(v);
    return std::nullopt;
}

unsigned parse_unsigned(const std::string& text, std::string_view what) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return static_cast<unsigned>(v);
    } catch (const std::exception&) {
        throw ConfigError(std::string(what) + ": expected an unsigned integer, got '" + text + "'");
    }
}

}  // namespace

std::optional<AdapterOptions> adapter_options_from_env() {
    AdapterOptions options;
    if (const auto sel = env(kAdapterEnv)) {
        if (*sel == "none") return std::nullopt;
        if (sel->rfind("software", 0) != 0) {
            throw ConfigError(std::string(kAdapterEnv) + ": unknown adapter '" + *sel + "'");
        }
        const std::string rest = sel->substr(8);
        if (!rest.empty()) {
            if (rest[0] != ':') throw ConfigError(std::string(kAdapterEnv) + ": unknown adapter '" + *sel + "'");
            options.threads = parse_unsigned(rest.substr(1), kAdapterEnv);
        }
    }
    if (const auto limit = env(kBindingLimitEnv)) {
        const std::uint64_t bytes = std::stoull(*limit);
        options.limits.max_storage_buffer_binding_size = bytes;
        if (options.limits.max_buffer_size < bytes) options.limits.max_buffer_size = bytes;
    }
    return options;
}

Buffer::Buffer(std::string label, std::uint64_t size)
    : label_(std::move(label)), size_(size), storage_((size + 7) / 8, 0) {}

DispatchSize dispatch_size(std::uint64_t invocations, std::uint32_t workgroup_size, const Limits& limits) {
    const std::uint64_t groups = (invocations + workgroup_size - 1) / workgroup_size;
    const std::uint64_t per_dim = limits.max_compute_workgroups_per_dimension;
    if (groups <= per_dim) return {static_cast<std::uint32_t>(groups), 1};
    const std::uint64_t y = (groups + per_dim - 1) / per_dim;
    if (y > per_dim) throw ConfigError("dispatch exceeds the 2-D workgroup grid limit");
    return {static_cast<std::uint32_t>(per_dim), static_cast<std::uint32_t>(y)};
}

struct Device::Executor {
    explicit Executor(unsigned threads) : arena(static_cast<int>(threads)) {}
    tbb::task_arena arena;
};

Device::Device(AdapterInfo info) : info_(std::move(info)) {
    if (info_.threads > 1) executor_ = std::make_unique<Executor>(info_.threads);
}

Device::Device(Device&&) noexcept = default;
Device& Device::operator=(Device&&) noexcept = default;
Device::~Device() = default;

Device Device::request(std::optional<AdapterOptions> options) {
    if (!options) throw AdapterUnavailableError("no compute adapter available (" + std::string(kAdapterEnv) + "=none)");
    AdapterInfo info;
    info.name = "clothsim software compute device";
    info.backend = "software";
    info.threads = options->threads ? options->threads : std::max(1u, std::thread::hardware_concurrency());
    info.limits = options->limits;
    return Device(std::move(info));
}

std::unique_ptr<Buffer> Device::create_buffer(std::string label, std::uint64_t size, bool storage) {
    if (size > limits().max_buffer_size) {
        throw CapacityError("buffer '" + label + "' of " + std::to_string(size) +
                                " bytes exceeds maxBufferSize " + std::to_string(limits().max_buffer_size),
                            0);
    }
    if (storage && size > limits().max_storage_buffer_binding_size) {
        throw CapacityError("storage buffer '" + label + "' of " + std::to_string(size) +
                                " bytes exceeds maxStorageBufferBindingSize " +
                                std::to_string(limits().max_storage_buffer_binding_size),
                            0);
    }
    // Zero-size bindings are not allowed; keep one word.
    return std::make_unique<Buffer>(std::move(label), size == 0 ? 4 : size);
}

void Device::submit(std::span<const DispatchCommand> commands, const PassObserver& observer) {
    if (lost_) throw DeviceLostError("device lost: " + *lost_);
    for (std::size_t pass = 0; pass < commands.size(); ++pass) {
        const DispatchCommand& cmd = commands[pass];
        const ComputePipeline& pipe = *cmd.pipeline;
        const std::uint64_t wg = pipe.workgroup_size();
        const std::uint64_t groups = cmd.size.workgroups();
        auto run_groups = [&](std::uint64_t first, std::uint64_t last) {
            for (std::uint64_t g = first; g < last; ++g) pipe.run(g * wg, (g + 1) * wg);
        };
        if (executor_ && groups > 1) {
            executor_->arena.execute([&] {
                tbb::parallel_for(tbb::blocked_range<std::uint64_t>(0, groups),
                                  [&](const tbb::blocked_range<std::uint64_t>& r) { run_groups(r.begin(), r.end()); });
            });
        } else {
            run_groups(0, groups);
        }
        if (observer) observer(pass, pipe);
        if (lost_) throw DeviceLostError("device lost: " + *lost_);
    }
}

void Device::lose(std::string reason) { lost_ = std::move(reason); }

}  // namespace clothsim::gpu
