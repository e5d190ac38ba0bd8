#pragma once

// Software compute device following the WebGPU compute execution model:
// storage buffers checked against device limits, 1-D/2-D workgroup
// dispatch, passes executed in submission order with a full barrier between
// them, and 32-bit integer atomics on buffer words.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace clothsim::gpu {

// Defaults are the WebGPU baseline limits.
struct Limits {
    std::uint64_t max_storage_buffer_binding_size = 128ull << 20;
    std::uint64_t max_buffer_size = 256ull << 20;
    std::uint32_t max_compute_workgroup_size_x = 256;
    std::uint32_t max_compute_invocations_per_workgroup = 256;
    std::uint32_t max_compute_workgroups_per_dimension = 65535;
    std::uint32_t max_storage_buffers_per_shader_stage = 8;
};

struct AdapterInfo {
    std::string name;
    std::string backend;
    unsigned threads = 1;
    Limits limits;
};

struct AdapterOptions {
    unsigned threads = 0;  // 0: hardware concurrency
    Limits limits;
};

// Environment variable selecting the adapter: "software" (default),
// "software:<threads>", or "none" to report no adapter.
inline constexpr std::string_view kAdapterEnv = "CLOTHSIM_ADAPTER";
// Optional override of max_storage_buffer_binding_size, in bytes.
inline constexpr std::string_view kBindingLimitEnv = "CLOTHSIM_MAX_STORAGE_BINDING";

// nullopt when the environment requests no adapter. Throws ConfigError on an
// unrecognised value.
std::optional<AdapterOptions> adapter_options_from_env();

class Buffer {
public:
    Buffer(std::string label, std::uint64_t size);

    const std::string& label() const { return label_; }
    std::uint64_t size() const { return size_; }

    std::span<std::byte> bytes() { return {reinterpret_cast<std::byte*>(storage_.data()), size_}; }
    std::span<const std::byte> bytes() const {
        return {reinterpret_cast<const std::byte*>(storage_.data()), size_};
    }

    template <typename T>
    std::span<T> view() {
        return {reinterpret_cast<T*>(storage_.data()), size_ / sizeof(T)};
    }
    template <typename T>
    std::span<const T> view() const {
        return {reinterpret_cast<const T*>(storage_.data()), size_ / sizeof(T)};
    }

    template <typename T>
    void write(std::span<const T> data, std::uint64_t offset_bytes = 0) {
        std::memcpy(bytes().data() + offset_bytes, data.data(), data.size_bytes());
    }
    void clear() { std::fill(storage_.begin(), storage_.end(), 0); }

private:
    std::string label_;
    std::uint64_t size_;
    std::vector<std::uint64_t> storage_;
};

// Atomic read-modify-write on a 32-bit buffer word.
inline std::int32_t atomic_add(std::int32_t& word, std::int32_t v) {
    return std::atomic_ref<std::int32_t>(word).fetch_add(v, std::memory_order_relaxed);
}
inline void atomic_store(std::int32_t& word, std::int32_t v) {
    std::atomic_ref<std::int32_t>(word).store(v, std::memory_order_relaxed);
}
inline std::int32_t atomic_load(std::int32_t& word) {
    return std::atomic_ref<std::int32_t>(word).load(std::memory_order_relaxed);
}
inline void atomic_min(std::int32_t& word, std::int32_t v) {
    std::atomic_ref<std::int32_t> ref(word);
    std::int32_t cur = ref.load(std::memory_order_relaxed);
    while (v < cur && !ref.compare_exchange_weak(cur, v, std::memory_order_relaxed)) {
    }
}
inline void atomic_or(std::int32_t& word, std::int32_t v) {
    std::atomic_ref<std::int32_t>(word).fetch_or(v, std::memory_order_relaxed);
}

class ComputePipeline {
public:
    // Runs invocations [begin, end) of one workgroup.
    using WorkgroupFn = std::function<void(std::uint64_t begin, std::uint64_t end)>;

    ComputePipeline(std::string label, std::uint32_t workgroup_size, WorkgroupFn fn)
        : label_(std::move(label)), workgroup_size_(workgroup_size), fn_(std::move(fn)) {}

    const std::string& label() const { return label_; }
    std::uint32_t workgroup_size() const { return workgroup_size_; }
    void run(std::uint64_t begin, std::uint64_t end) const { fn_(begin, end); }

private:
    std::string label_;
    std::uint32_t workgroup_size_;
    WorkgroupFn fn_;
};

template <typename Invocation>
ComputePipeline make_pipeline(std::string label, std::uint32_t workgroup_size, Invocation kernel) {
    return ComputePipeline(std::move(label), workgroup_size,
                           [kernel = std::move(kernel)](std::uint64_t begin, std::uint64_t end) {
                               for (std::uint64_t id = begin; id < end; ++id) kernel(id);
                           });
}

struct DispatchSize {
    std::uint32_t x = 0;
    std::uint32_t y = 1;
    std::uint64_t workgroups() const { return std::uint64_t{x} * y; }
};

// Workgroup grid covering `invocations`, folded into two dimensions when the
// per-dimension limit is exceeded. Kernels guard ids past the real count.
DispatchSize dispatch_size(std::uint64_t invocations, std::uint32_t workgroup_size, const Limits& limits);

struct DispatchCommand {
    const ComputePipeline* pipeline = nullptr;
    DispatchSize size;
};

// Called after each pass of a submission with the pass index.
using PassObserver = std::function<void(std::size_t pass_index, const ComputePipeline&)>;

class Device {
public:
    // Throws AdapterUnavailableError when options are absent.
    static Device request(std::optional<AdapterOptions> options);
    static Device request_default() { return request(adapter_options_from_env()); }

    Device(Device&&) noexcept;
    Device& operator=(Device&&) noexcept;
    ~Device();

    const AdapterInfo& info() const { return info_; }
    const Limits& limits() const { return info_.limits; }

    // Throws CapacityError when size exceeds max_buffer_size or, for storage
    // buffers, the binding ceiling.
    std::unique_ptr<Buffer> create_buffer(std::string label, std::uint64_t size, bool storage = true);

    void submit(std::span<const DispatchCommand> commands, const PassObserver& observer = {});

    void lose(std::string reason);
    bool lost() const { return lost_.has_value(); }

private:
    explicit Device(AdapterInfo info);

    struct Executor;

    AdapterInfo info_;
    std::unique_ptr<Executor> executor_;
    std::optional<std::string> lost_;
};

}  // namespace clothsim::gpu
