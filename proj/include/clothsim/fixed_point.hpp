#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "clothsim/vec3.hpp"

namespace clothsim {

// Real values stored as round(value * scale) in 32-bit signed integers so
// that atomic accumulation is exact and order-independent. Encoding
// saturates at the i32 range.
class FixedPoint {
public:
    explicit constexpr FixedPoint(double scale = 65536.0) : scale_(scale), inv_scale_(1.0 / scale) {}

    double scale() const { return scale_; }
    double quantum() const { return inv_scale_; }

    template <typename T>
    std::int32_t encode(T value) const {
        const double scaled = std::nearbyint(static_cast<double>(value) * scale_);
        constexpr double lo = std::numeric_limits<std::int32_t>::min();
        constexpr double hi = std::numeric_limits<std::int32_t>::max();
        if (!(scaled > lo)) return std::numeric_limits<std::int32_t>::min();
        if (!(scaled < hi)) return std::numeric_limits<std::int32_t>::max();
        return static_cast<std::int32_t>(scaled);
    }

    double decode(std::int32_t value) const { return static_cast<double>(value) * inv_scale_; }

    // Largest per-contribution magnitude such that max_terms contributions can
    // be summed into one slot without overflow.
    double overflow_bound(std::uint32_t max_terms) const {
        return static_cast<double>(std::numeric_limits<std::int32_t>::max()) / (scale_ * max_terms);
    }

private:
    double scale_;
    double inv_scale_;
};

struct FixedPointVec3 {
    std::int32_t x = 0, y = 0, z = 0;

    template <typename T>
    static FixedPointVec3 encode(const Vec3<T>& v, const FixedPoint& fp) {
        return {fp.encode(v.x), fp.encode(v.y), fp.encode(v.z)};
    }
    Vec3d decode(const FixedPoint& fp) const { return {fp.decode(x), fp.decode(y), fp.decode(z)}; }

    friend bool operator==(const FixedPointVec3&, const FixedPointVec3&) = default;
};

}  // namespace clothsim
