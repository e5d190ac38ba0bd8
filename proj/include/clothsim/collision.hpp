#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "clothsim/mesh.hpp"
#include "clothsim/params.hpp"
#include "clothsim/vec3.hpp"

namespace clothsim {

template <typename T>
struct EdgeTriangleHit {
    T t{};  // distance from S along the normalized edge direction
    T u{};
    T v{};
    Vec3<T> point;
};

// Finite-segment Moller-Trumbore. A hit requires |a| >= epsilon, u in [0,1],
// v >= 0, u + v <= 1 and epsilon < t < |E - S|.
template <typename T>
std::optional<EdgeTriangleHit<T>> edge_triangle_intersect(const Vec3<T>& S, const Vec3<T>& E,
                                                          const Vec3<T>& V0, const Vec3<T>& V1,
                                                          const Vec3<T>& V2, T epsilon) {
    const Vec3<T> d = E - S;
    const T edge_len = length(d);
    if (!(edge_len > epsilon)) return std::nullopt;
    const Vec3<T> r = d / edge_len;

    const Vec3<T> e1 = V1 - V0;
    const Vec3<T> e2 = V2 - V0;
    if (!(length_squared(cross(e1, e2)) > T(4) * T(kMinTriangleArea) * T(kMinTriangleArea))) {
        return std::nullopt;
    }

    const Vec3<T> h = cross(r, e2);
    const T a = dot(e1, h);
    if (!(std::abs(a) >= epsilon)) return std::nullopt;

    const T f = T(1) / a;
    const Vec3<T> s = S - V0;
    const T u = f * dot(s, h);
    if (u < T(0) || u > T(1)) return std::nullopt;

    const Vec3<T> q = cross(s, e1);
    const T v = f * dot(r, q);
    const T t = f * dot(e2, q);
    if (v < T(0) || u + v > T(1) || !(epsilon < t && t < edge_len)) return std::nullopt;

    return EdgeTriangleHit<T>{t, u, v, S + r * t};
}

template <typename T>
struct Contact {
    std::uint32_t node = 0;
    Vec3<T> direction;
};

// Upper bound: 3 cloth edges x 2 nodes + 3 obstacle edges x 3 nodes.
inline constexpr std::size_t kMaxContactsPerPair = 15;

template <typename T>
struct PairContacts {
    std::array<Contact<T>, kMaxContactsPerPair> contacts{};
    std::uint32_t size = 0;
    std::uint32_t hits = 0;  // edge/triangle intersections found

    std::span<const Contact<T>> view() const { return {contacts.data(), size}; }
};

inline constexpr std::uint8_t kAllEdges = 0b111;

// Push for one cloth node: the obstacle's outward face normal scaled by the
// node's depth behind the face plane (clamped at 0) plus the margin.
template <typename T>
Vec3<T> response_direction(const Vec3<T>& node, const Vec3<T>& face_point, const Vec3<T>& normal,
                           T margin) {
    const T signed_dist = dot(node - face_point, normal);
    const T depth = signed_dist < T(0) ? -signed_dist : T(0);
    return normal * (depth + margin);
}

// Narrow phase for one cloth triangle against one obstacle triangle. Cloth
// edges whose bit is clear in cloth_edges are skipped, likewise for obstacle
// edges, so shared edges are tested once per mesh.
template <typename T>
PairContacts<T> triangle_triangle_contacts(const Triangle& cloth_nodes,
                                           const std::array<Vec3<T>, 3>& cloth,
                                           const std::array<Vec3<T>, 3>& obstacle,
                                           const Vec3<T>& obstacle_normal, T epsilon, T margin,
                                           std::uint8_t cloth_edges = kAllEdges,
                                           std::uint8_t obstacle_edges = kAllEdges) {
    PairContacts<T> out;
    // Every reported hit lies in both triangles, so disjoint boxes have none.
    for (int a = 0; a < 3; ++a) {
        const T cmin = std::min({cloth[0][a], cloth[1][a], cloth[2][a]});
        const T cmax = std::max({cloth[0][a], cloth[1][a], cloth[2][a]});
        const T omin = std::min({obstacle[0][a], obstacle[1][a], obstacle[2][a]});
        const T omax = std::max({obstacle[0][a], obstacle[1][a], obstacle[2][a]});
        if (cmax + epsilon < omin || omax + epsilon < cmin) return out;
    }
    auto push = [&](int k) {
        out.contacts[out.size++] = {cloth_nodes[k],
                                    response_direction(cloth[k], obstacle[0], obstacle_normal, margin)};
    };
    for (int k = 0; k < 3; ++k) {
        if (!(cloth_edges & (1u << k))) continue;
        const int k1 = (k + 1) % 3;
        if (edge_triangle_intersect(cloth[k], cloth[k1], obstacle[0], obstacle[1], obstacle[2], epsilon)) {
            ++out.hits;
            push(k);
            push(k1);
        }
    }
    for (int k = 0; k < 3; ++k) {
        if (!(obstacle_edges & (1u << k))) continue;
        if (edge_triangle_intersect(obstacle[k], obstacle[(k + 1) % 3], cloth[0], cloth[1], cloth[2], epsilon)) {
            ++out.hits;
            push(0);
            push(1);
            push(2);
        }
    }
    return out;
}

// Per-node response accumulator. On the CPU the sums are kept in double.
struct ContactAccumulator {
    std::vector<Vec3d> response_sum;
    std::vector<std::uint32_t> count;

    explicit ContactAccumulator(std::size_t nodes = 0) : response_sum(nodes), count(nodes, 0) {}

    void add(const Contact<double>& c) {
        response_sum[c.node] += c.direction;
        ++count[c.node];
    }
    void reset();
    bool is_zero() const;
};

// Obstacle geometry with per-triangle edge ownership precomputed.
struct CollisionObstacle {
    const TriangleMesh* mesh = nullptr;
    std::vector<std::uint8_t> edge_masks;

    static CollisionObstacle from(const TriangleMesh& mesh);
    std::size_t triangle_count() const { return mesh ? mesh->triangles.size() : 0; }
};

struct ClothSurface {
    std::span<const Vec3d> positions;
    std::span<const Triangle> triangles;
    std::span<const std::uint8_t> edge_masks;  // empty: test every edge
};

// Brute-force narrow phase over every (cloth triangle, obstacle triangle)
// pair. Returns the number of edge/triangle hits. Throws BudgetExceededError
// before doing any work if the pair count exceeds max_pairs.
std::uint64_t detect_all(const ClothSurface& cloth, const CollisionObstacle& obstacle,
                         ContactAccumulator& accumulator, double epsilon, double margin,
                         std::uint64_t max_pairs);

struct ResponseTarget {
    std::span<Vec3d> positions;
    std::span<const Vec3d> previous_positions;
    std::span<Vec3d> velocities;
    std::span<const Node> nodes;  // for pin flags; may be empty
};

// Applies and then clears the accumulator. Returns the number of nodes moved.
std::size_t apply_collision_response(ResponseTarget target, ContactAccumulator& accumulator,
                                     ResponseAveraging averaging, ResponseBase base);

}  // namespace clothsim
