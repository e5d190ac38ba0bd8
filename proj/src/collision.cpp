#include "clothsim/collision.hpp"

#include <algorithm>

#include "clothsim/errors.hpp"

namespace clothsim {

void ContactAccumulator::reset() {
    std::fill(response_sum.begin(), response_sum.end(), Vec3d{});
    std::fill(count.begin(), count.end(), 0u);
}

bool ContactAccumulator::is_zero() const {
    return std::all_of(count.begin(), count.end(), [](std::uint32_t c) { return c == 0; }) &&
           std::all_of(response_sum.begin(), response_sum.end(),
                       [](const Vec3d& v) { return v == Vec3d{}; });
}

CollisionObstacle CollisionObstacle::from(const TriangleMesh& mesh) {
    return {&mesh, edge_owner_masks(mesh.triangles)};
}

std::uint64_t detect_all(const ClothSurface& cloth, const CollisionObstacle& obstacle,
                         ContactAccumulator& accumulator, double epsilon, double margin,
                         std::uint64_t max_pairs) {
    const std::uint64_t pairs = std::uint64_t{cloth.triangles.size()} * obstacle.triangle_count();
    if (pairs > max_pairs) throw BudgetExceededError(pairs, max_pairs);
    if (pairs == 0) return 0;

    const TriangleMesh& obs = *obstacle.mesh;
    std::uint64_t hits = 0;
    for (std::size_t c = 0; c < cloth.triangles.size(); ++c) {
        const Triangle& ct = cloth.triangles[c];
        const std::array<Vec3d, 3> cp{cloth.positions[ct[0]], cloth.positions[ct[1]],
                                      cloth.positions[ct[2]]};
        const std::uint8_t cmask = cloth.edge_masks.empty() ? kAllEdges : cloth.edge_masks[c];
        for (std::size_t o = 0; o < obs.triangles.size(); ++o) {
            const Triangle& ot = obs.triangles[o];
            const std::array<Vec3d, 3> op{obs.vertices[ot[0]], obs.vertices[ot[1]], obs.vertices[ot[2]]};
            const auto found = triangle_triangle_contacts(ct, cp, op, obs.face_normals[o], epsilon,
                                                          margin, cmask, obstacle.edge_masks[o]);
            hits += found.hits;
            for (const Contact<double>& contact : found.view()) accumulator.add(contact);
        }
    }
    return hits;
}

std::size_t apply_collision_response(ResponseTarget target, ContactAccumulator& accumulator,
                                     ResponseAveraging averaging, ResponseBase base) {
    std::size_t moved = 0;
    for (std::size_t i = 0; i < target.positions.size(); ++i) {
        const std::uint32_t count = accumulator.count[i];
        const bool pinned = !target.nodes.empty() && target.nodes[i].pinned;
        if (count > 0 && !pinned) {
            target.velocities[i] *= -0.5;
            const Vec3d shift = averaging == ResponseAveraging::average
                                    ? accumulator.response_sum[i] / static_cast<double>(count)
                                    : accumulator.response_sum[i];
            const Vec3d from =
                base == ResponseBase::previous ? target.previous_positions[i] : target.positions[i];
            target.positions[i] = from + shift;
            ++moved;
        }
        accumulator.count[i] = 0;
        accumulator.response_sum[i] = Vec3d{};
    }
    return moved;
}

}  // namespace clothsim
