#include <gtest/gtest.h>

#include <random>

#include "clothsim/cpu_solver.hpp"
#include "clothsim/errors.hpp"
#include "oracles.hpp"

using namespace clothsim;

namespace {

ClothMesh unit_grid(std::uint32_t n, std::vector<std::uint32_t> pinned = {}) {
    ClothGridSpec spec;
    spec.nx = spec.ny = n;
    spec.width = spec.height = n - 1.0;
    spec.total_mass = double(n) * n;
    spec.pinned_rows = std::move(pinned);
    return generate_cloth_grid(spec);
}

SimParams no_gravity() {
    SimParams p;
    p.gravity = {};
    return p;
}

Vec3d total_momentum(const SolverState& s, const ClothMesh& m) {
    Vec3d p{};
    for (std::size_t i = 0; i < s.size(); ++i) p += s.velocities[i] * m.nodes[i].mass;
    return p;
}

}  // namespace

TEST(SpringForce, RestStateIsZero) {
    const Vec3d f = spring_force<double>({0, 0, 0}, {1.5, 0, 0}, {}, {}, 1.5, 100.0, 3.0);
    EXPECT_EQ(f, Vec3d{});
}

TEST(SpringForce, HandEvaluatedStretch) {
    const Vec3d f = spring_force<double>({0, 0, 0}, {2, 0, 0}, {}, {}, 1.0, 10.0, 0.0);
    EXPECT_EQ(f, (Vec3d{10, 0, 0}));
}

TEST(SpringForce, ActionReaction) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-2, 2);
    auto rv = [&] { return Vec3d{d(rng), d(rng), d(rng)}; };
    for (int i = 0; i < 1000; ++i) {
        const Vec3d pa = rv(), pb = rv(), va = rv(), vb = rv();
        const double rest = std::abs(d(rng)), k = std::abs(d(rng)) * 100, c = std::abs(d(rng));
        const Vec3d ab = spring_force(pa, pb, va, vb, rest, k, c);
        const Vec3d ba = spring_force(pb, pa, vb, va, rest, k, c);
        EXPECT_NEAR(length(ab + ba), 0.0, 1e-12 * (1 + length(ab)));
    }
}

TEST(SpringForce, DampingOpposesApproach) {
    const Vec3d f = spring_force<double>({0, 0, 0}, {1, 0, 0}, {1, 0, 0}, {}, 1.0, 0.0, 2.0);
    EXPECT_EQ(f, (Vec3d{-2, 0, 0}));
}

TEST(SpringForce, CoincidentEndpointsCounted) {
    std::uint64_t degenerate = 0;
    EXPECT_EQ(spring_force<double>({1, 1, 1}, {1, 1, 1}, {}, {}, 1.0, 10.0, 1.0, &degenerate), Vec3d{});
    EXPECT_EQ(degenerate, 1u);
}

TEST(AccumulateForces, GravityOnly) {
    ClothMesh m = unit_grid(3);
    m.springs.clear();
    SolverState s = SolverState::from(m);
    SimParams p;
    p.gravity = {0, -9.81, 0};
    accumulate_forces(s, m, p);
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s.forces[i], p.gravity * m.nodes[i].mass);
}

TEST(AccumulateForces, SingleSpringAtRest) {
    ClothMesh m;
    m.nx = 2;
    m.ny = 1;
    m.nodes = {Node{{0, 0, 0}}, Node{{1, 0, 0}}};
    m.springs = {Spring{0, 1, 1.0, SpringKind::structural}};
    SolverState s = SolverState::from(m);
    accumulate_forces(s, m, no_gravity());
    EXPECT_EQ(s.forces[0], Vec3d{});
    EXPECT_EQ(s.forces[1], Vec3d{});
}

TEST(AccumulateForces, RandomDisplacementMatchesPerNodeGather) {
    const ClothMesh m = unit_grid(4);
    SolverState s = SolverState::from(m);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> d(-0.3, 0.3);
    for (std::size_t i = 0; i < s.size(); ++i) {
        s.positions[i] += Vec3d{d(rng), d(rng), d(rng)};
        s.velocities[i] = Vec3d{d(rng), d(rng), d(rng)};
    }
    SimParams p = no_gravity();
    p.stiffness = {300.0, 200.0, 100.0};
    p.damping = 2.5;
    accumulate_forces(s, m, p);
    const auto want = oracle::gather_spring_forces(m, s.positions, s.velocities, p.stiffness, p.damping);
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(length(s.forces[i] - want[i]), 0.0, 1e-10) << i;
}

TEST(AccumulateForces, PinnedForcesZeroed) {
    const ClothMesh m = unit_grid(4, {0});
    SolverState s = SolverState::from(m);
    accumulate_forces(s, m, SimParams{});
    for (std::uint32_t i = 0; i < 4; ++i) EXPECT_EQ(s.forces[i], Vec3d{});
}

TEST(Integrate, FreeFlight) {
    ClothMesh m = unit_grid(2);
    SolverState s = SolverState::from(m);
    s.velocities[0] = {1, 0, 0};
    integrate(s, m, no_gravity(), 0.5);
    EXPECT_EQ(s.positions[0], (m.nodes[0].position + Vec3d{0.5, 0, 0}));
}

TEST(Integrate, SemiImplicitHandStep) {
    ClothMesh m = unit_grid(2);
    for (Node& n : m.nodes) n.mass = 1.0;
    SolverState s = SolverState::from(m);
    SimParams p;
    p.gravity = {0, -10, 0};
    m.springs.clear();
    accumulate_forces(s, m, p);
    integrate(s, m, p, 0.1);
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_NEAR(length(s.velocities[i] - Vec3d{0, -1, 0}), 0.0, 1e-15);
        EXPECT_NEAR(length(s.positions[i] - (m.nodes[i].position + Vec3d{0, -0.1, 0})), 0.0, 1e-15);
    }
}

TEST(Integrate, ExplicitUsesOldVelocity) {
    ClothMesh m = unit_grid(2);
    m.springs.clear();
    for (Node& n : m.nodes) n.mass = 1.0;
    SolverState s = SolverState::from(m);
    SimParams p;
    p.gravity = {0, -10, 0};
    p.integrator = Integrator::explicit_euler;
    accumulate_forces(s, m, p);
    integrate(s, m, p, 0.1);
    EXPECT_EQ(s.positions[0], m.nodes[0].position);
    EXPECT_NEAR(s.velocities[0].y, -1.0, 1e-15);
}

TEST(Integrate, PinnedNodeUnchanged) {
    const ClothMesh m = unit_grid(3, {0});
    SolverState s = SolverState::from(m);
    for (Vec3d& f : s.forces) f = {1e3, -1e3, 5};
    integrate(s, m, SimParams{}, 0.016);
    for (std::uint32_t i = 0; i < 3; ++i) {
        EXPECT_EQ(s.positions[i], m.nodes[i].position);
        EXPECT_EQ(s.velocities[i], Vec3d{});
    }
}

TEST(Integrate, NonFiniteForceThrows) {
    const ClothMesh m = unit_grid(3);
    SolverState s = SolverState::from(m);
    s.forces[4].y = std::numeric_limits<double>::quiet_NaN();
    try {
        integrate(s, m, SimParams{}, 0.016);
        FAIL();
    } catch (const NumericalDivergenceError& e) {
        EXPECT_EQ(e.node(), 4u);
    }
}

TEST(CpuSolverStep, EquilibriumFixedPoint) {
    const ClothMesh m = unit_grid(8);
    CpuSolver solver(m, no_gravity());
    const auto before = solver.state().positions;
    solver.step();
    EXPECT_EQ(solver.state().positions, before);
    for (const Vec3d& f : solver.state().forces) EXPECT_EQ(f, Vec3d{});
}

TEST(CpuSolverStep, HangingOnlyFreeNodesMove) {
    const ClothMesh m = unit_grid(6, {0});
    CpuSolver solver(m, SimParams{});
    const FrameStats st = solver.step();
    for (std::size_t i = 0; i < m.nodes.size(); ++i) {
        if (m.nodes[i].pinned) {
            EXPECT_EQ(solver.state().positions[i], m.nodes[i].position);
            EXPECT_EQ(solver.state().velocities[i], Vec3d{});
        } else {
            EXPECT_NE(solver.state().positions[i], m.nodes[i].position);
        }
    }
    EXPECT_EQ(st.frame, 1u);
    EXPECT_EQ(st.collision_hits, 0u);
    EXPECT_EQ(st.backend, Backend::cpu);
    EXPECT_GT(st.wall_ms, 0.0);
}

TEST(CpuSolverStep, MatchesStraightLineReimplementation) {
    const ClothMesh m = unit_grid(16, {0});
    SimParams p;
    CpuSolver solver(m, p);
    auto plain = oracle::PlainCloth::from(m, p.stiffness);
    for (int step = 0; step < 10; ++step) {
        solver.step();
        plain.step(p.dt, p.damping, p.gravity);
    }
    for (std::size_t i = 0; i < m.nodes.size(); ++i) {
        for (int k = 0; k < 3; ++k) EXPECT_NEAR(solver.state().positions[i][k], plain.x[i][k], 1e-12) << i;
    }
}

TEST(CpuSolverStep, MomentumConserved) {
    ClothMesh m = unit_grid(16);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(-0.5, 0.5);
    for (Node& n : m.nodes) n.velocity = {d(rng), d(rng), d(rng)};
    CpuSolver solver(m, no_gravity());
    double mass = 0.0;
    for (const Node& n : m.nodes) mass += n.mass;
    const Vec3d p0 = total_momentum(solver.state(), m);
    for (int i = 0; i < 200; ++i) solver.step();
    const Vec3d p1 = total_momentum(solver.state(), m);
    EXPECT_LE(length(p1 - p0) / mass / 200.0, 1e-9);
}

TEST(CpuSolverStep, DampingDissipatesEnergy) {
    ClothMesh m = unit_grid(8);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> d(-0.2, 0.2);
    for (Node& n : m.nodes) n.position += Vec3d{d(rng), d(rng), d(rng)};
    auto energy = [&](const CpuSolver& s) {
        double e = 0.0;
        for (std::size_t i = 0; i < m.nodes.size(); ++i) {
            e += 0.5 * m.nodes[i].mass * length_squared(s.state().velocities[i]);
        }
        for (const Spring& sp : s.mesh().springs) {
            const double ext = length(s.state().positions[sp.b] - s.state().positions[sp.a]) - sp.rest_length;
            e += 0.5 * s.params().stiffness_of(sp.kind) * ext * ext;
        }
        return e;
    };
    SimParams p = no_gravity();
    p.stiffness = {200.0, 200.0, 200.0};
    p.damping = 2.0;
    CpuSolver solver(m, p);
    const double e0 = energy(solver);
    for (int i = 0; i < 300; ++i) solver.step();
    EXPECT_LT(energy(solver), 0.1 * e0);
}

TEST(CpuSolverStep, Deterministic) {
    const ClothMesh m = unit_grid(12, {0});
    CpuSolver a(m, SimParams{}), b(m, SimParams{});
    for (int i = 0; i < 50; ++i) {
        a.step();
        b.step();
    }
    EXPECT_EQ(a.state().positions, b.state().positions);
}

TEST(CpuSolverStep, SubstepsSplitTheFrame) {
    const ClothMesh m = unit_grid(6, {0});
    SimParams one;
    SimParams two;
    two.substeps = 2;
    two.dt = 2 * one.dt;
    CpuSolver a(m, one), b(m, two);
    a.step();
    a.step();
    b.step();
    for (std::size_t i = 0; i < m.nodes.size(); ++i) {
        EXPECT_NEAR(length(a.state().positions[i] - b.state().positions[i]), 0.0, 1e-12);
    }
}

TEST(CpuSolverStep, PullAccelerationActsOnSelectedNodes) {
    const ClothMesh m = unit_grid(4);
    ExternalForce ext{{5, 0, 0}, {15}};
    CpuSolver solver(m, no_gravity(), nullptr, ext);
    solver.step();
    EXPECT_GT(solver.state().positions[15].x, m.nodes[15].position.x);
    EXPECT_THROW(CpuSolver(m, no_gravity(), nullptr, ExternalForce{{1, 0, 0}, {99}}), ConfigError);
}

TEST(SimParams, Validation) {
    SimParams p;
    EXPECT_NO_THROW(p.validate());
    p.dt = 0;
    EXPECT_THROW(p.validate(), ConfigError);
    p = SimParams{};
    p.stiffness[1] = -1;
    EXPECT_THROW(p.validate(), ConfigError);
    p = SimParams{};
    p.epsilon_mt = 0;
    EXPECT_THROW(p.validate(), ConfigError);
    p = SimParams{};
    p.fixed_point_scale = 0.5;
    EXPECT_THROW(p.validate(), ConfigError);
}
