import numpy as np
import pytest

import clothsim


def test_grid_counts_match_formula():
    mesh = clothsim.generate_cloth_grid(64, 64, width=63.0, height=63.0)
    counts = mesh.spring_counts()
    assert (counts.structural, counts.shear, counts.bend) == (8064, 7938, 7936)
    assert counts == clothsim.spring_count_formula(64, 64)
    assert mesh.positions.shape == (4096, 3)
    assert mesh.triangles.shape == (2 * 63 * 63, 3)


def test_bad_grid_raises():
    with pytest.raises(ValueError):
        clothsim.generate_cloth_grid(1, 4)


def test_icosphere():
    s = clothsim.generate_icosphere(3, 2.0)
    assert s.vertices.shape == (642, 3)
    assert s.triangles.shape == (1280, 3)
    assert np.allclose(np.linalg.norm(s.vertices, axis=1), 2.0)
    assert 0.99 * 2.0 < clothsim.face_plane_inradius(s) < 2.0


def test_edge_triangle():
    hit = clothsim.edge_triangle_intersect((0, 0, -1), (0, 0, 1), (-1, -1, 0), (1, -1, 0), (0, 1, 0))
    assert hit is not None
    assert hit[0] == pytest.approx(1.0)
    assert clothsim.edge_triangle_intersect((3, 0, -1), (3, 0, 1), (-1, -1, 0), (1, -1, 0), (0, 1, 0)) is None


def test_cpu_gpu_parity():
    mesh = clothsim.generate_cloth_grid(16, 16, width=15.0, height=15.0, total_mass=256.0, pinned_rows=[0])
    cpu = clothsim.CpuSolver(mesh)
    gpu = clothsim.GpuEngine(mesh)
    cpu.step(30)
    gpu.step(30)
    assert np.max(np.abs(cpu.positions - gpu.positions)) <= 1e-3
    assert np.array_equal(cpu.positions[:16], mesh.positions[:16])


def test_drop_on_sphere_has_contacts():
    mesh = clothsim.generate_cloth_grid(8, 8, width=7.0, height=7.0, total_mass=64.0, center=(0.0, 3.0, 0.0))
    sphere = clothsim.generate_icosphere(2, 2.1)
    solver = clothsim.CpuSolver(mesh, clothsim.SimParams(), sphere)
    assert solver.step(80) > 0
    r = np.linalg.norm(solver.positions, axis=1)
    assert np.mean(r >= clothsim.face_plane_inradius(sphere) - 1e-3) >= 0.99


def test_run_scenario(tmp_path):
    out = tmp_path / "stats.csv"
    summary = clothsim.run_scenario("hanging", 8, 8, backend="both", frames=10, output=out, verify=True)
    assert summary["ok"]
    assert summary["frames"] == 20
    assert out.read_text().count("\n") == 21


def test_probe_and_resolution():
    assert clothsim.max_nodes_probe(1 << 20)["max_nodes"] == 11025
    assert clothsim.parse_resolution("65.5K") == (256, 256)
    with pytest.raises(ValueError):
        clothsim.parse_resolution("lots")
