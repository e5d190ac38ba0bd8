"""Mass-spring cloth simulation: CPU reference solver and compute-shader engine."""

from ._clothsim import (
    AdapterUnavailableError,
    BudgetExceededError,
    CapacityError,
    ClothError,
    ClothMesh,
    ConfigError,
    ConstructionError,
    CpuSolver,
    GpuEngine,
    NumericalDivergenceError,
    SimParams,
    SpringCounts,
    TriangleMesh,
    edge_triangle_intersect,
    face_plane_inradius,
    generate_cloth_grid,
    generate_icosphere,
    load_obj,
    max_nodes_probe,
    parse_resolution,
    run_scenario,
    spring_count_formula,
)

__all__ = [name for name in dir() if not name.startswith("_")]
