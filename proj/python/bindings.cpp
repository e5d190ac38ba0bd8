#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>

#include "clothsim/collision.hpp"
#include "clothsim/cpu_solver.hpp"
#include "clothsim/errors.hpp"
#include "clothsim/gpu/engine.hpp"
#include "clothsim/mesh.hpp"
#include "clothsim/scenario.hpp"

namespace py = pybind11;
using namespace clothsim;

namespace {

py::array_t<double> to_array(const std::vector<Vec3d>& v) {
    py::array_t<double> out({static_cast<py::ssize_t>(v.size()), py::ssize_t{3}});
    auto r = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < v.size(); ++i) {
        r(i, 0) = v[i].x;
        r(i, 1) = v[i].y;
        r(i, 2) = v[i].z;
    }
    return out;
}

py::array_t<std::uint32_t> to_array(const std::vector<Triangle>& t) {
    py::array_t<std::uint32_t> out({static_cast<py::ssize_t>(t.size()), py::ssize_t{3}});
    auto r = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < t.size(); ++i) {
        for (int k = 0; k < 3; ++k) r(i, k) = t[i][k];
    }
    return out;
}

Vec3d to_vec(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }

// GPU engine plus the device it runs on.
struct GpuSession {
    std::unique_ptr<gpu::Device> device;
    std::unique_ptr<TriangleMesh> obstacle;
    std::unique_ptr<gpu::GpuEngine> engine;
};

}  // namespace

PYBIND11_MODULE(_clothsim, m) {
    m.doc() = "Mass-spring cloth simulation with a CPU reference solver and a compute-shader engine.";

    py::register_exception<ClothError>(m, "ClothError");
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ConstructionError>(m, "ConstructionError", PyExc_ValueError);
    py::register_exception<CapacityError>(m, "CapacityError");
    py::register_exception<BudgetExceededError>(m, "BudgetExceededError");
    py::register_exception<NumericalDivergenceError>(m, "NumericalDivergenceError", PyExc_ArithmeticError);
    py::register_exception<AdapterUnavailableError>(m, "AdapterUnavailableError");

    py::class_<SpringCounts>(m, "SpringCounts")
        .def_readonly("structural", &SpringCounts::structural)
        .def_readonly("shear", &SpringCounts::shear)
        .def_readonly("bend", &SpringCounts::bend)
        .def_property_readonly("total", &SpringCounts::total)
        .def("__eq__", [](const SpringCounts& a, const SpringCounts& b) { return a == b; })
        .def("__repr__", [](const SpringCounts& c) {
            return "SpringCounts(structural=" + std::to_string(c.structural) + ", shear=" + std::to_string(c.shear) +
                   ", bend=" + std::to_string(c.bend) + ")";
        });

    py::class_<ClothMesh>(m, "ClothMesh")
        .def_readonly("nx", &ClothMesh::nx)
        .def_readonly("ny", &ClothMesh::ny)
        .def_property_readonly("node_count", [](const ClothMesh& c) { return c.nodes.size(); })
        .def_property_readonly("positions", [](const ClothMesh& c) { return to_array(c.positions()); })
        .def_property_readonly("triangles", [](const ClothMesh& c) { return to_array(c.triangles); })
        .def_property_readonly("pinned", [](const ClothMesh& c) {
            std::vector<bool> out;
            for (const Node& n : c.nodes) out.push_back(n.pinned);
            return out;
        })
        .def("spring_counts", &ClothMesh::spring_counts);

    m.def(
        "generate_cloth_grid",
        [](std::uint32_t nx, std::uint32_t ny, double width, double height, double total_mass,
           std::vector<std::uint32_t> pinned_rows, std::array<double, 3> center) {
            ClothGridSpec spec;
            spec.nx = nx;
            spec.ny = ny;
            spec.width = width;
            spec.height = height;
            spec.total_mass = total_mass;
            spec.pinned_rows = std::move(pinned_rows);
            spec.center = to_vec(center);
            return generate_cloth_grid(spec);
        },
        py::arg("nx"), py::arg("ny"), py::arg("width") = 1.0, py::arg("height") = 1.0, py::arg("total_mass") = 1.0,
        py::arg("pinned_rows") = std::vector<std::uint32_t>{}, py::arg("center") = std::array<double, 3>{0, 0, 0});
    m.def("spring_count_formula", &spring_count_formula, py::arg("nx"), py::arg("ny"));

    py::class_<TriangleMesh>(m, "TriangleMesh")
        .def_property_readonly("vertices", [](const TriangleMesh& t) { return to_array(t.vertices); })
        .def_property_readonly("triangles", [](const TriangleMesh& t) { return to_array(t.triangles); })
        .def_property_readonly("face_normals", [](const TriangleMesh& t) { return to_array(t.face_normals); });
    m.def(
        "generate_icosphere", [](int subdivisions, double radius) { return generate_icosphere(subdivisions, radius); },
        py::arg("subdivisions"), py::arg("radius"));
    m.def("face_plane_inradius", [](const TriangleMesh& t) { return face_plane_inradius(t); }, py::arg("mesh"));
    m.def("load_obj", [](const std::filesystem::path& p) { return load_obj(p); }, py::arg("path"));

    m.def(
        "edge_triangle_intersect",
        [](std::array<double, 3> s, std::array<double, 3> e, std::array<double, 3> a, std::array<double, 3> b,
           std::array<double, 3> c, double epsilon) -> std::optional<py::tuple> {
            const auto hit = edge_triangle_intersect(to_vec(s), to_vec(e), to_vec(a), to_vec(b), to_vec(c), epsilon);
            if (!hit) return std::nullopt;
            return py::make_tuple(hit->t, hit->u, hit->v);
        },
        py::arg("start"), py::arg("end"), py::arg("a"), py::arg("b"), py::arg("c"), py::arg("epsilon") = 1e-6,
        "Returns (t, u, v) for a hit, or None.");

    py::class_<SimParams>(m, "SimParams")
        .def(py::init<>())
        .def_readwrite("dt", &SimParams::dt)
        .def_readwrite("substeps", &SimParams::substeps)
        .def_property(
            "gravity", [](const SimParams& p) { return std::array<double, 3>{p.gravity.x, p.gravity.y, p.gravity.z}; },
            [](SimParams& p, std::array<double, 3> g) { p.gravity = to_vec(g); })
        .def_readwrite("stiffness", &SimParams::stiffness)
        .def_readwrite("damping", &SimParams::damping)
        .def_readwrite("epsilon_mt", &SimParams::epsilon_mt)
        .def_readwrite("response_margin", &SimParams::response_margin)
        .def_readwrite("fixed_point_scale", &SimParams::fixed_point_scale)
        .def_readwrite("max_collision_pairs", &SimParams::max_collision_pairs)
        .def("validate", &SimParams::validate);

    py::class_<CpuSolver>(m, "CpuSolver")
        .def(py::init([](const ClothMesh& mesh, const SimParams& params, const TriangleMesh* obstacle) {
                 return std::make_unique<CpuSolver>(mesh, params, obstacle);
             }),
             py::arg("mesh"), py::arg("params") = SimParams{}, py::arg("obstacle") = nullptr, py::keep_alive<1, 4>())
        .def(
            "step",
            [](CpuSolver& s, int frames) {
                std::uint64_t hits = 0;
                for (int k = 0; k < frames; ++k) hits += s.step().collision_hits;
                return hits;
            },
            py::arg("frames") = 1, "Advances the given number of frames; returns total collision hits.")
        .def_property_readonly("positions", [](const CpuSolver& s) { return to_array(s.state().positions); })
        .def_property_readonly("velocities", [](const CpuSolver& s) { return to_array(s.state().velocities); })
        .def_property_readonly("step_count", [](const CpuSolver& s) { return s.state().step_count; });

    py::class_<GpuSession>(m, "GpuEngine")
        .def(py::init([](const ClothMesh& mesh, const SimParams& params, const TriangleMesh* obstacle) {
                 auto s = std::make_unique<GpuSession>();
                 s->device = std::make_unique<gpu::Device>(gpu::Device::request_default());
                 if (obstacle) s->obstacle = std::make_unique<TriangleMesh>(*obstacle);
                 s->engine = std::make_unique<gpu::GpuEngine>(
                     gpu::GpuEngine::build(*s->device, mesh, s->obstacle.get(), params));
                 return s;
             }),
             py::arg("mesh"), py::arg("params") = SimParams{}, py::arg("obstacle") = nullptr)
        .def(
            "step",
            [](GpuSession& s, int frames) {
                std::uint64_t hits = 0;
                for (int k = 0; k < frames; ++k) hits += s.engine->step().collision_hits;
                return hits;
            },
            py::arg("frames") = 1)
        .def_property_readonly("positions", [](const GpuSession& s) { return to_array(s.engine->positions()); })
        .def_property_readonly("adapter", [](const GpuSession& s) { return s.device->info().name; });

    py::class_<ParityReport>(m, "ParityReport")
        .def_readonly("frame", &ParityReport::frame)
        .def_readonly("max_deviation", &ParityReport::max_deviation)
        .def_readonly("passed", &ParityReport::passed);

    m.def(
        "run_scenario",
        [](const std::string& scene, std::uint32_t nx, std::uint32_t ny, std::optional<std::string> obstacle,
           const std::string& backend, std::uint64_t frames, const std::filesystem::path& output, bool verify) {
            ScenarioConfig c;
            const auto sk = parse_scene(scene);
            const auto bk = parse_backend_choice(backend);
            if (!sk) throw ConfigError("unknown scene '" + scene + "'");
            if (!bk) throw ConfigError("unknown backend '" + backend + "'");
            c.scene = *sk;
            c.backend = *bk;
            c.nx = nx;
            c.ny = ny;
            c.obstacle = std::move(obstacle);
            c.frames = frames;
            c.output = output;
            c.verify = verify;
            const RunResult r = run_scenario(c);
            py::dict out;
            out["frames"] = r.stats.size();
            std::uint64_t hits = 0;
            for (const FrameStats& s : r.stats) hits += s.collision_hits;
            out["collision_hits"] = hits;
            out["parity"] = r.parity;
            out["failures"] = r.failures;
            out["ok"] = r.ok();
            return out;
        },
        py::arg("scene") = "hanging", py::arg("nx") = 32, py::arg("ny") = 32, py::arg("obstacle") = py::none(),
        py::arg("backend") = "cpu", py::arg("frames") = 60, py::arg("output") = "stats.csv", py::arg("verify") = false,
        "Runs a scene and writes the per-frame stats CSV; returns a summary dict.");

    m.def("parse_resolution", &parse_resolution, py::arg("text"));
    m.def(
        "max_nodes_probe",
        [](std::uint64_t binding_limit) {
            gpu::Limits lim;
            lim.max_storage_buffer_binding_size = binding_limit;
            if (lim.max_buffer_size < binding_limit) lim.max_buffer_size = binding_limit;
            const gpu::ProbeResult r = gpu::max_nodes_probe(lim);
            py::dict out;
            out["max_nodes"] = r.max_nodes;
            out["grid_side"] = r.grid_side;
            out["max_nodes_total"] = r.max_nodes_total;
            out["diagnostic"] = r.diagnostic;
            return out;
        },
        py::arg("binding_limit") = std::uint64_t{128} << 20);
}
