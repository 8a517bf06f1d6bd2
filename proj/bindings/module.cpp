// Python bindings for the main operations: domain generation, meshing,
// fine/multiscale solves, and the two study drivers. Heavier artifacts
// (VTK/MSH payloads) travel as strings so the module has no file-format
// dependencies on the Python side.

#include "cemperf/errors.hpp"
#include "cemperf/fem.hpp"
#include "cemperf/geometry.hpp"
#include "cemperf/ms_solver.hpp"
#include "cemperf/msh_io.hpp"
#include "cemperf/run_config.hpp"
#include "cemperf/vtk_io.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <utility>
#include <vector>

namespace py = pybind11;
using namespace cemperf;

namespace {

std::vector<double> realize_source(const TriMesh& mesh,
                                   const std::vector<SourceRect>& rects) {
    return source_field(mesh, rects);
}

py::dict row_to_dict(const StudyRow& row) {
    py::dict d;
    d["H"] = 1.0 / row.bps;
    d["m"] = row.m;
    d["variant"] = variant_name(row.variant);
    d["l"] = row.l;
    d["e_L2"] = row.e_L2;
    d["e_H1"] = row.e_H1;
    d["n_fine_dofs"] = row.n_fine_dofs;
    d["n_ms_dofs"] = row.n_ms_dofs;
    d["wall_ms"] = row.wall_ms;
    return d;
}

py::list rows_to_list(const std::vector<StudyRow>& rows) {
    py::list out;
    for (const StudyRow& row : rows)
        out.append(row_to_dict(row));
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Multiscale (CEM-GMsFEM) Poisson solver on perforated unit squares";
    m.attr("__version__") = kCodeVersion;

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p)
                std::rethrow_exception(p);
        } catch (const InvalidArgument& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const ParseError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const UnsupportedVersion& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const MissingTags& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const NonNested& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        }
        // remaining cemperf::Error types derive std::runtime_error and map
        // to RuntimeError through pybind11's default translator
    });

    py::class_<Disk>(m, "Disk")
        .def(py::init([](double cx, double cy, double r) {
                 return Disk{cx, cy, r};
             }),
             py::arg("cx"), py::arg("cy"), py::arg("r"))
        .def_readwrite("cx", &Disk::cx)
        .def_readwrite("cy", &Disk::cy)
        .def_readwrite("r", &Disk::r)
        .def("__repr__", [](const Disk& d) {
            return "Disk(cx=" + std::to_string(d.cx) + ", cy=" + std::to_string(d.cy) +
                   ", r=" + std::to_string(d.r) + ")";
        });

    py::class_<DomainSpec>(m, "Domain")
        .def(py::init<>())
        .def_readwrite("disks", &DomainSpec::disks)
        .def_readwrite("seed", &DomainSpec::seed)
        .def_readwrite("allow_boundary_clip", &DomainSpec::allow_boundary_clip)
        .def("to_json", &DomainSpec::to_json)
        .def_static("from_json", &DomainSpec::from_json, py::arg("text"));

    m.def("generate_perforations", &generate_perforations, py::arg("count"),
          py::arg("r_min"), py::arg("r_max"), py::arg("min_gap"), py::arg("seed"),
          "Draw non-overlapping disks uniformly inside the unit square; "
          "deterministic in the seed.");

    py::class_<TriMesh>(m, "Mesh")
        .def_property_readonly(
            "n_nodes", [](const TriMesh& mesh) { return mesh.nodes.size(); })
        .def_property_readonly(
            "n_triangles", [](const TriMesh& mesh) { return mesh.triangles.size(); })
        .def_readonly("structured_n", &TriMesh::structured_n)
        .def("nodes",
             [](const TriMesh& mesh) {
                 std::vector<std::pair<double, double>> out;
                 out.reserve(mesh.nodes.size());
                 for (const Vec2& p : mesh.nodes)
                     out.emplace_back(p.x, p.y);
                 return out;
             })
        .def("triangles", [](const TriMesh& mesh) { return mesh.triangles; })
        .def("area",
             [](const TriMesh& mesh) {
                 double area = 0.0;
                 for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
                     area += mesh.triangle_area(int(t));
                 return area;
             })
        .def("node_counts", [](const TriMesh& mesh) {
            py::dict d;
            d["interior"] = mesh.node_count(NodeTag::Interior);
            d["outer_dirichlet"] = mesh.node_count(NodeTag::OuterDirichlet);
            d["perforation_neumann"] = mesh.node_count(NodeTag::PerforationNeumann);
            return d;
        });

    m.def("triangulate", &triangulate, py::arg("domain"), py::arg("n"),
          "Structured staircase triangulation of the perforated unit square.");
    m.def("export_msh", &export_msh, py::arg("mesh"),
          "Mesh as a Gmsh MSH 2.2 ASCII payload.");
    m.def("import_msh", &import_msh, py::arg("text"),
          "Parse a Gmsh MSH 2.2 ASCII payload.");
    m.def(
        "export_vtk",
        [](const TriMesh& mesh,
           const std::vector<std::pair<std::string, std::vector<double>>>& fields) {
            return export_vtk(mesh, fields);
        },
        py::arg("mesh"), py::arg("fields"),
        "Mesh plus named nodal scalar fields as legacy-VTK ASCII text.");

    py::class_<SourceRect>(m, "SourceRect")
        .def(py::init([](double x0, double y0, double x1, double y1, double value) {
                 return SourceRect{x0, y0, x1, y1, value};
             }),
             py::arg("x0"), py::arg("y0"), py::arg("x1"), py::arg("y1"),
             py::arg("value"))
        .def_readwrite("x0", &SourceRect::x0)
        .def_readwrite("y0", &SourceRect::y0)
        .def_readwrite("x1", &SourceRect::x1)
        .def_readwrite("y1", &SourceRect::y1)
        .def_readwrite("value", &SourceRect::value);

    m.def("case1_source", &case1_source,
          "The four-square benchmark source (value 1 on [0.1,0.3]^2 and its "
          "mirror images).");

    m.def(
        "solve_fine",
        [](const TriMesh& mesh, const std::vector<SourceRect>& source, double tol) {
            return solve_fine(mesh, realize_source(mesh, source), tol);
        },
        py::arg("mesh"), py::arg("source"), py::arg("tol") = 1e-10,
        "Fine-scale reference solution (per-node values; Dirichlet nodes 0).");

    m.def(
        "study_convergence",
        [](const TriMesh& mesh, const std::vector<SourceRect>& source,
           const std::vector<int>& bps_list, const std::vector<int>& m_list, int eigs,
           const std::string& variant, int threads, double fine_tol) {
            const StudySchedule schedule{bps_list, m_list};
            return rows_to_list(convergence_study(mesh, realize_source(mesh, source),
                                                  schedule, eigs,
                                                  parse_variants(variant), threads,
                                                  fine_tol));
        },
        py::arg("mesh"), py::arg("source"), py::arg("bps_list"), py::arg("m_list"),
        py::arg("eigs") = 3, py::arg("variant") = "both", py::arg("threads") = 1,
        py::arg("fine_tol") = 1e-10,
        "Multiscale errors against the fine reference over an (H, m) schedule; "
        "one row dict per (H, variant).");

    m.def(
        "study_decay",
        [](const TriMesh& mesh, const std::vector<SourceRect>& source, int bps,
           const std::vector<int>& m_list, int eigs, const std::string& variant,
           int threads, double fine_tol) {
            const DecayStudyResult result =
                decay_study(mesh, realize_source(mesh, source), bps, eigs,
                            parse_variants(variant), m_list, threads, fine_tol);
            py::dict out;
            out["rows"] = rows_to_list(result.rows);
            out["max_basis_decay"] = result.max_basis_decay;
            return out;
        },
        py::arg("mesh"), py::arg("source"), py::arg("bps"), py::arg("m_list"),
        py::arg("eigs") = 3, py::arg("variant") = "both", py::arg("threads") = 1,
        py::arg("fine_tol") = 1e-10,
        "Errors at fixed H for increasing oversampling m, plus the worst "
        "relative localization gap per m.");
}
