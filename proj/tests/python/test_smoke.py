"""End-to-end smoke tests for the cemperf Python module.

Small meshes only; the whole file should run in a few seconds. Numerical
depth lives in the C++ suites — here we check that the bindings round-trip
data faithfully and that the study drivers produce well-formed rows.
"""

import math

import pytest

import cemperf


def make_domain(disks=()):
    dom = cemperf.Domain()
    dom.disks = [cemperf.Disk(cx, cy, r) for cx, cy, r in disks]
    return dom


def test_version_string():
    major, minor, patch = cemperf.__version__.split(".")
    assert all(part.isdigit() for part in (major, minor, patch))


def test_generate_is_deterministic_in_the_seed():
    a = cemperf.generate_perforations(
        count=50, r_min=0.01, r_max=0.03, min_gap=0.025, seed=42
    )
    b = cemperf.generate_perforations(
        count=50, r_min=0.01, r_max=0.03, min_gap=0.025, seed=42
    )
    c = cemperf.generate_perforations(
        count=50, r_min=0.01, r_max=0.03, min_gap=0.025, seed=7
    )
    assert len(a.disks) == 50
    assert a.seed == 42
    assert a.to_json() == b.to_json()
    assert a.to_json() != c.to_json()


def test_domain_json_round_trip():
    dom = make_domain([(0.5, 0.5, 0.1), (0.25, 0.75, 0.05)])
    dom.seed = 11
    back = cemperf.Domain.from_json(dom.to_json())
    assert len(back.disks) == 2
    assert back.seed == 11
    assert back.disks[0].cx == pytest.approx(0.5)
    assert back.disks[1].r == pytest.approx(0.05)


def test_unperforated_mesh_counts():
    mesh = cemperf.triangulate(make_domain(), n=8)
    assert mesh.structured_n == 8
    assert mesh.n_nodes == 81
    assert mesh.n_triangles == 128
    assert mesh.area() == pytest.approx(1.0)
    counts = mesh.node_counts()
    assert counts["outer_dirichlet"] == 32
    assert counts["interior"] == 49
    assert counts["perforation_neumann"] == 0


def test_perforated_mesh_removes_triangles():
    mesh = cemperf.triangulate(make_domain([(0.5, 0.5, 0.1)]), n=32)
    assert mesh.n_triangles < 2 * 32 * 32
    assert mesh.area() < 1.0
    assert mesh.node_counts()["perforation_neumann"] > 0
    xs = [x for x, _ in mesh.nodes()]
    assert min(xs) == 0.0 and max(xs) == 1.0


def test_msh_round_trip_is_exact():
    mesh = cemperf.triangulate(make_domain([(0.5, 0.5, 0.1)]), n=16)
    text = cemperf.export_msh(mesh)
    back = cemperf.import_msh(text)
    assert back.n_nodes == mesh.n_nodes
    assert back.n_triangles == mesh.n_triangles
    assert back.structured_n == 16
    assert cemperf.export_msh(back) == text


def test_vtk_export_contains_fields():
    mesh = cemperf.triangulate(make_domain(), n=4)
    u = [0.0] * mesh.n_nodes
    text = cemperf.export_vtk(mesh, [("u", u)])
    assert text.startswith("# vtk DataFile Version")
    assert "SCALARS u float 1" in text


def test_fine_solve_on_perforated_mesh():
    mesh = cemperf.triangulate(make_domain([(0.5, 0.5, 0.1)]), n=32)
    source = cemperf.case1_source()
    assert len(source) == 4
    u = cemperf.solve_fine(mesh, source)
    assert len(u) == mesh.n_nodes
    assert all(math.isfinite(v) for v in u)
    # non-negative source, M-matrix discretization: discrete maximum principle
    assert min(u) >= -1e-12
    assert max(u) > 0.0


def test_convergence_study_rows():
    mesh = cemperf.triangulate(make_domain([(0.5, 0.5, 0.1)]), n=32)
    rows = cemperf.study_convergence(
        mesh, cemperf.case1_source(), bps_list=[4], m_list=[2], eigs=2
    )
    assert len(rows) == 2  # one per variant
    assert {row["variant"] for row in rows} == {"constraint", "relaxed"}
    for row in rows:
        assert set(row) == {
            "H",
            "m",
            "variant",
            "l",
            "e_L2",
            "e_H1",
            "n_fine_dofs",
            "n_ms_dofs",
            "wall_ms",
        }
        assert row["H"] == pytest.approx(0.25)
        assert row["m"] == 2
        assert row["l"] == 2
        assert 0.0 < row["e_L2"] < row["e_H1"] < 1.0
        assert 0 < row["n_ms_dofs"] < row["n_fine_dofs"]
        assert row["wall_ms"] >= 0.0


def test_decay_study_gaps_shrink():
    mesh = cemperf.triangulate(make_domain([(0.5, 0.5, 0.1)]), n=32)
    out = cemperf.study_decay(
        mesh, cemperf.case1_source(), bps=4, m_list=[1, 2], eigs=2,
        variant="constraint",
    )
    assert len(out["rows"]) == 2
    gaps = dict(out["max_basis_decay"])
    assert set(gaps) == {1, 2}
    assert gaps[2] < gaps[1]


def test_config_errors_raise_value_error():
    with pytest.raises(ValueError):
        cemperf.import_msh("this is not a mesh file")
    with pytest.raises(ValueError):
        cemperf.Domain.from_json("{not json")
    with pytest.raises(ValueError):
        cemperf.study_convergence(
            cemperf.triangulate(make_domain(), n=8),
            cemperf.case1_source(),
            bps_list=[4],
            m_list=[2],
            eigs=2,
            variant="sideways",
        )
