"""Multiscale (CEM-GMsFEM) Poisson solver on perforated unit squares.

Thin Python veneer over the compiled ``_core`` module: domain generation,
staircase meshing, the fine reference solver, and the convergence/decay
study drivers. File formats (MSH 2.2, legacy VTK) travel as strings.
"""

try:
    from ._core import (  # noqa: F401  (installed package layout)
        Disk,
        Domain,
        Mesh,
        SourceRect,
        __version__,
        case1_source,
        export_msh,
        export_vtk,
        generate_perforations,
        import_msh,
        solve_fine,
        study_convergence,
        study_decay,
        triangulate,
    )
except ImportError:  # pragma: no cover - build-tree layout (module beside package)
    from _core import (  # noqa: F401
        Disk,
        Domain,
        Mesh,
        SourceRect,
        __version__,
        case1_source,
        export_msh,
        export_vtk,
        generate_perforations,
        import_msh,
        solve_fine,
        study_convergence,
        study_decay,
        triangulate,
    )

__all__ = [
    "Disk",
    "Domain",
    "Mesh",
    "SourceRect",
    "__version__",
    "case1_source",
    "export_msh",
    "export_vtk",
    "generate_perforations",
    "import_msh",
    "solve_fine",
    "study_convergence",
    "study_decay",
    "triangulate",
]
