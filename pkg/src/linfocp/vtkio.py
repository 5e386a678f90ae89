"""Legacy ASCII VTK export of triangle meshes with point and cell scalars."""
import os
import tempfile

import numpy as np

from .errors import InputError, LinfOcpError

VTK_TRIANGLE = 5


class VtkWriteError(LinfOcpError, OSError):
    module = "vtk"


def _scalars(kind, fields, count):
    out = []
    if not fields:
        return out
    out.append(f"{kind} {count}")
    for name, values in fields.items():
        values = np.asarray(values, dtype=float)
        if values.shape != (count,):
            raise InputError(f"{kind.lower()} field {name!r} has shape {values.shape}, "
                             f"expected ({count},)", module="vtk")
        out.append(f"SCALARS {name} double 1")
        out.append("LOOKUP_TABLE default")
        out.extend(repr(float(v)) for v in values)
    return out


def export_vtk(mesh, path, point_data=None, cell_data=None, title="linfocp mesh"):
    """Write ``mesh`` as DATASET UNSTRUCTURED_GRID with triangle cells.

    ``point_data`` / ``cell_data`` map names to per-vertex / per-element arrays.
    """
    nv, ne = mesh.num_vertices, mesh.num_elements
    lines = ["# vtk DataFile Version 3.0", title, "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {nv} double"]
    lines.extend(f"{x!r} {y!r} 0.0" for x, y in mesh.vertices.tolist())
    lines.append(f"CELLS {ne} {4 * ne}")
    lines.extend(f"3 {a} {b} {c}" for a, b, c in mesh.elements.tolist())
    lines.append(f"CELL_TYPES {ne}")
    lines.extend([str(VTK_TRIANGLE)] * ne)
    lines += _scalars("POINT_DATA", point_data, nv)
    lines += _scalars("CELL_DATA", cell_data, ne)
    path = os.fspath(path)
    try:
        directory = os.path.dirname(os.path.abspath(path))
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".mesh-", suffix=".tmp")
        with os.fdopen(fd, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        os.replace(tmp, path)
    except OSError as exc:
        raise VtkWriteError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path
