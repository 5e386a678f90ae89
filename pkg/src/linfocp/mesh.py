"""Conforming triangle meshes with newest-vertex bisection.

Elements are vertex-index triples in counterclockwise order. Local edge ``k``
of an element joins its vertices ``k+1`` and ``k+2`` (mod 3), i.e. it is the
edge opposite local vertex ``k``; ``refinement_edge[t]`` is the local index of
the edge bisected next, so the vertex opposite it is the newest vertex.
"""
from dataclasses import dataclass, field
from functools import cached_property
import itertools

import numpy as np

from ._backend import kernels
from .errors import InputError, MeshStructureError

_LOCAL_EDGES = np.array([[1, 2], [2, 0], [0, 1]])
_generation = itertools.count()


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


def signed_areas(vertices, elements):
    x = vertices[elements]
    d1 = x[:, 1] - x[:, 0]
    d2 = x[:, 2] - x[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable conforming 2D simplicial mesh.

    Attributes
    ----------
    vertices : ndarray (nv, 2)
    elements : ndarray (ne, 3)
        Counterclockwise vertex indices.
    boundary : ndarray (nv,) of bool
        True for vertices incident to a boundary side.
    refinement_edge : ndarray (ne,)
        Local index of the edge bisected next.
    vertex_parents : ndarray (k, 2) or None
        For meshes produced by :func:`refine`: the edge endpoints of the ``k``
        vertices appended by that refinement (they are edge midpoints).
    element_parent : ndarray (ne,) or None
        Parent element index in the previous mesh.
    """

    vertices: np.ndarray
    elements: np.ndarray
    boundary: np.ndarray
    refinement_edge: np.ndarray
    vertex_parents: np.ndarray = None
    element_parent: np.ndarray = None
    mesh_id: int = field(default_factory=lambda: next(_generation))

    @classmethod
    def from_arrays(cls, vertices, elements, refinement_edge=None):
        """Build a mesh, deriving boundary flags and, if not given, the
        refinement edges (longest edge; ties go to the edge whose opposite
        vertex has the lowest global index)."""
        vertices = _frozen(vertices, np.float64)
        elements = _frozen(elements, np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise InputError("vertices must have shape (n, 2)", module="mesh")
        if elements.ndim != 2 or elements.shape[1] != 3:
            raise InputError("elements must have shape (n, 3)", module="mesh")
        if elements.size and (elements.min() < 0 or elements.max() >= len(vertices)):
            raise InputError("element vertex index out of range", module="mesh")
        area = signed_areas(vertices, elements)
        if np.any(area <= 0.0):
            bad = int(np.flatnonzero(area <= 0.0)[0])
            raise MeshStructureError(
                f"element {bad} has non-positive signed area {area[bad]:.3e}",
                module="mesh")
        if refinement_edge is None:
            refinement_edge = _longest_edge(vertices, elements)
        mesh = cls(vertices, elements, np.zeros(len(vertices), dtype=bool),
                   _frozen(refinement_edge, np.int64))
        flags = np.zeros(len(vertices), dtype=bool)
        flags[mesh.edge_vertices[mesh.edge_elements[:, 1] < 0].ravel()] = True
        object.__setattr__(mesh, "boundary", _frozen(flags, bool))
        return mesh

    def __repr__(self):
        return (f"Mesh(vertices={self.num_vertices}, elements={self.num_elements}, "
                f"id={self.mesh_id})")

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_elements(self):
        return len(self.elements)

    @cached_property
    def interior_vertices(self):
        return np.flatnonzero(~self.boundary)

    @cached_property
    def areas(self):
        return signed_areas(self.vertices, self.elements)

    @cached_property
    def edge_lengths(self):
        """(ne, 3) lengths of local edges."""
        x = self.vertices[self.elements]
        d = x[:, _LOCAL_EDGES[:, 1]] - x[:, _LOCAL_EDGES[:, 0]]
        return np.hypot(d[..., 0], d[..., 1])

    @cached_property
    def diameters(self):
        """h_T, the longest edge of each element."""
        return self.edge_lengths.max(axis=1)

    @cached_property
    def centroids(self):
        return self.vertices[self.elements].mean(axis=1)

    def min_angle(self):
        """Smallest interior angle over all elements, in radians."""
        L = self.edge_lengths
        cos = np.empty_like(L)
        for k in range(3):
            a, b, c = L[:, k], L[:, (k + 1) % 3], L[:, (k + 2) % 3]
            cos[:, k] = (b * b + c * c - a * a) / (2.0 * b * c)
        return float(np.arccos(np.clip(cos, -1.0, 1.0)).min())

    @cached_property
    def _edges(self):
        ne, nv = self.num_elements, self.num_vertices
        pairs = self.elements[:, _LOCAL_EDGES]
        lo = pairs.min(axis=2).ravel()
        hi = pairs.max(axis=2).ravel()
        keys, inverse, counts = np.unique(lo * nv + hi, return_inverse=True,
                                          return_counts=True)
        if counts.size and counts.max() > 2:
            raise MeshStructureError("an edge is shared by more than two elements",
                                     module="mesh")
        edge_vertices = np.column_stack([keys // nv, keys % nv])
        order = np.argsort(inverse, kind="stable")
        start = np.cumsum(counts) - counts
        edge_elements = np.full((len(keys), 2), -1, dtype=np.int64)
        edge_elements[:, 0] = order[start] // 3
        two = counts == 2
        edge_elements[two, 1] = order[start[two] + 1] // 3
        return (_frozen(edge_vertices, np.int64),
                _frozen(inverse.reshape(ne, 3), np.int64),
                _frozen(edge_elements, np.int64))

    @property
    def edge_vertices(self):
        """(nE, 2) sorted vertex pairs of all edges."""
        return self._edges[0]

    @property
    def element_edges(self):
        """(ne, 3) global edge index of each local edge."""
        return self._edges[1]

    @property
    def edge_elements(self):
        """(nE, 2) adjacent elements, -1 in the second slot on the boundary."""
        return self._edges[2]


def _longest_edge(vertices, elements):
    x = vertices[elements]
    d = x[:, _LOCAL_EDGES[:, 1]] - x[:, _LOCAL_EDGES[:, 0]]
    length = np.hypot(d[..., 0], d[..., 1])
    tied = length >= length.max(axis=1, keepdims=True) * (1.0 - 1e-12)
    opposite = np.where(tied, elements, np.iinfo(np.int64).max)
    return opposite.argmin(axis=1)


@dataclass(frozen=True, eq=False)
class SideTable:
    """Interior sides of a mesh.

    ``element_sides[t, k]`` is the side index of local edge ``k`` of element
    ``t``, or -1 when that edge lies on the boundary.
    """

    sides: np.ndarray
    neighbors: np.ndarray
    element_sides: np.ndarray
    side_length: np.ndarray

    @property
    def num_sides(self):
        return len(self.sides)


def build_side_table(mesh):
    """Collect all interior sides of ``mesh`` with their two neighbours."""
    interior = mesh.edge_elements[:, 1] >= 0
    side_of_edge = np.full(len(interior), -1, dtype=np.int64)
    side_of_edge[interior] = np.arange(interior.sum())
    sides = mesh.edge_vertices[interior]
    d = mesh.vertices[sides[:, 1]] - mesh.vertices[sides[:, 0]]
    return SideTable(sides=_frozen(sides, np.int64),
                     neighbors=_frozen(mesh.edge_elements[interior], np.int64),
                     element_sides=_frozen(side_of_edge[mesh.element_edges], np.int64),
                     side_length=_frozen(np.hypot(d[:, 0], d[:, 1]), np.float64))


def element_patch(mesh, side_table, t):
    """Elements sharing an interior side with element ``t`` (``t`` included
    whenever it has an interior side)."""
    if not 0 <= t < mesh.num_elements:
        raise InputError(f"element index {t} out of range", module="mesh")
    sides = side_table.element_sides[t]
    sides = sides[sides >= 0]
    return set(side_table.neighbors[sides].ravel().tolist())


def patch_reduce(mesh, side_table, values, how="max"):
    """Reduce per-element ``values`` over each patch N_T (``"max"`` or ``"sum"``).

    Elements without interior sides have an empty patch and get 0.
    """
    values = np.asarray(values, dtype=float)
    nbr = side_table.element_sides
    has_side = (nbr >= 0).any(axis=1)
    # other neighbour across each local edge, or -1
    other = np.full(nbr.shape, -1, dtype=np.int64)
    for k in range(3):
        s = nbr[:, k]
        ok = s >= 0
        pair = side_table.neighbors[s[ok]]
        me = np.flatnonzero(ok)
        other[ok, k] = np.where(pair[:, 0] == me, pair[:, 1], pair[:, 0])
    vals = np.where(other >= 0, values[np.maximum(other, 0)], 0.0)
    own = np.where(has_side, values, 0.0)
    if how == "max":
        out = np.maximum(own, vals.max(axis=1))
        return np.where(has_side, out, 0.0)
    if how == "sum":
        return own + vals.sum(axis=1)
    raise InputError(f"unknown reduction {how!r}", module="mesh")


def refine(mesh, marked):
    """Newest-vertex bisection of the marked elements plus conforming closure.

    Returns a new :class:`Mesh`; an empty marking returns ``mesh`` itself.
    """
    marked = np.unique(np.asarray(list(marked), dtype=np.int64))
    if marked.size == 0:
        return mesh
    if marked[0] < 0 or marked[-1] >= mesh.num_elements:
        raise InputError("marked element index out of range", module="mesh")
    ee = mesh.element_edges
    ref = mesh.refinement_edge
    edge_marked = np.zeros(len(mesh.edge_vertices), dtype=np.uint8)
    edge_marked[ee[marked, ref[marked]]] = 1
    kernels.close_marking(ee, ref, mesh.edge_elements, edge_marked)

    split = np.flatnonzero(edge_marked)
    nv = mesh.num_vertices
    edge_midpoint = np.full(len(edge_marked), -1, dtype=np.int64)
    edge_midpoint[split] = nv + np.arange(len(split))
    parents = mesh.edge_vertices[split]
    midpoints = 0.5 * (mesh.vertices[parents[:, 0]] + mesh.vertices[parents[:, 1]])
    on_boundary = mesh.edge_elements[split, 1] < 0

    elements, new_ref, parent = kernels.bisect_elements(
        mesh.elements, ref, ee, edge_midpoint)
    return Mesh(vertices=_frozen(np.vstack([mesh.vertices, midpoints]), np.float64),
                elements=_frozen(elements, np.int64),
                boundary=_frozen(np.concatenate([mesh.boundary, on_boundary]), bool),
                refinement_edge=_frozen(new_ref, np.int64),
                vertex_parents=_frozen(parents, np.int64),
                element_parent=_frozen(parent, np.int64))


def refine_uniform(mesh, times=1):
    for _ in range(times):
        mesh = refine(mesh, range(mesh.num_elements))
    return mesh


def prolongate(mesh, values):
    """Carry nodal P1 values from the parent mesh to ``mesh`` (midpoints get
    the mean of their edge endpoints)."""
    values = np.asarray(values, dtype=float)
    if mesh.vertex_parents is None:
        raise InputError("mesh has no refinement history", module="mesh")
    new = 0.5 * (values[mesh.vertex_parents[:, 0]] + values[mesh.vertex_parents[:, 1]])
    return np.concatenate([values, new])


def _squares_crisscross(corners):
    """Split each unit square (lower-left corner) into 4 triangles through its
    centre."""
    vertices = {}

    def vid(p):
        return vertices.setdefault(p, len(vertices))

    elements = []
    for x0, y0 in corners:
        ring = [(x0, y0), (x0 + 1.0, y0), (x0 + 1.0, y0 + 1.0), (x0, y0 + 1.0)]
        ids = [vid(p) for p in ring]
        c = vid((x0 + 0.5, y0 + 0.5))
        for k in range(4):
            elements.append((ids[k], ids[(k + 1) % 4], c))
    return Mesh.from_arrays(np.array(list(vertices), dtype=float), elements)


def initial_lshape_mesh():
    """The L-shaped domain (-1,1)^2 minus [0,1)x(-1,0] as 12 congruent right
    triangles (three unit squares, each cut through its centre)."""
    return _squares_crisscross([(-1.0, -1.0), (-1.0, 0.0), (0.0, 0.0)])


def unit_square_mesh():
    """(0,1)^2 split into 4 triangles through the centre."""
    return _squares_crisscross([(0.0, 0.0)])
