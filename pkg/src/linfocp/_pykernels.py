"""Pure-Python implementations of the hot kernels.

Same signatures and results as the compiled ``_kernels`` extension. Local
edge ``k`` of an element is the edge opposite its local vertex ``k``.
"""
import numpy as np

NAME = "python"


def close_marking(element_edges, refinement_edge, edge_elements, edge_marked):
    """Propagate edge marks until every element with a marked edge also has
    its refinement edge marked. Modifies ``edge_marked`` in place."""
    ee = element_edges.tolist()
    ref = refinement_edge.tolist()
    adj = edge_elements.tolist()
    marked = edge_marked.tolist()
    stack = [e for e, m in enumerate(marked) if m]
    while stack:
        e = stack.pop()
        for t in adj[e]:
            if t < 0:
                continue
            r = ee[t][ref[t]]
            if not marked[r]:
                marked[r] = 1
                stack.append(r)
    edge_marked[:] = marked


def bisect_elements(elements, refinement_edge, element_edges, edge_midpoint):
    """Split every element whose refinement edge carries a midpoint.

    Returns ``(elements, refinement_edge, parent)`` of the refined mesh.
    Children list the newest vertex last, so their refinement edge is 2.
    """
    el = elements.tolist()
    ref = refinement_edge.tolist()
    ee = element_edges.tolist()
    mid = edge_midpoint.tolist()
    out = []
    out_ref = []
    parent = []
    for t, v in enumerate(el):
        j = ref[t]
        m = mid[ee[t][j]]
        if m < 0:
            out.append(v)
            out_ref.append(j)
            parent.append(t)
            continue
        c = v[j]
        a = v[(j + 1) % 3]
        b = v[(j + 2) % 3]
        m1 = mid[ee[t][(j + 2) % 3]]  # edge (c, a)
        m2 = mid[ee[t][(j + 1) % 3]]  # edge (b, c)
        if m1 < 0:
            kids = [[c, a, m]]
        else:
            kids = [[m, c, m1], [a, m, m1]]
        if m2 < 0:
            kids.append([b, c, m])
        else:
            kids += [[m, b, m2], [c, m, m2]]
        out += kids
        out_ref += [2] * len(kids)
        parent += [t] * len(kids)
    return (np.array(out, dtype=np.int64).reshape(-1, 3),
            np.array(out_ref, dtype=np.int64),
            np.array(parent, dtype=np.int64))


def clamp_gap_sup(w, u, a, b):
    """Per-element sup of ``|clip(w, a, b) - u|`` for P1 nodal data ``w``, ``u``
    of shape (n, 3)."""
    w = np.asarray(w, dtype=float)
    u = np.asarray(u, dtype=float)
    best = np.abs(np.clip(w, a, b) - u).max(axis=1)
    for i, j in ((0, 1), (1, 2), (2, 0)):
        dw = w[:, j] - w[:, i]
        du = u[:, j] - u[:, i]
        nz = dw != 0.0
        safe = np.where(nz, dw, 1.0)
        for level in (a, b):
            s = (level - w[:, i]) / safe
            hit = nz & (s > 0.0) & (s < 1.0)
            gap = np.abs(level - (u[:, i] + s * du))
            best = np.where(hit, np.maximum(best, gap), best)
    return best
