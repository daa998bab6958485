"""Exact polyhedral Lagrangian cycles of max-affine convex functions.

For f(x) = max_i (a_i . x + b_i) the graph of the subdifferential decomposes
into product cells C x P: a face C of the max-affine subdivision of x-space
paired with the polytope P = conv{a_i : i active on C}, with
dim C + dim P = n.  Cells are computed exactly over the rationals for
n <= 2, which covers the whole evaluation battery; the construction raises
for larger n.

Orientation: the subdifferential graph is parametrized by the Minty map
z -> (prox_f(z), z - prox_f(z)), which sends the cell {x + y : x in C, y in P}
onto C x P.  Transporting the standard orientation of z-space gives each
parametrized product simplex the sign of det [U | W], where U and W are the
x- and y-frames; that sign is what the evaluators use.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .coefficients import BoxT, CoefficientFn, SupportError
from .convex import MaxAffine, PiecewiseLinear1D
from .forms import Form
from .polynomials import Poly, Q, _as_fraction
from .quadrature import _leggauss


class WindowTooSmall(ValueError):
    pass


class DegenerateConfiguration(ValueError):
    pass


# -- exact 2D polygon helpers ---------------------------------------------------

Point = tuple  # tuple[Fraction, ...]


def _dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def clip_halfplane(poly: list, a: Sequence[Fraction], c: Fraction) -> list:
    """Sutherland-Hodgman step keeping {x : a.x <= c}; exact arithmetic."""
    if not poly:
        return []
    out = []
    m = len(poly)
    for i in range(m):
        p, q = poly[i], poly[(i + 1) % m]
        dp, dq = _dot(a, p) - c, _dot(a, q) - c
        if dp <= 0:
            out.append(p)
        if (dp < 0 < dq) or (dq < 0 < dp):
            t = dp / (dp - dq)
            out.append(tuple(pi + t * (qi - pi) for pi, qi in zip(p, q)))
    # drop consecutive duplicates
    dedup = []
    for v in out:
        if not dedup or v != dedup[-1]:
            dedup.append(v)
    if len(dedup) > 1 and dedup[0] == dedup[-1]:
        dedup.pop()
    return dedup


def polygon_area2(poly: list) -> Fraction:
    """Twice the signed area."""
    s = Q(0)
    m = len(poly)
    for i in range(m):
        p, q = poly[i], poly[(i + 1) % m]
        s += p[0] * q[1] - p[1] * q[0]
    return s


def convex_hull(points: list) -> list:
    """Monotone chain; returns ccw hull without repeated endpoint."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2:
                o, a = out[-2], out[-1]
                cross = (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0])
                if cross <= 0:
                    out.pop()
                else:
                    break
            out.append(p)
        return out

    lower = half(pts)
    upper = half(list(reversed(pts)))
    return lower[:-1] + upper[:-1]


def polygon_line_chord(poly: list, a, c) -> Optional[tuple]:
    """Endpoints of (convex polygon) intersect {a.x = c}, or None."""
    hits = []
    m = len(poly)
    for i in range(m):
        p, q = poly[i], poly[(i + 1) % m]
        dp, dq = _dot(a, p) - c, _dot(a, q) - c
        if dp == 0:
            hits.append(p)
        if (dp < 0 < dq) or (dq < 0 < dp):
            t = dp / (dp - dq)
            hits.append(tuple(pi + t * (qi - pi) for pi, qi in zip(p, q)))
    if not hits:
        return None
    d = (-a[1], a[0])
    hits.sort(key=lambda v: _dot(d, v))
    lo, hi = hits[0], hits[-1]
    if lo == hi:
        return (lo, lo)
    return (lo, hi)


# -- piece pruning -----------------------------------------------------------------


def prune_dominated_pieces(pieces: list) -> list:
    """Drop pieces that never strictly exceed the maximum of the others.

    Exact Caratheodory test: piece i is dominated iff a_i is a convex
    combination of at most n+1 other gradients whose matching combination of
    offsets is >= b_i.
    """
    n = len(pieces[0][0])
    keep = []
    for i, (ai, bi) in enumerate(pieces):
        others = [p for j, p in enumerate(pieces) if j != i]
        if not _dominated(ai, bi, others, n):
            keep.append((ai, bi))
    return keep if keep else [pieces[0]]


def _dominated(ai, bi, others, n) -> bool:
    from itertools import combinations

    for r in range(1, n + 2):
        for combo in combinations(others, r):
            sol = _convex_combo(ai, [a for a, _ in combo])
            if sol is None:
                continue
            val = sum(lam * b for lam, (_, b) in zip(sol, combo))
            if val >= bi:
                return True
    return False


def _convex_combo(target, gradients) -> Optional[list]:
    """Solve sum lam_j g_j = target, sum lam_j = 1, lam >= 0 exactly."""
    n = len(target)
    r = len(gradients)
    rows = []
    for k in range(n):
        rows.append([g[k] for g in gradients] + [target[k]])
    rows.append([Q(1)] * r + [Q(1)])
    # Gaussian elimination on the r unknowns
    m = len(rows)
    pivots = []
    row = 0
    for col in range(r):
        piv = next((s for s in range(row, m) if rows[s][col] != 0), None)
        if piv is None:
            continue
        rows[row], rows[piv] = rows[piv], rows[row]
        pv = rows[row][col]
        rows[row] = [v / pv for v in rows[row]]
        for s in range(m):
            if s != row and rows[s][col] != 0:
                f = rows[s][col]
                rows[s] = [v - f * w for v, w in zip(rows[s], rows[row])]
        pivots.append(col)
        row += 1
    for s in range(row, m):
        if rows[s][-1] != 0:
            return None  # inconsistent
    if row < r:
        return None  # underdetermined; a smaller subset will be tried
    lam = [Q(0)] * r
    for s, col in enumerate(pivots):
        lam[col] = rows[s][-1]
    if any(v < 0 for v in lam):
        return None
    return lam


# -- cell structure ------------------------------------------------------------------


@dataclass
class Cell:
    """Product cell C x P with provenance.

    ``x_vertices``: vertices of C (point / segment / ccw polygon).
    ``y_vertices``: vertices of P likewise.
    ``clipped``: True when C was truncated by the window.
    """

    dim_x: int
    x_vertices: list
    y_vertices: list
    active: tuple
    clipped: bool = False

    @property
    def dim_y(self) -> int:
        return min(len(self.y_vertices) - 1, 2)


@dataclass
class PolyhedralLagrangianCycle:
    n: int
    f: MaxAffine
    window: BoxT
    cells: list = field(default_factory=list)
    perturbed: bool = False

    def vertical_radius(self) -> float:
        return max(math.sqrt(float(sum(v * v for v in a))) for a, _ in self.f.pieces)

    def dump(self) -> dict:
        return {
            "n": self.n,
            "window": [[str(lo), str(hi)] for lo, hi in self.window],
            "perturbed": self.perturbed,
            "pieces": [[[str(v) for v in a], str(b)] for a, b in self.f.pieces],
            "cells": [
                {
                    "dim_x": c.dim_x,
                    "x_vertices": [[str(v) for v in p] for p in c.x_vertices],
                    "y_vertices": [[str(v) for v in p] for p in c.y_vertices],
                    "active": list(c.active),
                    "clipped": c.clipped,
                    "orientation": cell_orientation(c),
                }
                for c in self.cells
            ],
        }

    def dump_json(self) -> str:
        return json.dumps(self.dump(), indent=2, sort_keys=True)


def default_window(f: MaxAffine, pad=1) -> BoxT:
    """Box containing the subdivision's vertex structure, inflated."""
    n = f.n
    pts: list[Point] = [tuple(Q(0) for _ in range(n))]
    pieces = f.pieces
    if n == 1:
        for (a1, b1), (a2, b2) in _pairs(pieces):
            if a1[0] != a2[0]:
                pts.append(((b2 - b1) / (a1[0] - a2[0]),))
    else:
        lines = []
        for (a1, b1), (a2, b2) in _pairs(pieces):
            nvec = (a1[0] - a2[0], a1[1] - a2[1])
            if nvec == (Q(0), Q(0)):
                continue
            c = b2 - b1
            lines.append((nvec, c))
            # foot of the perpendicular from the origin
            den = nvec[0] ** 2 + nvec[1] ** 2
            pts.append((c * nvec[0] / den, c * nvec[1] / den))
        for (n1, c1), (n2, c2) in _pairs(lines):
            det = n1[0] * n2[1] - n1[1] * n2[0]
            if det != 0:
                pts.append(((c1 * n2[1] - c2 * n1[1]) / det,
                            (n1[0] * c2 - n2[0] * c1) / det))
    pad = _as_fraction(pad)
    box = []
    for k in range(n):
        vals = [p[k] for p in pts]
        box.append((min(vals) - pad, max(vals) + pad))
    return tuple(box)


def _pairs(seq):
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            yield seq[i], seq[j]


def window_for(f: MaxAffine, support: Optional[BoxT], pad=1) -> BoxT:
    """Window covering both the kink structure of f and a form's support."""
    base = default_window(f, pad)
    if support is None:
        return base
    return tuple((min(bl, sl), max(bh, sh))
                 for (bl, bh), (sl, sh) in zip(base, support))


def build_polyhedral(f: MaxAffine, window: Optional[BoxT] = None,
                     _perturbed: bool = False) -> PolyhedralLagrangianCycle:
    """Enumerate the cells of the subdifferential graph inside a window."""
    if f.n == 1:
        return _build_1d_cells(f, window, _perturbed)
    if f.n == 2:
        try:
            return _build_2d_cells(f, window, _perturbed)
        except DegenerateConfiguration:
            if _perturbed:
                raise
            g = MaxAffine([(a, b + Q(ix + 1, 10 ** 9)) for ix, (a, b) in enumerate(f.pieces)],
                          prune=True)
            return build_polyhedral(g, window, _perturbed=True)
    raise NotImplementedError(
        "polyhedral construction is implemented for n <= 2; "
        "smooth approximation covers higher dimensions")


def _build_1d_cells(f: MaxAffine, window, perturbed) -> PolyhedralLagrangianCycle:
    pwl = PiecewiseLinear1D.from_max_affine(f)
    window = window or default_window(f)
    lo, hi = window[0]
    slope_to_piece = {a[0]: idx for idx, (a, b) in enumerate(f.pieces)}
    cells = []
    cuts = [b for b in pwl.breaks if lo < b < hi]
    if any(not lo < b < hi for b in pwl.breaks):
        raise WindowTooSmall("window misses part of the kink structure")
    xs = [lo] + cuts + [hi]
    for i, s in enumerate(pwl.slopes):
        seg = (xs[i],), (xs[i + 1],)
        cells.append(Cell(1, [seg[0], seg[1]], [(s,)],
                          active=(slope_to_piece[s],),
                          clipped=(i == 0 or i == len(pwl.slopes) - 1)))
    for b, sl, sr in pwl.kinks():
        cells.append(Cell(0, [(b,)], [(sl,), (sr,)],
                          active=(slope_to_piece[sl], slope_to_piece[sr])))
    return PolyhedralLagrangianCycle(1, f, window, cells, perturbed)


def _build_2d_cells(f: MaxAffine, window, perturbed) -> PolyhedralLagrangianCycle:
    n = 2
    window = window or default_window(f)
    (x0, x1), (y0, y1) = window
    wpoly = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    pieces = f.pieces
    m = len(pieces)

    regions = []
    for i, (ai, bi) in enumerate(pieces):
        poly = wpoly
        for j, (aj, bj) in enumerate(pieces):
            if j == i:
                continue
            nvec = (aj[0] - ai[0], aj[1] - ai[1])
            poly = clip_halfplane(poly, nvec, bi - bj)
            if not poly:
                break
        if len(poly) >= 3 and polygon_area2(poly) > 0:
            regions.append((i, poly))
        else:
            raise WindowTooSmall(f"piece {i} is never active inside the window")

    cells = [Cell(2, poly, [pieces[i][0]], active=(i,), clipped=True)
             for i, poly in regions]

    # edges: pairs of regions meeting along the equality line
    region_by_piece = dict(regions)
    edges = []
    for i, j in _pairs(range(m)):
        if i not in region_by_piece or j not in region_by_piece:
            continue
        ai, bi = pieces[i]
        aj, bj = pieces[j]
        nvec = (aj[0] - ai[0], aj[1] - ai[1])
        c = bi - bj
        ch1 = polygon_line_chord(region_by_piece[i], nvec, c)
        ch2 = polygon_line_chord(region_by_piece[j], nvec, c)
        if ch1 is None or ch2 is None:
            continue
        d = (-nvec[1], nvec[0])
        lo = max(_dot(d, ch1[0]), _dot(d, ch2[0]))
        hi = min(_dot(d, ch1[1]), _dot(d, ch2[1]))
        if hi <= lo:
            continue
        p_lo = _point_on_line(nvec, c, d, lo)
        p_hi = _point_on_line(nvec, c, d, hi)
        mid = tuple((u + v) / 2 for u, v in zip(p_lo, p_hi))
        act = _active_set(pieces, mid)
        if len(act) != 2:
            raise DegenerateConfiguration(
                f"{len(act)} pieces active along an edge; offsets will be perturbed")
        # Lagrangian pairing: the edge direction is orthogonal to a_j - a_i
        assert _dot((p_hi[0] - p_lo[0], p_hi[1] - p_lo[1]), nvec) == 0
        edges.append(Cell(1, [p_lo, p_hi], [pieces[i][0], pieces[j][0]],
                          active=(i, j),
                          clipped=_on_window_boundary(p_lo, window)
                          or _on_window_boundary(p_hi, window)))
    cells.extend(edges)

    # vertices: interior endpoints of edges
    vert_pts = {}
    for e in edges:
        for p in e.x_vertices:
            if not _on_window_boundary(p, window):
                vert_pts[p] = True
    for p in vert_pts:
        act = _active_set(pieces, p)
        if len(act) < 3:
            continue  # collinear contact of two regions, not a vertex of the fan
        hull = convex_hull([pieces[i][0] for i in act])
        if len(hull) < 3:
            raise DegenerateConfiguration(
                "active gradients at a vertex are collinear; offsets will be perturbed")
        cells.append(Cell(0, [p], hull, active=tuple(act)))
    return PolyhedralLagrangianCycle(2, f, window, cells, perturbed)


def _point_on_line(nvec, c, d, param):
    # solve nvec.x = c, d.x = param  (d orthogonal to nvec)
    det = nvec[0] * d[1] - nvec[1] * d[0]
    x = (c * d[1] - param * nvec[1]) / det
    y = (nvec[0] * param - d[0] * c) / det
    return (x, y)


def _active_set(pieces, x) -> list:
    vals = [_dot(a, x) + b for a, b in pieces]
    top = max(vals)
    return [i for i, v in enumerate(vals) if v == top]


def _on_window_boundary(p, window) -> bool:
    return any(p[k] == lo or p[k] == hi for k, (lo, hi) in enumerate(window))


# -- triangulation ---------------------------------------------------------------------


def _triangulate(vertices: list, dim: int) -> list:
    """Split a point/segment/convex polygon into simplices (pulling fan)."""
    if dim == 0:
        return [(vertices[0],)]
    if dim == 1:
        return [(vertices[0], vertices[1])]
    base = min(vertices)
    k = vertices.index(base)
    ring = vertices[k:] + vertices[:k]
    return [(ring[0], ring[i], ring[i + 1]) for i in range(1, len(ring) - 1)]


def _clip_to_box(vertices: list, dim: int, box: BoxT) -> tuple[list, int]:
    """Clip a cell's x-polytope to a coefficient window."""
    n = len(vertices[0])
    if dim == 0:
        p = vertices[0]
        inside = all(lo <= p[k] <= hi for k, (lo, hi) in enumerate(box[:n]))
        return ([p] if inside else [], 0)
    if dim == 1:
        p, q = vertices
        t0, t1 = Q(0), Q(1)
        for k, (lo, hi) in enumerate(box[:n]):
            dpq = q[k] - p[k]
            if dpq == 0:
                if not lo <= p[k] <= hi:
                    return ([], 1)
                continue
            ta = (lo - p[k]) / dpq
            tb = (hi - p[k]) / dpq
            if ta > tb:
                ta, tb = tb, ta
            t0, t1 = max(t0, ta), min(t1, tb)
        if t1 <= t0:
            return ([], 1)
        pt = lambda t: tuple(pi + t * (qi - pi) for pi, qi in zip(p, q))
        return ([pt(t0), pt(t1)], 1)
    poly = vertices
    for k, (lo, hi) in enumerate(box[:n]):
        e = [Q(0)] * n
        e[k] = Q(1)
        poly = clip_halfplane(poly, tuple(e), hi)
        e[k] = Q(-1)
        poly = clip_halfplane(poly, tuple(e), -lo)
        if not poly:
            return ([], 2)
    if len(poly) < 3 or polygon_area2(poly) <= 0:
        return ([], 2)
    return (poly, 2)


# -- evaluation ---------------------------------------------------------------------------


def _frame(simplex) -> list:
    v0 = simplex[0]
    return [tuple(v[k] - v0[k] for k in range(len(v0))) for v in simplex[1:]]


def cell_orientation(cell: Cell) -> int:
    """Minty sign of the cell's first simplex product, for inspection."""
    sx = _triangulate(cell.x_vertices, cell.dim_x)[0]
    sy = _triangulate(cell.y_vertices, cell.dim_y)[0]
    d = _det(_frame(sx) + _frame(sy))
    return 0 if d == 0 else (1 if d > 0 else -1)


def _det(cols) -> Fraction:
    m = len(cols)
    if m == 0:
        return Q(1)
    rows = [[cols[j][i] for j in range(m)] for i in range(len(cols[0]))]
    if len(rows) != m:
        raise ValueError("non-square determinant")
    if m == 1:
        return rows[0][0]
    if m == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    if m == 3:
        return (rows[0][0] * (rows[1][1] * rows[2][2] - rows[1][2] * rows[2][1])
                - rows[0][1] * (rows[1][0] * rows[2][2] - rows[1][2] * rows[2][0])
                + rows[0][2] * (rows[1][0] * rows[2][1] - rows[1][1] * rows[2][0]))
    raise NotImplementedError


def _submatrix_det(frame, rows) -> Fraction:
    cols = [tuple(v[r] for r in rows) for v in frame]
    return _det(cols)


def eval_polyhedral(cycle: PolyhedralLagrangianCycle, form: Form,
                    order: int = 64, refine: int = 88,
                    with_error: bool = False):
    """Integrate an n-form over the cycle.

    Polynomial atoms with declared windows integrate exactly over simplex
    products (Dirichlet formula); bump atoms use per-cell tensor quadrature
    with a refinement error estimate.  The result is a Fraction when every
    atom is exact.
    """
    n = cycle.n
    if form.n != n or form.degree != n:
        raise ValueError("form degree/dimension mismatch")
    support = form.support_box()
    if support is None:
        raise SupportError("form needs horizontally compact (or windowed) support")
    for k, ((slo, shi), (wlo, whi)) in enumerate(zip(support, cycle.window)):
        if slo < wlo or shi > whi:
            raise WindowTooSmall(
                f"form support exceeds the cycle window along x_{k + 1}")

    total_exact = Q(0)
    total_float = 0.0
    err = 0.0
    inexact = False
    for key, coeff in form.terms.items():
        if coeff.has_params():
            raise SupportError("cannot evaluate a form with free parameters")
        I = [v for v in key if v < n]
        J = [v - n for v in key if v >= n]
        for sig, poly in coeff.atoms.items():
            atom = CoefficientFn(n, {sig: poly}, declared_box=coeff.declared_box)
            box = atom.support_box()
            if box is None:
                raise SupportError("polynomial coefficient needs a declared window")
            exact_atom = not sig
            for cell in cycle.cells:
                if cell.dim_x != len(I) or cell.dim_y != len(J):
                    continue
                clipped, _ = _clip_to_box(cell.x_vertices, cell.dim_x, box)
                if not clipped:
                    continue
                for sx in _triangulate(clipped, cell.dim_x):
                    for sy in _triangulate(cell.y_vertices, cell.dim_y):
                        U = _frame(sx)
                        W = _frame(sy)
                        Mdet = _det(U + W)
                        if Mdet == 0:
                            continue
                        sign = 1 if Mdet > 0 else -1
                        dU = _submatrix_det(U, I)
                        dW = _submatrix_det(W, J)
                        scale = sign * dU * dW
                        if scale == 0:
                            continue
                        if exact_atom:
                            total_exact += scale * _integrate_poly_cell(
                                poly, n, sx, sy)
                        else:
                            v, e = _integrate_atom_cell_quad(
                                atom, n, sx, sy, order, refine)
                            total_float += float(scale) * v
                            err += abs(float(scale)) * e
                            inexact = True
    if inexact:
        value = float(total_exact) + total_float
    else:
        value = total_exact
    return (value, err) if with_error else value


def _affine_subs_polys(n: int, sx, sy, nvars: int) -> list:
    """Substitutions x(s), y(t) into a ring with s in slots 0..dx-1, t after."""
    dx = len(sx) - 1
    dy = len(sy) - 1
    nv = max(dx + dy, 1)
    repl = []
    for k in range(n):
        p = Poly.const(nv, sx[0][k])
        for a in range(dx):
            p = p + Poly.variable(nv, a).scale(sx[a + 1][k] - sx[0][k])
        repl.append(p)
    for k in range(n):
        p = Poly.const(nv, sy[0][k])
        for b in range(dy):
            p = p + Poly.variable(nv, dx + b).scale(sy[b + 1][k] - sy[0][k])
        repl.append(p)
    repl += [Poly.zero(nv)] * (nvars - 2 * n)
    return repl


def _integrate_poly_cell(poly: Poly, n: int, sx, sy) -> Fraction:
    dx = len(sx) - 1
    dy = len(sy) - 1
    repl = _affine_subs_polys(n, sx, sy, poly.nvars)
    composed = poly.subs(repl[:poly.nvars])
    # integrate s over the dx-simplex and t over the dy-simplex
    total = Q(0)
    nv = composed.nvars
    for e, c in composed.terms.items():
        gs = e[:dx]
        gt = e[dx:dx + dy]
        total += c * _dirichlet(gs) * _dirichlet(gt)
    return total


def _dirichlet(g) -> Fraction:
    d = len(g)
    num = Q(1)
    for gi in g:
        for k in range(2, gi + 1):
            num *= k
    den = Q(1)
    for k in range(2, d + sum(g) + 1):
        den *= k
    return num / den


def _simplex_nodes(dim: int, order: int):
    """Nodes/weights on the standard simplex (weights sum to its volume)."""
    if dim == 0:
        return np.zeros((1, 0)), np.ones(1)
    x, w = _leggauss(order)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w
    if dim == 1:
        return u[:, None], wu
    U, V = np.meshgrid(u, u, indexing="ij")
    WU, WV = np.meshgrid(wu, wu, indexing="ij")
    s = U
    t = V * (1.0 - U)
    wts = (WU * WV * (1.0 - U)).ravel()
    return np.stack([s.ravel(), t.ravel()], axis=-1), wts


def _integrate_atom_cell_quad(atom: CoefficientFn, n: int, sx, sy,
                              order: int, refine: int) -> tuple[float, float]:
    dx = len(sx) - 1
    dy = len(sy) - 1

    def run(o):
        ns, ws = _simplex_nodes(dx, o)
        nt, wt = _simplex_nodes(dy, o)
        x0 = np.array([float(v) for v in sx[0]])
        Ux = np.array([[float(sx[a + 1][k] - sx[0][k]) for k in range(n)]
                       for a in range(dx)])
        y0 = np.array([float(v) for v in sy[0]])
        Wy = np.array([[float(sy[b + 1][k] - sy[0][k]) for k in range(n)]
                       for b in range(dy)])
        X = x0[None, :] + (ns @ Ux if dx else 0.0)
        Yv = y0[None, :] + (nt @ Wy if dy else 0.0)
        Ns, Nt = X.shape[0], Yv.shape[0]
        pts = np.empty((Ns * Nt, 2 * n))
        pts[:, :n] = np.repeat(X, Nt, axis=0)
        pts[:, n:2 * n] = np.tile(Yv, (Ns, 1))
        vals = atom.eval_array(pts)
        return float((np.repeat(ws, Nt) * np.tile(wt, Ns) * vals).sum())

    v1 = run(order)
    v2 = run(refine)
    return v2, abs(v2 - v1)


# -- mass ----------------------------------------------------------------------------------


def mass_polyhedral(cycle: PolyhedralLagrangianCycle, R: float) -> float:
    """Mass of the cycle over pi^{-1}(ball of radius R): sum of cell volumes."""
    total = 0.0
    for cell in cycle.cells:
        xs = [[float(v) for v in p] for p in cell.x_vertices]
        ys = [[float(v) for v in p] for p in cell.y_vertices]
        if cycle.n == 1:
            if cell.dim_x == 1:
                lo, hi = sorted([xs[0][0], xs[1][0]])
                total += max(0.0, min(hi, R) - max(lo, -R))
            else:
                if abs(xs[0][0]) <= R:
                    total += abs(ys[1][0] - ys[0][0])
            continue
        if cell.dim_x == 2:
            total += disk_polygon_area(xs, R)
        elif cell.dim_x == 1:
            total += segment_disk_length(xs[0], xs[1], R) * _dist(ys[0], ys[1])
        else:
            if math.hypot(*xs[0]) <= R and len(ys) >= 3:
                s = 0.0
                for i in range(len(ys)):
                    p, q = ys[i], ys[(i + 1) % len(ys)]
                    s += p[0] * q[1] - p[1] * q[0]
                total += abs(s) / 2.0
    return total


def _dist(p, q):
    return math.sqrt(sum((a - b) ** 2 for a, b in zip(p, q)))


def segment_disk_length(p, q, R) -> float:
    """Length of a segment inside the disk |x| <= R."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    d = q - p
    a = d @ d
    if a == 0:
        return 0.0
    b = 2 * p @ d
    c = p @ p - R * R
    disc = b * b - 4 * a * c
    if disc <= 0:
        return 0.0
    s = math.sqrt(disc)
    t0 = max(0.0, (-b - s) / (2 * a))
    t1 = min(1.0, (-b + s) / (2 * a))
    return max(0.0, (t1 - t0)) * math.sqrt(a)


def disk_polygon_area(poly, R) -> float:
    """Area of (convex polygon) intersect (disk of radius R at the origin)."""
    total = 0.0
    m = len(poly)
    for i in range(m):
        total += _edge_disk_contrib(np.asarray(poly[i], dtype=float),
                                    np.asarray(poly[(i + 1) % m], dtype=float), R)
    return abs(total)


def _edge_disk_contrib(A, B, R) -> float:
    """Signed contribution of triangle (O, A, B) clipped to the disk."""

    def cross(u, v):
        return u[0] * v[1] - u[1] * v[0]

    def sector(u, v):
        ang = math.atan2(cross(u, v), float(u @ v))
        return 0.5 * R * R * ang

    inA = A @ A <= R * R + 1e-15
    inB = B @ B <= R * R + 1e-15
    if inA and inB:
        return 0.5 * cross(A, B)
    # intersections of segment AB with the circle
    d = B - A
    a = d @ d
    b = 2 * A @ d
    c = A @ A - R * R
    disc = b * b - 4 * a * c
    ts = []
    if disc > 0 and a > 0:
        s = math.sqrt(disc)
        for t in ((-b - s) / (2 * a), (-b + s) / (2 * a)):
            if 1e-12 < t < 1 - 1e-12:
                ts.append(t)
    pts = [A + t * d for t in sorted(ts)]
    if inA and not inB:
        C = pts[0] if pts else B
        return 0.5 * cross(A, C) + sector(C, B)
    if not inA and inB:
        C = pts[-1] if pts else A
        return sector(A, C) + 0.5 * cross(C, B)
    if len(pts) == 2:
        C, D = pts
        return sector(A, C) + 0.5 * cross(C, D) + sector(D, B)
    return sector(A, B)
