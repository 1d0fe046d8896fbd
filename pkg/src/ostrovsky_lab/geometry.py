"""Parallelograms in the (tau, xi) plane, convex clipping and quadrature.

The counterexample slabs have width ~N^{-1/2} and sit at
tau ~ N^3.  Every parallelogram therefore carries an ``origin_offset`` and
stores its vertices relative to it; geometry is done in local coordinates
and only offsets are ever added together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

Point = tuple[float, float]


def polygon_area(poly: Sequence[Point]) -> float:
    """Shoelace area (absolute value)."""
    n = len(poly)
    if n < 3:
        return 0.0
    acc = math.fsum(
        poly[i][0] * poly[(i + 1) % n][1] - poly[(i + 1) % n][0] * poly[i][1]
        for i in range(n)
    )
    return abs(acc) / 2.0


def _orientation(poly: Sequence[Point]) -> float:
    n = len(poly)
    return sum(
        poly[i][0] * poly[(i + 1) % n][1] - poly[(i + 1) % n][0] * poly[i][1]
        for i in range(n)
    )


def clip_convex(subject: Sequence[Point], clip: Sequence[Point]) -> list[Point]:
    """Sutherland-Hodgman clipping of ``subject`` by the convex polygon ``clip``.

    Both polygons may be given in either orientation.
    """
    if len(subject) == 0 or len(clip) == 0:
        return []
    clip = list(clip)
    if _orientation(clip) < 0:
        clip.reverse()
    output = list(subject)
    cp1 = clip[-1]
    for cp2 in clip:
        if not output:
            return []
        ex, ey = cp2[0] - cp1[0], cp2[1] - cp1[1]

        def side(p, cp1=cp1, ex=ex, ey=ey):
            return ex * (p[1] - cp1[1]) - ey * (p[0] - cp1[0])

        inp = output
        output = []
        s = inp[-1]
        ds = side(s)
        for e in inp:
            de = side(e)
            if de >= 0:
                if ds < 0:
                    t = ds / (ds - de)
                    output.append((s[0] + t * (e[0] - s[0]), s[1] + t * (e[1] - s[1])))
                output.append(e)
            elif ds >= 0:
                t = ds / (ds - de)
                output.append((s[0] + t * (e[0] - s[0]), s[1] + t * (e[1] - s[1])))
            s, ds = e, de
        cp1 = cp2
    return output


def intersection_area(p: Sequence[Point], q: Sequence[Point]) -> float:
    return polygon_area(clip_convex(p, q))


@dataclass(frozen=True)
class Parallelogram:
    """Vertices ``v1..v4`` (local, in order) plus an absolute ``origin_offset``.

    Coordinates are ``(tau, xi)``.  The parallelogram is
    ``offset + v1 + s (v2 - v1) + t (v4 - v1)`` for ``s, t in [0, 1]``.
    """

    local_vertices: tuple[Point, Point, Point, Point]
    origin_offset: Point = (0.0, 0.0)

    def __post_init__(self):
        if len(self.local_vertices) != 4:
            raise ValueError("a parallelogram needs four vertices")
        if self.area <= 0.0:
            raise ValueError("degenerate parallelogram")
        v1, v2, v3, v4 = (np.asarray(v) for v in self.local_vertices)
        resid = np.abs((v1 + v3) - (v2 + v4))
        scale = max(float(np.max(np.abs(np.stack([v1, v2, v3, v4])))), 1e-300)
        if np.any(resid > 1e-9 * scale):
            raise ValueError(f"vertices do not close into a parallelogram: {resid}")

    @property
    def vertices(self) -> list[Point]:
        ot, ox = self.origin_offset
        return [(ot + t, ox + x) for t, x in self.local_vertices]

    @property
    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        v1, v2, _, v4 = (np.asarray(v, dtype=float) for v in self.local_vertices)
        return v2 - v1, v4 - v1

    @property
    def area(self) -> float:
        v1, v2, _, v4 = (np.asarray(v, dtype=float) for v in self.local_vertices)
        e1, e2 = v2 - v1, v4 - v1
        return abs(e1[0] * e2[1] - e1[1] * e2[0])

    def closure_residual(self) -> float:
        v1, v2, v3, v4 = (np.asarray(v, dtype=float) for v in self.local_vertices)
        return float(np.max(np.abs((v1 + v3) - (v2 + v4))))

    @property
    def local_center(self) -> np.ndarray:
        return np.mean(np.asarray(self.local_vertices, dtype=float), axis=0)

    def reflected(self) -> "Parallelogram":
        """Image under ``(tau, xi) -> (-tau, -xi)``."""
        ot, ox = self.origin_offset
        verts = tuple((-t, -x) for t, x in self.local_vertices)
        return Parallelogram(verts, (-ot, -ox))

    def centered(self) -> "Parallelogram":
        """Translate so the center sits at the origin.

        Only the offset moves, so edges stay bit-identical to ``self``.
        """
        c = self.local_center
        return Parallelogram(self.local_vertices, (-float(c[0]), -float(c[1])))

    def translated_local(self, shift: Point) -> list[Point]:
        return [(t + shift[0], x + shift[1]) for t, x in self.local_vertices]

    def contains_local(self, pts: np.ndarray, tol: float = 0.0) -> np.ndarray:
        """Membership of local points (shape (..., 2)) via affine coordinates."""
        v1 = np.asarray(self.local_vertices[0], dtype=float)
        e1, e2 = self.edges
        m = np.array([[e1[0], e2[0]], [e1[1], e2[1]]])
        st = np.linalg.solve(m, (np.asarray(pts) - v1).reshape(-1, 2).T).T
        ok = np.all((st >= -tol) & (st <= 1.0 + tol), axis=1)
        return ok.reshape(np.asarray(pts).shape[:-1])


def indicator_convolution_value(
    p: Parallelogram, q: Parallelogram, point: Point, point_offset: Point = (0.0, 0.0)
) -> float:
    """``(I_P * I_Q)(z) = |P ∩ (z - Q)|`` with ``z = point_offset + point``."""
    # z - Q, expressed in P's local frame
    shift = (
        (point_offset[0] - p.origin_offset[0] - q.origin_offset[0]) + point[0],
        (point_offset[1] - p.origin_offset[1] - q.origin_offset[1]) + point[1],
    )
    reflected_q = [(shift[0] - t, shift[1] - x) for t, x in q.local_vertices]
    return intersection_area(list(p.local_vertices), reflected_q)


def affine_coordinates(p: Parallelogram, local_points) -> np.ndarray:
    """Coordinates ``(s, t)`` of local points in ``p``'s frame
    ``v1 + s e1 + t e2``; ``p`` itself becomes the unit square."""
    v1 = np.asarray(p.local_vertices[0], dtype=float)
    e1, e2 = p.edges
    m = np.array([[e1[0], e2[0]], [e1[1], e2[1]]])
    pts = np.asarray(local_points, dtype=float) - v1
    return np.linalg.solve(m, pts.reshape(-1, 2).T).T.reshape(pts.shape)


UNIT_SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]


def convolution_on_affine_grid(p: Parallelogram, q: Parallelogram, base_local: Point,
                               alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """``(I_P * I_Q)(z)`` for ``z = oP + oQ + base_local + alpha e1 + beta e2``.

    ``z - Q`` is clipped against ``P`` inside ``P``'s affine frame, so the
    (possibly huge) absolute offsets never enter the arithmetic.
    """
    e1, e2 = p.edges
    # vertices of base - Q in P's affine frame; moving z by (alpha, beta)
    # shifts them by exactly (alpha, beta) there
    anchor = np.asarray(base_local, dtype=float) - np.asarray(q.local_vertices, dtype=float)
    anchor = affine_coordinates(p, anchor)
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    out = np.empty(np.broadcast(alpha, beta).shape)
    for idx, (a, b) in zip(np.ndindex(out.shape), np.broadcast(alpha, beta)):
        poly = [(float(s + a), float(t + b)) for s, t in anchor]
        out[idx] = intersection_area(UNIT_SQUARE, poly)
    return out * p.area


# ---------------------------------------------------------------------------
# quadrature


@lru_cache(maxsize=None)
def _gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def graded_panels(a: float, b: float, breakpoints: Sequence[float], levels: int,
                  ratio: float = 0.25) -> np.ndarray:
    """Panel edges on ``[a, b]`` refined geometrically toward each breakpoint."""
    edges = {a, b}
    for c in breakpoints:
        if not a <= c <= b:
            continue
        edges.add(c)
        for side in (a, b):
            span = side - c
            if span == 0:
                continue
            floor = 1e-12 * max(abs(c), abs(span))
            for m in range(1, levels + 1):
                step = span * ratio**m
                if abs(step) < floor:
                    break  # narrower panels would collapse onto the breakpoint
                edges.add(c + step)
    return np.array(sorted(edges))


def composite_rule(panel_edges: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = _gauss_legendre(order)
    lo, hi = panel_edges[:-1, None], panel_edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (x[None, :] + 1.0)).ravel()
    weights = (half * w[None, :]).ravel()
    return nodes, weights


@dataclass(frozen=True)
class QuadratureSettings:
    order: int = 12
    levels: int = 24
    ratio: float = 0.35

    def refined(self) -> "QuadratureSettings":
        return QuadratureSettings(self.order * 2, self.levels + 12, self.ratio)


def integrate_over_parallelogram(
    p: Parallelogram,
    integrand: Callable[[np.ndarray, np.ndarray], np.ndarray],
    s_breaks: Sequence[float] = (),
    t_breaks: Sequence[float] = (),
    quad: QuadratureSettings = QuadratureSettings(),
) -> float:
    """Integrate ``integrand(dtau, dxi)`` (local coords) over ``p``.

    The rule is a tensor product of composite Gauss-Legendre rules in the
    affine parameters ``(s, t)``, graded toward the given breakpoints.
    """
    s_nodes, s_w = composite_rule(graded_panels(0.0, 1.0, s_breaks, quad.levels, quad.ratio), quad.order)
    t_nodes, t_w = composite_rule(graded_panels(0.0, 1.0, t_breaks, quad.levels, quad.ratio), quad.order)
    v1 = np.asarray(p.local_vertices[0], dtype=float)
    e1, e2 = p.edges
    S, T = np.meshgrid(s_nodes, t_nodes, indexing="ij")
    dtau = v1[0] + S * e1[0] + T * e2[0]
    dxi = v1[1] + S * e1[1] + T * e2[1]
    vals = integrand(dtau, dxi)
    return float(p.area * np.einsum("i,ij,j->", s_w, vals, t_w))


def xi_zero_breaks(p: Parallelogram) -> list[float]:
    """Values of ``s`` where the absolute xi coordinate crosses 0.

    Only meaningful when the second edge is horizontal in xi (true for the
    counterexample slabs); otherwise an empty list is returned.
    """
    e1, e2 = p.edges
    if e2[1] != 0.0 or e1[1] == 0.0:
        return []
    xi0 = p.origin_offset[1] + p.local_vertices[0][1]
    s = -xi0 / e1[1]
    return [s] if 0.0 < s < 1.0 else []
