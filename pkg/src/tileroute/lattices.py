"""Geometric construction of periodic lattices as basis graphs.

Used to (re)generate the builtin graph database.  A lattice is given by two
lattice vectors, site positions and the neighbor distances that count as
edges; dual (Laves) lattices are obtained by tracing faces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BasisGraph, QuditCoord, edge_class

TOL = 1e-6


@dataclass
class PeriodicGraph:
    vectors: np.ndarray          # rows a1, a2
    positions: np.ndarray        # site positions inside cell (0,0)
    edges: list[tuple[int, int, int, int]]  # (site, site, dx, dy)
    one_dimensional: bool = False

    def point(self, s: int, dx: int, dy: int) -> np.ndarray:
        return self.positions[s] + dx * self.vectors[0] + dy * self.vectors[1]

    def neighbors(self) -> list[list[tuple[int, int, int]]]:
        out: list[list[tuple[int, int, int]]] = [[] for _ in self.positions]
        for a, b, dx, dy in self.edges:
            out[a].append((b, dx, dy))
            out[b].append((a, -dx, -dy))
        return out

    def to_basis_graph(self, name: str) -> BasisGraph:
        vertices = frozenset(QuditCoord(0, 0, s) for s in range(len(self.positions)))
        edges = [(QuditCoord(0, 0, a), QuditCoord(dx, dy, b)) for a, b, dx, dy in self.edges]
        return BasisGraph(vertices, tuple(edges), name)


def _reduce_sites(vectors: np.ndarray, sites) -> np.ndarray:
    inv = np.linalg.inv(vectors.T)
    fracs: list[np.ndarray] = []
    for p in sites:
        f = inv @ np.asarray(p, dtype=float)
        f = f - np.floor(f + TOL)
        f[np.abs(f - 1) < TOL] = 0.0
        f[np.abs(f) < TOL] = 0.0
        if not any(np.allclose(f, g, atol=1e-5) for g in fracs):
            fracs.append(f)
    fracs.sort(key=lambda f: (round(f[1], 5), round(f[0], 5)))
    return np.array([vectors.T @ f for f in fracs])


def build(vectors, sites, distances, one_dimensional: bool = False) -> PeriodicGraph:
    """Connect sites whose separation is one of ``distances``."""
    vec = np.asarray(vectors, dtype=float)
    pos = _reduce_sites(vec, sites)
    reach = range(-2, 3)
    found: dict[tuple, tuple[int, int, int, int]] = {}
    for a in range(len(pos)):
        for b in range(len(pos)):
            for dx in reach:
                for dy in ([0] if one_dimensional else reach):
                    if a == b and dx == 0 and dy == 0:
                        continue
                    d = np.linalg.norm(pos[b] + dx * vec[0] + dy * vec[1] - pos[a])
                    if not any(abs(d - r) < 1e-5 for r in distances):
                        continue
                    key = edge_class(QuditCoord(0, 0, a), QuditCoord(dx, dy, b))
                    found[key] = key
    return PeriodicGraph(vec, pos, sorted(found.values()), one_dimensional)


def dual(g: PeriodicGraph) -> PeriodicGraph:
    """Face graph of a planar periodic lattice, vertices at face centroids."""
    nbrs = g.neighbors()
    order: list[list[tuple[int, int, int]]] = []
    for s, lst in enumerate(nbrs):
        base = g.point(s, 0, 0)

        def angle(entry, base=base):
            v = g.point(*entry) - base
            return math.atan2(v[1], v[0])
        order.append(sorted(lst, key=angle))

    inv = np.linalg.inv(g.vectors.T)
    faces: dict[frozenset, int] = {}
    centroids: list[np.ndarray] = []
    left_face: dict[tuple, tuple[int, int, int]] = {}

    def trace(start):
        walk = [start]
        (u, ux, uy), (v, vx, vy) = start
        for _ in range(64):
            rel = (u, ux - vx, uy - vy)
            ring = order[v]
            k = ring.index(rel)
            w, wx, wy = ring[(k - 1) % len(ring)]
            nxt = ((v, vx, vy), (w, vx + wx, vy + wy))
            if nxt == walk[0]:
                return walk
            walk.append(nxt)
            (u, ux, uy), (v, vx, vy) = nxt
        raise ValueError("face tracing did not close")

    for a in range(len(g.positions)):
        for b, dx, dy in nbrs[a]:
            start = ((a, 0, 0), (b, dx, dy))
            if start in left_face:
                continue
            walk = trace(start)
            pts = np.array([g.point(*e[0]) for e in walk])
            frac = inv @ pts.mean(axis=0)
            cx, cy = (int(math.floor(frac[0] + TOL)), 0 if g.one_dimensional else int(math.floor(frac[1] + TOL)))
            shape = frozenset((e[0][0], e[0][1] - cx, e[0][2] - cy) for e in walk)
            if shape not in faces:
                faces[shape] = len(faces)
                centroids.append(pts.mean(axis=0) - cx * g.vectors[0] - cy * g.vectors[1])
            fid = faces[shape]
            for (u, ux, uy), (v, vx, vy) in walk:
                left_face[((u, 0, 0), (v, vx - ux, vy - uy))] = (fid, cx - ux, cy - uy)
    edges = {}
    for a, b, dx, dy in g.edges:
        f1, x1, y1 = left_face[((a, 0, 0), (b, dx, dy))]
        f2, x2, y2 = left_face[((b, 0, 0), (a, -dx, -dy))]
        # second face is seen from b, which sits at (dx, dy)
        key = edge_class(QuditCoord(x1, y1, f1), QuditCoord(x2 + dx, y2 + dy, f2))
        edges[key] = key
    # renumber faces by position for determinism
    pos = np.array(centroids)
    fr = [inv @ p for p in pos]
    perm = sorted(range(len(pos)), key=lambda i: (round(fr[i][1], 5), round(fr[i][0], 5)))
    new = {old: k for k, old in enumerate(perm)}
    out = set()
    for sa, sb, kx, ky in edges.values():
        out.add(edge_class(QuditCoord(0, 0, new[sa]), QuditCoord(kx, ky, new[sb])))
    return PeriodicGraph(g.vectors, pos[perm], sorted(out), g.one_dimensional)


def line_graph(g: PeriodicGraph) -> PeriodicGraph:
    """Vertices at edge midpoints, joined when the edges share an endpoint."""
    inv = np.linalg.inv(g.vectors.T)
    ends, pos = [], []
    for a, b, dx, dy in g.edges:
        mid = (g.point(a, 0, 0) + g.point(b, dx, dy)) / 2
        f = np.floor(inv @ mid + TOL).astype(int)
        cx, cy = int(f[0]), 0 if g.one_dimensional else int(f[1])
        ends.append({(a, -cx, -cy), (b, dx - cx, dy - cy)})
        pos.append(mid - cx * g.vectors[0] - cy * g.vectors[1])
    found = {}
    for i, ei in enumerate(ends):
        for j, ej in enumerate(ends):
            for dx in range(-2, 3):
                for dy in ([0] if g.one_dimensional else range(-2, 3)):
                    if i == j and dx == 0 and dy == 0:
                        continue
                    if ei & {(s, x + dx, y + dy) for s, x, y in ej}:
                        key = edge_class(QuditCoord(0, 0, i), QuditCoord(dx, dy, j))
                        found[key] = key
    return PeriodicGraph(g.vectors, np.array(pos), sorted(found.values()), g.one_dimensional)


# ------------------------------------------------------------------ catalogue

R3 = math.sqrt(3.0)


def _polygon(center, radius, angles_deg):
    cx, cy = center
    return [(cx + radius * math.cos(math.radians(a)), cy + radius * math.sin(math.radians(a))) for a in angles_deg]


def _honeycomb(bond: float):
    a1 = (R3 * bond, 0.0)
    a2 = (R3 * bond / 2, 1.5 * bond)
    return a1, a2, (0.0, 0.0), (R3 * bond / 2, bond / 2)


def archimedean() -> dict[str, PeriodicGraph]:
    lat: dict[str, PeriodicGraph] = {}
    lat["square"] = build([(1, 0), (0, 1)], [(0, 0)], [1])
    lat["triangular"] = build([(1, 0), (0.5, R3 / 2)], [(0, 0)], [1])
    a1, a2, p, q = _honeycomb(1.0)
    lat["honeycomb"] = build([a1, a2], [p, q], [1])
    lat["kagome"] = build([(2, 0), (1, R3)], [(0, 0), (1, 0), (0.5, R3 / 2)], [1])
    # 3.3.4.3.4: two unit squares per cell, rotated by +-15 degrees
    side = math.sqrt(2 + R3)
    r = 1 / math.sqrt(2)
    sq = _polygon((0, 0), r, [60, 150, 240, 330]) + _polygon((side / 2, side / 2), r, [30, 120, 210, 300])
    lat["snub-square"] = build([(side, 0), (0, side)], sq, [1])
    L = 1 + math.sqrt(2)
    lat["square-octagon"] = build([(L, 0), (0, L)], _polygon((0, 0), r, [0, 90, 180, 270]), [1])
    lat["trellis"] = build([(1, 0), (0.5, 1 + R3 / 2)], [(0, 0), (0, 1)], [1])
    # 3.12.12: triangles on honeycomb vertices pointing along the bonds
    b = 1 + 2 / R3
    a1, a2, p, q = _honeycomb(b)
    rho = 1 / R3
    star = _polygon(p, rho, [30, 150, 270]) + _polygon(q, rho, [210, 330, 90])
    lat["star"] = build([a1, a2], star, [1])
    # 3.4.6.4: triangles facing the bonds
    b = 1 + 1 / R3
    a1, a2, p, q = _honeycomb(b)
    ruby = _polygon(p, rho, [90, 210, 330]) + _polygon(q, rho, [270, 30, 150])
    lat["ruby"] = build([a1, a2], ruby, [1])
    # 4.6.12: hexagons on honeycomb vertices
    b = R3 + 1
    a1, a2, p, q = _honeycomb(b)
    cross = _polygon(p, 1.0, range(0, 360, 60)) + _polygon(q, 1.0, range(0, 360, 60))
    lat["cross"] = build([a1, a2], cross, [1])
    # 3.3.3.3.6: unit hexagons on a triangular lattice of spacing sqrt(7)
    lat["bridge"] = build([(2.5, R3 / 2), (0.5, 1.5 * R3)], _polygon((0, 0), 1.0, range(0, 360, 60)), [1])
    return lat


LAVES_OF = {
    "union-jack": "square-octagon",
    "prismatic-pentagonal": "trellis",
    "cairo-pentagonal": "snub-square",
    "dice": "kagome",
    "tetrille": "ruby",
    "asanoha": "star",
    "floret-pentagonal": "bridge",
    "kisrhombille": "cross",
}


def catalogue() -> dict[str, PeriodicGraph]:
    lat = archimedean()
    for name, base in LAVES_OF.items():
        lat[name] = dual(lat[base])
    one_d = [(1, 0), (0, 10)]
    lat["line"] = build(one_d, [(0, 0)], [1], one_dimensional=True)
    lat["ladder"] = build(one_d, [(0, 0), (0, 1)], [1], one_dimensional=True)
    lat["J1J2-line"] = build(one_d, [(0, 0)], [1, 2], one_dimensional=True)
    lat["J1J2-ladder"] = build(one_d, [(0, 0), (0, 1)], [1, math.sqrt(2)], one_dimensional=True)
    lat["J1J2-square"] = build([(1, 0), (0, 1)], [(0, 0)], [1, math.sqrt(2)])
    lat["J1J2J3-square"] = build([(1, 0), (0, 1)], [(0, 0)], [1, math.sqrt(2), 2])
    lat["plus-square"] = build([(2, 1), (-1, 2)], [(0, 0), (1, 0), (0, 1), (-1, 0), (0, -1)], [1])
    lat["diamond-square"] = build([(1, 1), (-1, 1)], [(0, 0), (1, 0)], [1])
    # honeycomb with an extra vertex on every bond
    a1, a2, p, q = _honeycomb(1.0)
    hh = [p, q]
    for nb in (q, (q[0] - a1[0], q[1] - a1[1]), (q[0] - a2[0], q[1] - a2[1])):
        hh.append(((p[0] + nb[0]) / 2, (p[1] + nb[1]) / 2))
    lat["heavy-hex"] = build([a1, a2], hh, [0.5])
    lat["shuriken"] = line_graph(lat["square-octagon"])
    return lat


EXPECTED_DEGREES: dict[str, list[int]] = {
    "line": [2], "ladder": [3, 3], "square": [4], "triangular": [6], "honeycomb": [3, 3],
    "kagome": [4] * 3, "snub-square": [5] * 4, "square-octagon": [3] * 4, "trellis": [5] * 2,
    "star": [3] * 6, "ruby": [4] * 6, "cross": [3] * 12, "bridge": [5] * 6,
    "union-jack": [4, 8], "prismatic-pentagonal": [3, 3, 4], "cairo-pentagonal": [3, 3, 3, 3, 4, 4],
    "dice": [3, 3, 6], "tetrille": [3, 3, 4, 4, 4, 6], "asanoha": [3, 3, 12],
    "floret-pentagonal": [3] * 8 + [6], "kisrhombille": [4, 4, 4, 6, 6, 12],
    "J1J2-line": [4], "J1J2-ladder": [5, 5], "J1J2-square": [8], "J1J2J3-square": [12],
    "plus-square": [4] * 5, "diamond-square": [4, 4], "heavy-hex": [2, 2, 2, 3, 3],
    "shuriken": [4] * 6,
}


def degrees(b: BasisGraph) -> list[int]:
    count = {v.s: 0 for v in b.vertices}
    for a, c in b.edges:
        count[a.s] += 1
        count[c.s] += 1
    return sorted(count.values())
