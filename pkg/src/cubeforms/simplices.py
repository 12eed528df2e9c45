"""Simplex integration and the flatness auditor.

A degree-k form is *flat with constant N'* when its integrals over the
boundaries of (k+1)-simplices are bounded by N' times the (k+1)-volume of
the simplex.  The auditor samples well-shaped random simplices across a
range of scales, integrates the form over each boundary, and reports the
ratio statistics per scale band so that blow-up as the scale shrinks (the
signature of a non-flat form) is visible directly.

Integration rules:

* segments (1-faces) are split at every grid-cell wall they cross, then each
  piece gets a Gauss rule; with multilinear interpolation of cell values the
  piecewise integrand is polynomial, so segment integrals are exact up to
  float rounding for both grid and polynomial coefficients;
* faces of dimension 2 are integrated with a collapsed Gauss (Duffy) rule
  after two levels of uniform 4-way subdivision;
* higher-dimensional faces use the collapsed Gauss rule with subdivision
  along the first axis only (documented tolerance, not exact).

Grid forms are evaluated by multilinear interpolation of cell-center values
(clamped half a cell from the boundary); that keeps line integrals of
sampled smooth forms consistent with the underlying smooth form to O(h^2),
while jumps in the data stay sharp at one-cell width.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .forms import Cube, FormsError, PolyForm, sort_index
from .gridforms import GridForm

_DEGENERACY_THRESHOLD = 1e-12


class SimplexError(FormsError):
    pass


# ---------------------------------------------------------------------------
# Simplices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Simplex:
    """Oriented m-simplex in R^n given by m+1 ordered vertices."""

    vertices: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        verts = tuple(tuple(float(x) for x in v) for v in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if not verts:
            raise SimplexError("simplex needs at least one vertex")
        n = len(verts[0])
        if any(len(v) != n for v in verts):
            raise SimplexError("vertices disagree on ambient dimension")
        if len(verts) > n + 1:
            raise SimplexError(f"{len(verts)} vertices cannot be affinely independent in R^{n}")
        if self.dim > 0 and self.volume() <= _DEGENERACY_THRESHOLD * self.diameter() ** self.dim:
            raise SimplexError("degenerate simplex (vertices nearly affinely dependent)")

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1

    @property
    def ambient_dim(self) -> int:
        return len(self.vertices[0])

    def edge_matrix(self) -> np.ndarray:
        """Rows v_i - v_0 for i = 1..m."""
        v = np.asarray(self.vertices)
        return v[1:] - v[0]

    def volume(self) -> float:
        """Unsigned m-dimensional volume, via the Gram determinant."""
        if self.dim == 0:
            return 1.0
        e = self.edge_matrix()
        gram = e @ e.T
        det = float(np.linalg.det(gram))
        return math.sqrt(max(det, 0.0)) / math.factorial(self.dim)

    def diameter(self) -> float:
        v = np.asarray(self.vertices)
        return float(max(np.linalg.norm(a - b) for a, b in itertools.combinations(v, 2))) \
            if len(v) > 1 else 0.0

    def barycenter(self) -> np.ndarray:
        return np.asarray(self.vertices).mean(axis=0)


def boundary(sigma: Simplex) -> list[tuple[int, Simplex]]:
    """Oriented faces with the standard alternating signs.

    Face i drops vertex i and carries sign (-1)^i; for segments the faces
    are signed points (+endpoint, -start).
    """
    out = []
    for i in range(len(sigma.vertices)):
        face = sigma.vertices[:i] + sigma.vertices[i + 1:]
        out.append(((-1) ** i, Simplex(face)))
    return out


# ---------------------------------------------------------------------------
# Coefficient evaluation (grid interpolation / polynomial)
# ---------------------------------------------------------------------------


def _interp_grid(arr: np.ndarray, grid: GridForm, points: np.ndarray) -> np.ndarray:
    """Multilinear interpolation of cell-center values at points (N, n)."""
    n = grid.ambient_dim
    res = grid.resolution
    u = np.empty_like(points)
    for i in range(n):
        lo = float(grid.cube.lo[i])
        h = float(grid.cube.width(i + 1)) / res
        u[:, i] = (points[:, i] - lo) / h - 0.5
    u = np.clip(u, 0.0, res - 1.0)
    base = np.minimum(np.floor(u).astype(int), res - 2) if res > 1 \
        else np.zeros_like(u, dtype=int)
    frac = u - base
    out = np.zeros(len(points))
    for corner in itertools.product((0, 1), repeat=n):
        weight = np.ones(len(points))
        idx = []
        for i, c in enumerate(corner):
            weight *= frac[:, i] if c else 1.0 - frac[:, i]
            idx.append(np.minimum(base[:, i] + c, res - 1))
        out += weight * arr[tuple(idx)]
    return out


def _coefficient_values(w: GridForm | PolyForm, idx: tuple[int, ...],
                        points: np.ndarray) -> np.ndarray:
    if isinstance(w, GridForm):
        arr = w.coefficients.get(idx)
        if arr is None:
            return np.zeros(len(points))
        return _interp_grid(arr, w, points)
    p = w.terms.get(idx)
    if p is None:
        return np.zeros(len(points))
    vals = np.zeros(len(points))
    for exp, c in p.coeffs.items():
        term = np.full(len(points), float(c))
        for i, e in enumerate(exp):
            if e:
                term *= points[:, i] ** e
        vals += term
    return vals


def _degree_of(w: GridForm | PolyForm) -> int:
    return w.degree if isinstance(w, GridForm) else w.k


def _ambient_of(w: GridForm | PolyForm) -> int:
    return w.ambient_dim if isinstance(w, GridForm) else w.n


def _indices(w: GridForm | PolyForm):
    return w.coefficients.keys() if isinstance(w, GridForm) else w.terms.keys()


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------


def _segment_breaks(a: np.ndarray, b: np.ndarray, w) -> np.ndarray:
    """Parameter values in (0,1) where the segment crosses grid-cell walls."""
    if not isinstance(w, GridForm):
        return np.array([])
    breaks = set()
    res = w.resolution
    for i in range(w.ambient_dim):
        lo = float(w.cube.lo[i])
        h = float(w.cube.width(i + 1)) / res
        d = b[i] - a[i]
        if abs(d) < 1e-15:
            continue
        # interpolation nodes sit at cell centers: kinks at center planes
        for j in range(res):
            t = (lo + h * (j + 0.5) - a[i]) / d
            if 1e-12 < t < 1 - 1e-12:
                breaks.add(round(t, 14))
    return np.array(sorted(breaks))


def _integrate_segment(w, a: np.ndarray, b: np.ndarray, order: int) -> float:
    """Integral of the 1-form w over the oriented segment a -> b.

    All Gauss panels between interpolation kinks are evaluated in one batch;
    the per-panel integrand is polynomial, so the panel rule is exact.
    """
    direction = b - a
    breaks = np.concatenate([[0.0], _segment_breaks(a, b, w), [1.0]])
    widths = np.diff(breaks)
    keep = widths > 1e-15
    panel_lo = breaks[:-1][keep]
    panel_w = widths[keep]
    nodes, gauss_w = np.polynomial.legendre.leggauss(order)
    t = panel_lo[:, None] + panel_w[:, None] * (nodes[None, :] + 1) / 2
    pts = a[None, :] + t.reshape(-1, 1) * direction[None, :]
    integrand = np.zeros(pts.shape[0])
    for (i,) in _indices(w):
        integrand += _coefficient_values(w, (i,), pts) * direction[i - 1]
    per_panel = integrand.reshape(len(panel_lo), order) @ gauss_w
    return float(np.dot(per_panel, panel_w / 2))


def _duffy_rule(m: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed tensor Gauss rule on the standard m-simplex."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes = (nodes + 1) / 2
    weights = weights / 2
    pts = []
    wts = []
    for combo in itertools.product(range(order), repeat=m):
        u = [nodes[j] for j in combo]
        wgt = math.prod(weights[j] for j in combo)
        # Duffy map: t_1 = u_1, t_2 = u_2 (1 - t_1), ... with Jacobian
        t = []
        remaining = 1.0
        for ui in u:
            ti = ui * remaining
            t.append(ti)
            wgt *= remaining
            remaining -= ti
        pts.append(t)
        wts.append(wgt)
    return np.asarray(pts), np.asarray(wts)


def _subdivide_triangle(verts: np.ndarray) -> list[np.ndarray]:
    v0, v1, v2 = verts
    m01, m02, m12 = (v0 + v1) / 2, (v0 + v2) / 2, (v1 + v2) / 2
    return [np.array([v0, m01, m02]), np.array([m01, v1, m12]),
            np.array([m02, m12, v2]), np.array([m01, m12, m02])]


def integrate_over_simplex(w: GridForm | PolyForm, sigma: Simplex,
                           order: int = 8, subdivisions: int = 2) -> float:
    """Integral of a degree-m form over an oriented m-simplex.

    The form is pulled back through the affine parameterization; orientation
    comes from the vertex order.  Degree-0 forms over points evaluate the
    coefficient.  Segments are exact up to rounding (see module docstring);
    triangles use the collapsed Gauss rule on 4^subdivisions sub-triangles.
    """
    m = sigma.dim
    if _degree_of(w) != m:
        raise SimplexError(f"degree {_degree_of(w)} form over a {m}-simplex")
    if _ambient_of(w) != sigma.ambient_dim:
        raise SimplexError("ambient dimension mismatch")
    if isinstance(w, GridForm):
        lo = [float(v) for v in w.cube.lo]
        hi = [float(v) for v in w.cube.hi]
        for v in sigma.vertices:
            if any(x < a - 1e-12 or x > b + 1e-12 for x, a, b in zip(v, lo, hi)):
                raise SimplexError(f"vertex {v} outside the grid domain")
    if m == 0:
        pts = np.asarray([sigma.vertices[0]])
        return float(_coefficient_values(w, (), pts)[0])
    verts = np.asarray(sigma.vertices)
    if m == 1:
        return _integrate_segment(w, verts[0], verts[1], order)
    if m == 2:
        tris = [verts]
        for _ in range(subdivisions):
            tris = [s for t in tris for s in _subdivide_triangle(t)]
        ref_pts, ref_wts = _duffy_rule(2, order)
        total = 0.0
        for t in tris:
            total += _integrate_patch(w, t, ref_pts, ref_wts)
        return total
    ref_pts, ref_wts = _duffy_rule(m, order)
    return _integrate_patch(w, verts, ref_pts, ref_wts)


def _integrate_patch(w, verts: np.ndarray, ref_pts: np.ndarray,
                     ref_wts: np.ndarray) -> float:
    """Quadrature of the pulled-back form over one affine patch."""
    pts = verts[0][None, :] + ref_pts @ (verts[1:] - verts[0])
    edges = verts[1:] - verts[0]            # (m, n)
    total = np.zeros(len(ref_pts))
    for idx in _indices(w):
        minor = edges[:, [i - 1 for i in idx]]
        det = float(np.linalg.det(minor))
        if det == 0.0:
            continue
        total += _coefficient_values(w, idx, pts) * det
    # ref_wts carry the standard-simplex measure; det carries the affine map
    return float(np.dot(ref_wts, total))


def integrate_over_boundary(w: GridForm | PolyForm, sigma: Simplex,
                            order: int = 8, subdivisions: int = 2) -> float:
    """Sum of signed face integrals of a degree-(m-1) form over the boundary."""
    total = 0.0
    for sign, face in boundary(sigma):
        total += sign * integrate_over_simplex(w, face, order, subdivisions)
    return total


# ---------------------------------------------------------------------------
# Flatness audit
# ---------------------------------------------------------------------------


@dataclass
class SimplexSample:
    scale: float
    boundary_integral: float
    volume: float
    ratio: float


@dataclass
class FlatnessReport:
    """Boundary-integral-to-volume statistics over random simplices.

    ``max_ratio`` plays the role of the fitted flatness constant N';
    ``coefficient_bound`` is the sup bound N of the coefficients; the
    per-scale-decile quantiles expose ratio blow-up as the scale shrinks.
    """

    samples: list[SimplexSample]
    max_ratio: float
    coefficient_bound: float
    scale_deciles: list[dict]
    params: dict = field(default_factory=dict)
    nprime: float | None = None
    verdict: bool | None = None

    def decile_max(self, which: int) -> float:
        return self.scale_deciles[which]["max"]


def _random_rotation(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def _regular_simplex(m: int, n: int) -> np.ndarray:
    """Vertices of a regular m-simplex in R^n, centered, circumradius 1."""
    if m + 1 > n + 1:
        raise SimplexError(f"cannot embed a {m}-simplex in R^{n}")
    basis = np.eye(m + 1)
    verts = basis - basis.mean(axis=0)
    # rows live in an m-dimensional subspace; orthonormalize into R^n
    q, _ = np.linalg.qr(verts.T)
    coords = verts @ q[:, :m]
    coords /= np.linalg.norm(coords, axis=1).max()
    out = np.zeros((m + 1, n))
    out[:, :m] = coords
    return out


def flatness_check(w: GridForm, sample_count: int, seed: int,
                   scale_range: tuple[float, float],
                   nprime: float | None = None,
                   order: int = 8, subdivisions: int = 2) -> FlatnessReport:
    """Audit Whitney-style flatness of a grid form with seeded random simplices.

    Draws ``sample_count`` well-shaped (k+1)-simplices with diameters
    log-uniform in ``scale_range``, random orientation, and centers uniform
    over the admissible interior (one interpolation margin plus the simplex
    radius inside the box).  Deterministic for fixed (seed, sample_count,
    scale_range).  When ``nprime`` is given the verdict is
    max_ratio <= nprime.
    """
    if sample_count < 0:
        raise SimplexError("sample_count must be >= 0")
    lo_s, hi_s = float(scale_range[0]), float(scale_range[1])
    if not 0 < lo_s <= hi_s:
        raise SimplexError(f"bad scale range ({lo_s}, {hi_s})")
    n, k = w.ambient_dim, w.degree
    m = k + 1
    rng = np.random.default_rng(seed)
    reference = _regular_simplex(m, n)
    box_lo = np.array([float(v) for v in w.cube.lo])
    box_hi = np.array([float(v) for v in w.cube.hi])
    margin = max(float(w.cube.width(i + 1)) / w.resolution for i in range(n))
    samples: list[SimplexSample] = []
    while len(samples) < sample_count:
        scale = float(np.exp(rng.uniform(np.log(lo_s), np.log(hi_s))))
        radius = scale / 2
        lo_c = box_lo + margin + radius
        hi_c = box_hi - margin - radius
        if np.any(lo_c >= hi_c):
            raise SimplexError(
                f"scale {scale} does not fit inside the box with margins")
        center = rng.uniform(lo_c, hi_c)
        rot = _random_rotation(rng, n)
        verts = center[None, :] + (reference * radius) @ rot.T
        try:
            sigma = Simplex(tuple(map(tuple, verts)))
        except SimplexError:
            continue
        integral = integrate_over_boundary(w, sigma, order, subdivisions)
        vol = sigma.volume()
        samples.append(SimplexSample(scale, integral, vol, abs(integral) / vol))
    max_ratio = max((s.ratio for s in samples), default=0.0)
    deciles = []
    if samples:
        span = np.log(hi_s) - np.log(lo_s)
        edges = np.exp(np.log(lo_s) + max(span, 1e-9) * np.linspace(0, 1, 11))
        for d in range(10):
            band = [s.ratio for s in samples
                    if edges[d] <= s.scale <= edges[d + 1] or
                    (d == 9 and s.scale >= edges[d])]
            stats = {"scale_lo": float(edges[d]), "scale_hi": float(edges[d + 1]),
                     "count": len(band), "min": 0.0, "q25": 0.0, "median": 0.0,
                     "q75": 0.0, "max": 0.0}
            if band:
                arr = np.asarray(band)
                stats.update(min=float(arr.min()), q25=float(np.quantile(arr, 0.25)),
                             median=float(np.median(arr)),
                             q75=float(np.quantile(arr, 0.75)), max=float(arr.max()))
            deciles.append(stats)
    report = FlatnessReport(
        samples=samples,
        max_ratio=max_ratio,
        coefficient_bound=w.coefficient_bound(),
        scale_deciles=deciles,
        params={
            "sample_count": sample_count, "seed": seed,
            "scale_range": [lo_s, hi_s], "quadrature_order": order,
            "subdivisions": subdivisions, "resolution": w.resolution,
            "degree": k, "ambient_dim": n,
        },
        nprime=nprime,
        verdict=(max_ratio <= nprime) if nprime is not None else None,
    )
    return report
