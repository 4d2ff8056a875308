"""Ground spaces, reference measures, finite configurations and exact
total-variation metrics.

A *space* is one of

* ``Box``     -- an axis-aligned box in R^d, d in {1,2,3}, with Lebesgue
                 reference measure;
* ``Grid``    -- a finite weighted set of cells (points with strictly
                 positive weights), reference measure = weighted counting
                 measure.  Points of a Grid space are the cell *indices*;
* ``Disk``    -- a disk in the plane (complex numbers identified with R^2),
                 Lebesgue measure, integrated over the bounding box with an
                 indicator mask so that one quadrature path serves all
                 continuous spaces.

A *configuration* is a finite multiset of points of its space.  Point
equality is exact coordinate equality on continuous spaces and cell-index
equality on grids; samplers never produce duplicates except through
explicit superposition, so no epsilon matching is needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "Box", "Grid", "Disk", "Space",
    "BoxRegion", "dyadic_boxes",
    "Configuration", "IntensityMeasure",
    "tv_config", "tv_measures", "integrate",
    "config_to_csv", "config_to_json", "config_from_csv",
]

# default midpoint-rule resolution (cells per axis)
DEFAULT_RESOLUTION = {1: 256, 2: 256, 3: 64}


# ---------------------------------------------------------------------------
# spaces


@dataclass(frozen=True)
class Box:
    """Axis-aligned box [lower_i, upper_i) in R^d, d <= 3."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo, up = tuple(map(float, self.lower)), tuple(map(float, self.upper))
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)
        if not 1 <= len(lo) <= 3 or len(lo) != len(up):
            raise ValueError("Box dimension must be 1, 2 or 3")
        if not all(a < b for a, b in zip(lo, up)):
            raise ValueError("Box needs lower < upper on every axis")

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.upper, self.lower)))

    def total_mass(self) -> float:
        return self.volume

    def point_coords(self, points: Sequence) -> np.ndarray:
        if len(points) == 0:
            return np.empty((0, self.dim))
        return np.asarray(points, dtype=float).reshape(len(points), self.dim)

    def contains(self, coords: np.ndarray) -> np.ndarray:
        lo = np.asarray(self.lower)
        up = np.asarray(self.upper)
        return np.all((coords >= lo) & (coords < up), axis=-1)

    def quadrature(self, resolution: int | None = None):
        """Midpoint-rule nodes ((N,d) array) and weights."""
        res = resolution or DEFAULT_RESOLUTION[self.dim]
        axes = [
            np.linspace(lo, up, res, endpoint=False) + (up - lo) / (2 * res)
            for lo, up in zip(self.lower, self.upper)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        nodes = np.stack([m.ravel() for m in mesh], axis=-1)
        w = self.volume / nodes.shape[0]
        return nodes, np.full(nodes.shape[0], w)

    def uniform_points(self, n: int, rng) -> np.ndarray:
        lo = np.asarray(self.lower)
        up = np.asarray(self.upper)
        return lo + rng.random((n, self.dim)) * (up - lo)

    def bounding_box(self) -> "Box":
        return self


@dataclass(frozen=True)
class Disk:
    """Disk of radius r centred at ``center`` in the plane."""

    radius: float
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("Disk radius must be positive")
        object.__setattr__(self, "center", tuple(map(float, self.center)))

    @property
    def dim(self) -> int:
        return 2

    def total_mass(self) -> float:
        return float(np.pi * self.radius**2)

    def point_coords(self, points: Sequence) -> np.ndarray:
        if len(points) == 0:
            return np.empty((0, 2))
        return np.asarray(points, dtype=float).reshape(len(points), 2)

    def contains(self, coords: np.ndarray) -> np.ndarray:
        d2 = np.sum((coords - np.asarray(self.center)) ** 2, axis=-1)
        return d2 <= self.radius**2

    def bounding_box(self) -> Box:
        cx, cy = self.center
        r = self.radius
        return Box((cx - r, cy - r), (cx + r, cy + r))

    def quadrature(self, resolution: int | None = None):
        nodes, w = self.bounding_box().quadrature(resolution)
        mask = self.contains(nodes)
        return nodes[mask], w[mask]

    def uniform_points(self, n: int, rng) -> np.ndarray:
        box = self.bounding_box()
        out = np.empty((n, 2))
        got = 0
        while got < n:
            cand = box.uniform_points(max(n - got, 16), rng)
            cand = cand[self.contains(cand)]
            take = min(len(cand), n - got)
            out[got:got + take] = cand[:take]
            got += take
        return out


@dataclass(frozen=True)
class Grid:
    """Finite weighted ground space: cells with locations and weights.

    Points of the space are the integer cell indices; ``locations`` only
    give the embedding used for regions, rescaling and plotting.
    """

    locations: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        loc = np.atleast_2d(np.asarray(self.locations, dtype=float))
        w = np.asarray(self.weights, dtype=float)
        if loc.shape[0] != w.shape[0]:
            raise ValueError("locations and weights must align")
        if not np.all(np.isfinite(w)) or not np.all(w > 0):
            raise ValueError("Grid weights must be finite and positive")
        loc.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "weights", w)

    def __eq__(self, other):
        return (
            isinstance(other, Grid)
            and np.array_equal(self.locations, other.locations)
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self):
        return hash((self.locations.tobytes(), self.weights.tobytes()))

    @property
    def n_cells(self) -> int:
        return self.locations.shape[0]

    @property
    def dim(self) -> int:
        return self.locations.shape[1]

    def total_mass(self) -> float:
        return float(self.weights.sum())

    def point_coords(self, points: Sequence) -> np.ndarray:
        idx = np.asarray(points, dtype=int)
        return self.locations[idx].reshape(len(points), self.dim)

    def quadrature(self, resolution: int | None = None):
        return np.arange(self.n_cells), self.weights

    def bounding_box(self) -> Box:
        lo = self.locations.min(axis=0)
        up = self.locations.max(axis=0)
        pad = 1e-9 + (up - lo) * 1e-9
        return Box(tuple(lo - pad), tuple(up + pad))

    @staticmethod
    def regular(box: Box, cells_per_axis: int) -> "Grid":
        nodes, w = box.quadrature(cells_per_axis)
        return Grid(nodes, w)

    @staticmethod
    def polar(radius: float, rings: int, center=(0.0, 0.0)) -> "Grid":
        """Polar tiling of a disk; cell weights are exact sector areas."""
        dr = radius / rings
        locs, ws = [], []
        for i in range(rings):
            r_mid = (i + 0.5) * dr
            n_theta = max(6, int(round(2 * np.pi * r_mid / dr)))
            dtheta = 2 * np.pi / n_theta
            theta = (np.arange(n_theta) + 0.5) * dtheta
            locs.append(
                np.stack([center[0] + r_mid * np.cos(theta),
                          center[1] + r_mid * np.sin(theta)], axis=-1)
            )
            ws.append(np.full(n_theta, r_mid * dr * dtheta))
        return Grid(np.concatenate(locs), np.concatenate(ws))


Space = Box | Grid | Disk


# ---------------------------------------------------------------------------
# regions (measurable test sets; used by counting functionals)


@dataclass(frozen=True)
class BoxRegion:
    """Half-open axis-aligned box used as a test set A."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(map(float, self.lower)))
        object.__setattr__(self, "upper", tuple(map(float, self.upper)))

    def indicator(self, coords: np.ndarray) -> np.ndarray:
        lo = np.asarray(self.lower)
        up = np.asarray(self.upper)
        return np.all((coords >= lo) & (coords < up), axis=-1)

    def measure(self, space: Space, resolution: int | None = None) -> float:
        return integrate(lambda pts: self.indicator(_coords(space, pts)) * 1.0,
                         space, resolution)


def _coords(space: Space, pts) -> np.ndarray:
    """Coordinates of quadrature nodes or stored points, per space kind."""
    if isinstance(space, Grid):
        return space.locations[np.asarray(pts, dtype=int)]
    return np.atleast_2d(np.asarray(pts, dtype=float))


def dyadic_boxes(space: Space, levels: int) -> list[BoxRegion]:
    """Dyadic refinement of the space's bounding box, level-major order."""
    base = space.bounding_box() if not isinstance(space, Box) else space
    lo = np.asarray(base.lower)
    up = np.asarray(base.upper)
    d = base.dim
    out = []
    for level in range(levels):
        k = 2**level
        side = (up - lo) / k
        for flat in range(k**d):
            idx = np.unravel_index(flat, (k,) * d)
            a = lo + side * np.asarray(idx)
            out.append(BoxRegion(tuple(a), tuple(a + side)))
    return out


# ---------------------------------------------------------------------------
# configurations


def _canon_point(p):
    if isinstance(p, (int, np.integer)):
        return int(p)
    if isinstance(p, (float, np.floating)):
        return (float(p),)
    return tuple(float(c) for c in np.asarray(p).ravel())


class Configuration:
    """Finite multiset of points; immutable, order-insensitive equality."""

    __slots__ = ("pts", "mult", "_hash")

    def __init__(self, items: Iterable = (), mults: Iterable[int] | None = None):
        if mults is None:
            pairs = {}
            for p in items:
                p = _canon_point(p)
                pairs[p] = pairs.get(p, 0) + 1
        else:
            pairs = {}
            for p, m in zip(items, mults):
                m = int(m)
                if m < 0:
                    raise ValueError("multiplicities must be >= 1")
                if m:
                    p = _canon_point(p)
                    pairs[p] = pairs.get(p, 0) + m
        order = sorted(pairs)
        self.pts = tuple(order)
        self.mult = tuple(pairs[p] for p in order)
        self._hash = hash((self.pts, self.mult))

    # -- basic protocol

    def __len__(self) -> int:
        return int(sum(self.mult))

    def __eq__(self, other):
        return (isinstance(other, Configuration)
                and self.pts == other.pts and self.mult == other.mult)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        inner = ", ".join(
            f"{p}x{m}" if m > 1 else f"{p}" for p, m in zip(self.pts, self.mult)
        )
        return f"Configuration({inner})"

    def __iter__(self):
        """Iterate points with multiplicity (expanded)."""
        for p, m in zip(self.pts, self.mult):
            for _ in range(m):
                yield p

    # -- multiset algebra

    def add(self, point) -> "Configuration":
        return Configuration(self.pts + (_canon_point(point),),
                             self.mult + (1,))

    def remove(self, point) -> "Configuration":
        p = _canon_point(point)
        if p not in self.pts:
            raise KeyError(f"{p} not in configuration")
        i = self.pts.index(p)
        mult = list(self.mult)
        mult[i] -= 1
        return Configuration(self.pts, mult)

    def union(self, other: "Configuration") -> "Configuration":
        return Configuration(self.pts + other.pts, self.mult + other.mult)

    def multiplicity(self, point) -> int:
        p = _canon_point(point)
        try:
            return self.mult[self.pts.index(p)]
        except ValueError:
            return 0

    # -- geometry helpers

    def coords(self, space: Space, expand: bool = True) -> np.ndarray:
        """(N,dim) coordinates; multiplicities expanded when ``expand``."""
        if not self.pts:
            return np.empty((0, space.dim))
        base = space.point_coords(list(self.pts))
        if not expand:
            return base
        return np.repeat(base, self.mult, axis=0)

    def count_in(self, region, space: Space) -> int:
        if not self.pts:
            return 0
        inside = region.indicator(self.coords(space, expand=False))
        return int(np.dot(inside, self.mult))


EMPTY = Configuration()


def tv_config(a: Configuration, b: Configuration) -> int:
    """Total variation |a \\ b| + |b \\ a| between finite configurations."""
    keys = set(a.pts) | set(b.pts)
    return int(sum(abs(a.multiplicity(p) - b.multiplicity(p)) for p in keys))


# ---------------------------------------------------------------------------
# quadrature and intensity measures


def integrate(f: Callable, space: Space, resolution: int | None = None) -> float:
    """Deterministic integral of f against the reference measure.

    Midpoint rule on Box/Disk (f receives an (N,d) array of nodes), exact
    weighted sum on Grid (f receives the array of cell indices).
    """
    nodes, w = space.quadrature(resolution)
    vals = np.asarray(f(nodes), dtype=float)
    if vals.shape != w.shape:
        vals = np.broadcast_to(vals, w.shape)
    if not np.all(np.isfinite(vals)):
        raise ValueError("integrand produced non-finite values")
    return float(np.dot(vals, w))


class IntensityMeasure:
    """Density m >= 0 against the reference measure of a space.

    ``density`` may be a scalar (constant density), an array of per-cell
    values on a Grid, or a vectorized callable on node batches (coordinate
    arrays for Box/Disk, index arrays for Grid).  ``bound`` is an upper
    bound for m, required by rejection placement on continuous spaces.
    """

    def __init__(self, space: Space, density, bound: float | None = None):
        self.space = space
        if np.isscalar(density):
            c = float(density)
            if c < 0 or not np.isfinite(c):
                raise ValueError("constant density must be finite and >= 0")
            self._values = None if not isinstance(space, Grid) else np.full(space.n_cells, c)
            self._fn = lambda pts, c=c: np.full(np.shape(pts)[0], c)
            self.bound = c if bound is None else float(bound)
            self.constant = c
        elif isinstance(density, np.ndarray) or (
            isinstance(density, (list, tuple)) and isinstance(space, Grid)
        ):
            if not isinstance(space, Grid):
                raise TypeError("tabulated densities require a Grid space")
            vals = np.asarray(density, dtype=float)
            if vals.shape != (space.n_cells,):
                raise ValueError("tabulated density must have one value per cell")
            if np.any(vals < 0) or not np.all(np.isfinite(vals)):
                raise ValueError("density values must be finite and >= 0")
            self._values = vals
            self._fn = lambda idx, v=vals: v[np.asarray(idx, dtype=int)]
            self.bound = float(vals.max()) if bound is None else float(bound)
            self.constant = None
        else:
            self._values = None
            self._fn = density
            self.bound = None if bound is None else float(bound)
            self.constant = None
        self._total = None

    def at(self, pts) -> np.ndarray:
        return np.asarray(self._fn(pts), dtype=float)

    def at_points(self, points: Sequence, space: Space | None = None) -> np.ndarray:
        """Density at stored configuration points."""
        space = space or self.space
        if isinstance(space, Grid):
            return self.at(np.asarray(points, dtype=int))
        return self.at(space.point_coords(points))

    @property
    def grid_values(self) -> np.ndarray:
        if self._values is None:
            raise TypeError("not a tabulated grid density")
        return self._values

    def total(self, resolution: int | None = None) -> float:
        if self._total is None:
            self._total = integrate(self._fn, self.space, resolution)
        return self._total

    def scaled(self, factor: float) -> "IntensityMeasure":
        if self.constant is not None:
            return IntensityMeasure(self.space, self.constant * factor)
        if self._values is not None:
            return IntensityMeasure(self.space, self._values * factor)
        fn = self._fn
        bound = None if self.bound is None else self.bound * factor
        return IntensityMeasure(self.space, lambda pts: factor * np.asarray(fn(pts)), bound)


def tv_measures(m1: IntensityMeasure, m2: IntensityMeasure, space: Space,
                resolution: int | None = None) -> float:
    """Total variation between intensity measures: integral of |m1 - m2|."""
    return integrate(lambda pts: np.abs(m1.at(pts) - m2.at(pts)), space, resolution)


# ---------------------------------------------------------------------------
# serialization (bit-stable: repr round-trip of doubles)


def _fmt(x: float) -> str:
    return repr(float(x))


def config_to_csv(config: Configuration, space: Space) -> str:
    names = ["x", "y", "z"][: space.dim]
    lines = [",".join(names + ["multiplicity"])]
    coords = config.coords(space, expand=False)
    for row, m in zip(coords, config.mult):
        lines.append(",".join([_fmt(c) for c in row] + [str(m)]))
    return "\n".join(lines) + "\n"


def config_to_json(config: Configuration, space: Space) -> str:
    import json

    coords = config.coords(space, expand=False)
    payload = [
        {"point": [float(c) for c in row], "multiplicity": int(m)}
        for row, m in zip(coords, config.mult)
    ]
    return json.dumps(payload, separators=(",", ":"))


def config_from_csv(text: str) -> Configuration:
    lines = [ln for ln in text.strip().splitlines() if ln]
    header = lines[0].split(",")
    d = len(header) - 1
    pts, mult = [], []
    for ln in lines[1:]:
        parts = ln.split(",")
        pts.append(tuple(float(v) for v in parts[:d]))
        mult.append(int(parts[d]))
    return Configuration(pts, mult)
