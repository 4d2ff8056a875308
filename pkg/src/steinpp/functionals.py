"""1-Lipschitz test functionals on configurations.

Lipschitz is meant against the total-variation metric on finite
configurations: inserting or deleting one unit of mass may move the value
by at most the certified constant (1 for everything shipped here).  Each
functional also knows its insertion gradient over quadrature nodes, which
keeps generator and semigroup estimates vectorized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import BoxRegion, Configuration, Grid, Space, dyadic_boxes

__all__ = [
    "TestFunctional", "BoxCount", "CappedCount", "Cardinality",
    "SaturatedCardinality", "default_family", "certify_lipschitz",
]


@dataclass(frozen=True)
class TestFunctional:
    """F: configurations -> R with a certified Lipschitz constant <= 1."""

    id: str
    fn: Callable
    lipschitz: float = 1.0

    def __call__(self, config: Configuration) -> float:
        return float(self.fn(config))

    def gradient(self, x, config: Configuration) -> float:
        """F(phi + x) - F(phi)."""
        return float(self.fn(config.add(x)) - self.fn(config))

    def gradient_profile(self, nodes, config: Configuration, space: Space
                         ) -> np.ndarray:
        if isinstance(nodes, np.ndarray) and nodes.ndim == 2:
            items = [tuple(r) for r in nodes]
        else:
            items = [int(i) for i in np.asarray(nodes).ravel()]
        return np.array([self.gradient(x, config) for x in items])

    def deletion(self, y, config: Configuration) -> float:
        """F(phi - y) - F(phi)."""
        return float(self.fn(config.remove(y)) - self.fn(config))


class BoxCount(TestFunctional):
    """F(phi) = phi(A)."""

    def __init__(self, region: BoxRegion, space: Space, id: str | None = None):
        object.__setattr__(self, "region", region)
        object.__setattr__(self, "space", space)
        super().__init__(id or f"count{region.lower}-{region.upper}",
                         lambda cfg: cfg.count_in(region, space))

    def gradient_profile(self, nodes, config, space):
        coords = nodes if (isinstance(nodes, np.ndarray) and nodes.ndim == 2) \
            else space.locations[np.asarray(nodes, dtype=int)]
        return self.region.indicator(np.atleast_2d(coords)).astype(float)

    def deletion(self, y, config):
        coords = self.space.point_coords([y])
        return -float(self.region.indicator(coords)[0])


class CappedCount(TestFunctional):
    """F(phi) = min(phi(A), k)."""

    def __init__(self, region: BoxRegion, k: int, space: Space,
                 id: str | None = None):
        object.__setattr__(self, "region", region)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "k", int(k))
        super().__init__(id or f"cap{k}",
                         lambda cfg: min(cfg.count_in(region, space), k))

    def gradient_profile(self, nodes, config, space):
        coords = nodes if (isinstance(nodes, np.ndarray) and nodes.ndim == 2) \
            else space.locations[np.asarray(nodes, dtype=int)]
        inside = self.region.indicator(np.atleast_2d(coords)).astype(float)
        return inside * float(config.count_in(self.region, space) < self.k)


class Cardinality(TestFunctional):
    """F(phi) = |phi|."""

    def __init__(self):
        super().__init__("cardinality", lambda cfg: len(cfg))

    def gradient_profile(self, nodes, config, space):
        return np.ones(np.shape(nodes)[0])

    def deletion(self, y, config):
        return -1.0


class SaturatedCardinality(TestFunctional):
    """F(phi) = 1 - exp(-|phi|)."""

    def __init__(self):
        super().__init__("saturated_cardinality",
                         lambda cfg: 1.0 - math.exp(-len(cfg)))

    def gradient_profile(self, nodes, config, space):
        n = len(config)
        step = math.exp(-n) - math.exp(-(n + 1))
        return np.full(np.shape(nodes)[0], step)

    def deletion(self, y, config):
        n = len(config)
        return (1.0 - math.exp(-(n - 1))) - (1.0 - math.exp(-n))


def default_family(space: Space, levels: int = 3,
                   caps=(1, 2, 4)) -> list[TestFunctional]:
    """Counting functionals on dyadic boxes (``levels`` refinements),
    capped total counts, the cardinality and its saturation."""
    fams: list[TestFunctional] = []
    for i, region in enumerate(dyadic_boxes(space, levels)):
        fams.append(BoxCount(region, space, id=f"box[{i}]"))
    whole = dyadic_boxes(space, 1)[0]
    for k in caps:
        fams.append(CappedCount(whole, k, space, id=f"cap[{k}]"))
    fams.append(Cardinality())
    fams.append(SaturatedCardinality())
    return fams


def certify_lipschitz(functional: TestFunctional, space: Space, rng,
                      trials: int = 10_000, max_points: int = 8) -> bool:
    """Randomized insert/delete certification of |DF| <= lipschitz."""
    if isinstance(space, Grid):
        def rand_point():
            return int(rng.integers(space.n_cells))
    else:
        def rand_point():
            return tuple(space.uniform_points(1, rng)[0])

    tol = functional.lipschitz + 1e-9
    for _ in range(trials):
        n = int(rng.integers(0, max_points + 1))
        cfg = Configuration([rand_point() for _ in range(n)])
        x = rand_point()
        if abs(functional.gradient(x, cfg)) > tol:
            return False
        if len(cfg):
            pts = list(cfg)
            y = pts[int(rng.integers(len(pts)))]
            if abs(functional.deletion(y, cfg)) > tol:
                return False
    return True
