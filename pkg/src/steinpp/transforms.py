"""Restriction, superposition, thinning and rescaling.

The four operations act on configurations directly and, where the family
is closed under the operation, on model descriptions:

* Poisson is closed under all four (intensity algebra);
* determinantal kernels are closed under restriction, constant-retention
  thinning (kernel scales by beta) and rescaling (kernel values scale by
  1/eps at rescaled cells);
* any family is closed under superposition via a wrapper model.

Everything else raises :class:`NotClosed`; callers then sample the base
model and transform the draws.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geometry import Box, BoxRegion, Configuration, Grid, IntensityMeasure, Space
from .models import (
    DiscreteDPP, LabeledConfiguration, PoissonPP, SuperposeModel,
)

__all__ = [
    "NotClosed", "Restrict", "Superpose", "Thin", "Rescale", "TransformNode",
    "thin_config", "rescale_config", "superpose_configs",
    "restrict_config", "transform_model", "rescale_space",
]


class NotClosed(ValueError):
    """No closed-form transformed model for this (family, transform) pair."""


@dataclass(frozen=True)
class Restrict:
    region: BoxRegion


@dataclass(frozen=True)
class Superpose:
    others: tuple  # additional models superposed on the base


@dataclass(frozen=True)
class Thin:
    """Independent retention; beta is a constant in [0,1] or a callable
    on coordinate arrays."""

    beta: float | Callable


@dataclass(frozen=True)
class Rescale:
    eps: float
    dim: int


TransformNode = Restrict | Superpose | Thin | Rescale


# ---------------------------------------------------------------------------
# configuration-level operations


def _retention(beta, coords: np.ndarray) -> np.ndarray:
    if callable(beta):
        vals = np.asarray(beta(coords), dtype=float)
    else:
        vals = np.full(coords.shape[0], float(beta))
    if np.any(vals < 0) or np.any(vals > 1):
        raise ValueError("retention probabilities must lie in [0, 1]")
    return vals


def thin_config(config: Configuration, beta, space: Space, rng) -> Configuration:
    """Keep each point independently with probability beta(point);
    multiplicities thin binomially."""
    if not config.pts:
        return config
    coords = config.coords(space, expand=False)
    probs = _retention(beta, coords)
    kept = rng.binomial(config.mult, probs)
    return Configuration(config.pts, kept)


def rescale_config(config: Configuration, eps: float, dim: int) -> Configuration:
    """Map every point x to eps^(1/dim) x (continuous spaces only)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    s = eps ** (1.0 / dim)
    pts = [tuple(s * c for c in p) for p in config.pts]
    return Configuration(pts, config.mult)


def superpose_configs(configs: Sequence[Configuration]) -> Configuration:
    out = Configuration()
    for c in configs:
        if isinstance(c, LabeledConfiguration):
            c = c.combined
        out = out.union(c)
    return out


def restrict_config(config: Configuration, region: BoxRegion, space: Space) -> Configuration:
    if not config.pts:
        return config
    inside = region.indicator(config.coords(space, expand=False))
    return Configuration(
        [p for p, keep in zip(config.pts, inside) if keep],
        [m for m, keep in zip(config.mult, inside) if keep],
    )


def rescale_space(space: Space, eps: float) -> Space:
    s = eps ** (1.0 / space.dim)
    if isinstance(space, Box):
        return Box(tuple(s * v for v in space.lower), tuple(s * v for v in space.upper))
    if isinstance(space, Grid):
        return Grid(space.locations * s, space.weights * eps)
    raise NotClosed("rescaling is defined for Box and Grid spaces")


# ---------------------------------------------------------------------------
# model-level transforms


def transform_model(model, node: TransformNode):
    """Closed-form transformed model, or NotClosed."""
    if isinstance(node, Superpose):
        return SuperposeModel((model, *node.others))

    if isinstance(model, PoissonPP):
        return _transform_poisson(model, node)
    if isinstance(model, DiscreteDPP):
        return _transform_dpp(model, node)
    raise NotClosed(
        f"{type(model).__name__} has no closed form under {type(node).__name__}"
    )


def _transform_poisson(model: PoissonPP, node) -> PoissonPP:
    space, m = model.space, model.intensity
    if isinstance(node, Thin):
        if callable(node.beta):
            beta = node.beta
            fn = m.at
            bound = m.bound
            dens = IntensityMeasure(
                space,
                lambda pts: np.asarray(beta(_node_coords(space, pts)), dtype=float) * fn(pts),
                bound=bound,
            )
        else:
            dens = m.scaled(float(node.beta))
        return PoissonPP(space, dens)
    if isinstance(node, Restrict):
        region = node.region
        fn = m.at
        dens = IntensityMeasure(
            space,
            lambda pts: fn(pts) * region.indicator(_node_coords(space, pts)),
            bound=m.bound,
        )
        return PoissonPP(space, dens)
    if isinstance(node, Rescale):
        eps, d = node.eps, node.dim
        if d != space.dim:
            raise ValueError("rescale dimension must match the space")
        new_space = rescale_space(space, eps)
        if isinstance(space, Grid):
            return PoissonPP(new_space, IntensityMeasure(new_space, m.grid_values / eps))
        fn = m.at
        s = eps ** (1.0 / d)
        dens = IntensityMeasure(
            new_space,
            lambda pts: fn(np.asarray(pts) / s) / eps,
            bound=None if m.bound is None else m.bound / eps,
        )
        if m.constant is not None:
            dens = IntensityMeasure(new_space, m.constant / eps)
        return PoissonPP(new_space, dens)
    raise NotClosed(f"unsupported Poisson transform {type(node).__name__}")


def _transform_dpp(model: DiscreteDPP, node) -> DiscreteDPP:
    k = model.kernel
    if isinstance(node, Thin):
        if callable(node.beta):
            raise NotClosed("determinantal thinning is closed for constant beta only")
        return DiscreteDPP(k.scaled(float(node.beta)))
    if isinstance(node, Restrict):
        mask = node.region.indicator(k.grid.locations)
        return DiscreteDPP(k.restricted(mask))
    if isinstance(node, Rescale):
        if node.dim != k.grid.dim:
            raise ValueError("rescale dimension must match the grid")
        return DiscreteDPP(k.rescaled(node.eps))
    raise NotClosed(f"unsupported determinantal transform {type(node).__name__}")


def _node_coords(space, pts):
    if isinstance(space, Grid):
        return space.locations[np.asarray(pts, dtype=int)]
    return np.atleast_2d(np.asarray(pts, dtype=float))
