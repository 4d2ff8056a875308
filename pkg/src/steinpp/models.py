"""Point-process models and exact samplers.

Every sampler is a pure function of (model, rng); re-running with the
same Philox stream reproduces the draw bit for bit.  Rejection samplers
cap their attempts and raise :class:`AcceptanceFailure` instead of
looping forever.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .geometry import (
    Box, Configuration, Disk, Grid, IntensityMeasure, Space,
)
from .kernels import Kernel, sample_discrete_dpp

__all__ = [
    "AcceptanceFailure", "CountDistribution",
    "Condition", "HardcoreR", "BoundedN", "CustomCondition",
    "PoissonPP", "BinomialPP", "PurelyRandomPP", "ConditionalPoissonPP",
    "GibbsPairwise", "DiscreteDPP", "CoxAtomic", "SuperposeModel",
    "LabeledConfiguration",
    "sample_poisson", "sample_binomial", "sample_purely_random",
    "sample_conditional", "sample_gibbs_pairwise", "sample_alpha_dpp",
    "sample", "sample_many",
]

DEFAULT_MAX_ATTEMPTS = 10**6


class AcceptanceFailure(RuntimeError):
    """Rejection sampler exceeded its attempt budget."""

    def __init__(self, attempts: int, accepted: int = 0):
        self.attempts = attempts
        self.acceptance_rate = accepted / attempts if attempts else 0.0
        super().__init__(
            f"no acceptance after {attempts} attempts "
            f"(empirical rate {self.acceptance_rate:.3g})"
        )


# ---------------------------------------------------------------------------
# count distributions


class CountDistribution:
    """Law of a total point count, stored as p_0..p_N with tiny tail."""

    def __init__(self, probs: Sequence[float], tail_bound: float = 0.0):
        p = np.asarray(probs, dtype=float)
        if p.ndim != 1 or len(p) == 0:
            raise ValueError("need a 1-d vector of probabilities")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite and >= 0")
        s = math.fsum(p)
        if not (1 - 1e-12 <= s <= 1 + 1e-12):
            raise ValueError(f"probabilities sum to {s}, not 1")
        self.probs = p
        self.probs.setflags(write=False)
        self.tail_bound = float(tail_bound)

    @property
    def n_max(self) -> int:
        return len(self.probs) - 1

    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.probs)), self.probs))

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.probs)

    def sample_counts(self, n: int, rng) -> np.ndarray:
        return rng.choice(len(self.probs), size=n, p=self.probs / self.probs.sum())

    def all_positive(self) -> bool:
        return bool(np.all(self.probs > 0))

    @staticmethod
    def poisson(lam: float, tail: float = 1e-12) -> "CountDistribution":
        """Poisson weights by upward recurrence, truncated once the
        remaining mass drops below ``tail`` (not renormalized; the stored
        vector keeps the exact floating recurrence p_{n+1} = p_n*lam/(n+1))."""
        p = [math.exp(-lam)]
        acc = p[0]
        n = 0
        while 1.0 - acc >= tail:
            p.append(p[-1] * lam / (n + 1))
            acc = math.fsum(p)
            n += 1
            if n > 4000:
                raise ValueError("Poisson truncation did not converge")
        return CountDistribution(p, tail_bound=max(0.0, 1.0 - acc))

    @staticmethod
    def geometric(ratio: float = 0.5, tail: float = 1e-12) -> "CountDistribution":
        """p_n = (1-ratio) * ratio^n (ratio=0.5 gives p_n = 2^-(n+1))."""
        if not 0 < ratio < 1:
            raise ValueError("ratio must be in (0,1)")
        p = []
        acc = 0.0
        n = 0
        while 1.0 - acc >= tail:
            p.append((1 - ratio) * ratio**n)
            acc = math.fsum(p)
            n += 1
        return CountDistribution(p, tail_bound=max(0.0, 1.0 - acc))

    @staticmethod
    def dirac(n: int) -> "CountDistribution":
        p = np.zeros(n + 1)
        p[n] = 1.0
        return CountDistribution(p)

    @staticmethod
    def bernoulli(q: float) -> "CountDistribution":
        return CountDistribution([1.0 - q, q])


# ---------------------------------------------------------------------------
# conditions


class Condition:
    """Measurable set of configurations used by conditional samplers."""

    decreasing = False

    def holds(self, config: Configuration, space: Space) -> bool:
        raise NotImplementedError

    def holds_adding(self, x, config: Configuration, space: Space) -> bool:
        """Whether config + x satisfies the condition (config assumed in C)."""
        return self.holds(config.add(x), space)


@dataclass(frozen=True)
class HardcoreR(Condition):
    """All pairwise distances at least R."""

    R: float
    decreasing = True

    def holds(self, config: Configuration, space: Space) -> bool:
        if len(config) < 2:
            return True
        if max(config.mult) > 1:
            return False
        c = config.coords(space, expand=False)
        d2 = np.sum((c[:, None, :] - c[None, :, :]) ** 2, axis=-1)
        iu = np.triu_indices(len(c), k=1)
        return bool(np.all(d2[iu] >= self.R**2))

    def holds_adding(self, x, config: Configuration, space: Space) -> bool:
        if len(config) == 0:
            return True
        c = config.coords(space, expand=False)
        xc = space.point_coords([x])[0]
        d2 = np.sum((c - xc) ** 2, axis=-1)
        return bool(np.all(d2 >= self.R**2))

    def profile_adding(self, nodes, config: Configuration, space: Space) -> np.ndarray:
        """Vectorized holds_adding over quadrature nodes."""
        if isinstance(space, Grid):
            node_xy = space.locations[np.asarray(nodes, dtype=int)]
        else:
            node_xy = np.atleast_2d(nodes)
        if len(config) == 0:
            return np.ones(node_xy.shape[0], dtype=bool)
        c = config.coords(space, expand=False)
        d2 = ((node_xy[:, None, :] - c[None, :, :]) ** 2).sum(axis=-1)
        return np.all(d2 >= self.R**2, axis=1)


@dataclass(frozen=True)
class BoundedN(Condition):
    """At most N points in total."""

    N: int
    decreasing = True

    def holds(self, config: Configuration, space: Space) -> bool:
        return len(config) <= self.N

    def holds_adding(self, x, config, space) -> bool:
        return len(config) + 1 <= self.N


@dataclass(frozen=True)
class CustomCondition(Condition):
    predicate: Callable[[Configuration, Space], bool]
    decreasing: bool = False

    def holds(self, config: Configuration, space: Space) -> bool:
        return bool(self.predicate(config, space))


ALWAYS = CustomCondition(lambda config, space: True, decreasing=True)


# ---------------------------------------------------------------------------
# model descriptions


@dataclass(frozen=True)
class PoissonPP:
    space: Space
    intensity: IntensityMeasure


@dataclass(frozen=True)
class BinomialPP:
    space: Space
    n_points: int
    density: IntensityMeasure  # probability density on the space


@dataclass(frozen=True)
class PurelyRandomPP:
    space: Space
    counts: CountDistribution
    density: IntensityMeasure


@dataclass(frozen=True)
class ConditionalPoissonPP:
    space: Space
    intensity: IntensityMeasure
    condition: Condition
    max_attempts: int = DEFAULT_MAX_ATTEMPTS


@dataclass(frozen=True)
class GibbsPairwise:
    """Pairwise Gibbs model with nonnegative potentials.

    psi1(coords) -> (N,) and psi2(coords_a, coords_b) -> (N,M) must be
    vectorized on coordinate arrays; eps is sup psi2.
    """

    space: Space
    theta: float
    psi1: Callable
    psi2: Callable
    eps: float
    max_attempts: int = DEFAULT_MAX_ATTEMPTS

    def energy(self, config: Configuration) -> float:
        """Total pairwise potential energy of a configuration."""
        c = config.coords(self.space)
        if len(c) == 0:
            return 0.0
        u = float(np.sum(self.psi1(c)))
        if len(c) > 1:
            pair = np.asarray(self.psi2(c, c), dtype=float)
            iu = np.triu_indices(len(c), k=1)
            u += float(np.sum(pair[iu]))
        return u


@dataclass(frozen=True)
class DiscreteDPP:
    kernel: Kernel

    @property
    def space(self) -> Grid:
        return self.kernel.grid


@dataclass(frozen=True)
class CoxAtomic:
    """Cox process whose directing law is a finite mixture of deterministic
    intensity measures."""

    space: Space
    atoms: tuple  # ((weight, IntensityMeasure), ...)

    def __post_init__(self):
        w = np.asarray([a[0] for a in self.atoms], dtype=float)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("mixture weights must be >= 0 and sum to 1")


@dataclass(frozen=True)
class SuperposeModel:
    components: tuple

    @property
    def space(self) -> Space:
        return self.components[0].space


Model = (PoissonPP | BinomialPP | PurelyRandomPP | ConditionalPoissonPP
         | GibbsPairwise | DiscreteDPP | CoxAtomic | SuperposeModel)


class LabeledConfiguration:
    """Superposition draw with per-component provenance labels."""

    __slots__ = ("parts",)

    def __init__(self, parts: Sequence[Configuration]):
        self.parts = tuple(parts)

    @property
    def combined(self) -> Configuration:
        out = Configuration()
        for p in self.parts:
            out = out.union(p)
        return out

    def __len__(self):
        return sum(len(p) for p in self.parts)


# ---------------------------------------------------------------------------
# i.i.d. placement


def _place(n: int, density: IntensityMeasure, space: Space, rng) -> list:
    """n i.i.d. points with law density/total, as canonical space points.

    Grid: weighted categorical over cells.  Box/Disk: uniform proposals
    thinned by density/bound (plain rejection; exact for any bounded
    density).  Constant densities skip the thinning round entirely.
    """
    if n == 0:
        return []
    if isinstance(space, Grid):
        w = density.grid_values * space.weights
        p = w / w.sum()
        idx = rng.choice(space.n_cells, size=n, p=p)
        return [int(i) for i in idx]
    if density.constant is not None:
        pts = space.uniform_points(n, rng)
        return [tuple(row) for row in pts]
    if density.bound is None or not np.isfinite(density.bound):
        raise ValueError("rejection placement needs a finite sup bound on the density")
    out = []
    guard = 0
    while len(out) < n:
        m = max(n - len(out), 16)
        cand = space.uniform_points(m, rng)
        accept = rng.random(m) * density.bound < density.at(cand)
        for row in cand[accept][: n - len(out)]:
            out.append(tuple(row))
        guard += 1
        if guard > 10**6:
            raise AcceptanceFailure(guard)
    return out


# ---------------------------------------------------------------------------
# samplers


def sample_poisson(intensity: IntensityMeasure, space: Space, rng) -> Configuration:
    """Poisson draw: count ~ Poisson(total mass), then i.i.d. placement."""
    total = intensity.total()
    if not np.isfinite(total):
        raise ValueError("Poisson sampling needs a finite total intensity")
    if total == 0.0:
        return Configuration()
    n = int(rng.poisson(total))
    return Configuration(_place(n, intensity, space, rng))


def sample_binomial(n_points: int, density: IntensityMeasure, space: Space,
                    rng) -> Configuration:
    if n_points < 0:
        raise ValueError("need n_points >= 0")
    return Configuration(_place(int(n_points), density, space, rng))


def sample_purely_random(counts: CountDistribution, density: IntensityMeasure,
                         space: Space, rng) -> Configuration:
    n = int(counts.sample_counts(1, rng)[0])
    return sample_binomial(n, density, space, rng)


def sample_conditional(intensity: IntensityMeasure, condition: Condition,
                       space: Space, rng,
                       max_attempts: int = DEFAULT_MAX_ATTEMPTS):
    """First accepted draw of a sequence of independent Poisson copies.

    Returns (configuration, attempts).
    """
    for attempt in range(1, max_attempts + 1):
        config = sample_poisson(intensity, space, rng)
        if condition.holds(config, space):
            return config, attempt
    raise AcceptanceFailure(max_attempts)


_GIBBS_PROPOSALS: dict = {}


def _gibbs_proposal(model: GibbsPairwise, space: Space) -> IntensityMeasure:
    """Proposal intensity exp(-theta*psi1), cached per model instance."""
    key = id(model)
    hit = _GIBBS_PROPOSALS.get(key)
    if hit is None or hit[0] is not model:
        theta, psi1 = model.theta, model.psi1
        base = IntensityMeasure(
            space,
            lambda pts: np.exp(-theta * np.asarray(psi1(np.atleast_2d(pts)), dtype=float)),
            bound=1.0,
        )
        base.total()
        _GIBBS_PROPOSALS[key] = (model, base)
        hit = _GIBBS_PROPOSALS[key]
    return hit[1]


def sample_gibbs_pairwise(model: GibbsPairwise, space: Space, rng,
                          max_attempts: int | None = None):
    """Exact rejection draw of a pairwise Gibbs law with psi2 >= 0.

    Proposals follow a Poisson process with intensity exp(-theta*psi1);
    a proposal with points x_1..x_k is accepted with probability
    exp(-theta * sum_{i<j} psi2(x_i, x_j)) <= 1, which cancels the
    proposal's first-order factor exactly against the target Janossy
    weight exp(-theta*U).
    """
    cap = max_attempts or model.max_attempts
    theta, psi2 = model.theta, model.psi2
    base = _gibbs_proposal(model, space)
    for attempt in range(1, cap + 1):
        config = sample_poisson(base, space, rng)
        c = config.coords(space)
        if len(c) > 1:
            pair = np.asarray(psi2(c, c), dtype=float)
            iu = np.triu_indices(len(c), k=1)
            energy = float(np.sum(pair[iu]))
        else:
            energy = 0.0
        if energy == 0.0 or rng.random() < math.exp(-theta * energy):
            return config, attempt
    raise AcceptanceFailure(cap)


def sample_alpha_dpp(kernel: Kernel, rng) -> Configuration:
    """Draw from an alpha-determinantal law with alpha = -1 or -1/n.

    alpha = -1/n is realized as the independent superposition of n draws
    of the determinantal process with kernel K/n.
    """
    n = kernel.alpha_denominator
    if n == 1:
        return sample_discrete_dpp(kernel, rng)
    sub = kernel.scaled(1.0 / n).with_alpha(-1.0)
    out = Configuration()
    for _ in range(n):
        out = out.union(sample_discrete_dpp(sub, rng))
    return out


def sample(model, rng):
    """Single draw dispatched on the model family."""
    if isinstance(model, PoissonPP):
        return sample_poisson(model.intensity, model.space, rng)
    if isinstance(model, BinomialPP):
        return sample_binomial(model.n_points, model.density, model.space, rng)
    if isinstance(model, PurelyRandomPP):
        return sample_purely_random(model.counts, model.density, model.space, rng)
    if isinstance(model, ConditionalPoissonPP):
        return sample_conditional(model.intensity, model.condition, model.space,
                                  rng, model.max_attempts)[0]
    if isinstance(model, GibbsPairwise):
        return sample_gibbs_pairwise(model, model.space, rng)[0]
    if isinstance(model, DiscreteDPP):
        return sample_alpha_dpp(model.kernel, rng)
    if isinstance(model, CoxAtomic):
        weights = [a[0] for a in model.atoms]
        j = int(rng.choice(len(model.atoms), p=np.asarray(weights) / sum(weights)))
        return sample_poisson(model.atoms[j][1], model.space, rng)
    if isinstance(model, SuperposeModel):
        return LabeledConfiguration([sample(m, rng) for m in model.components])
    raise TypeError(f"cannot sample {type(model).__name__}")


def sample_many(model, n: int, rng) -> list:
    """n independent draws; Poisson models use a batched fast path."""
    if isinstance(model, PoissonPP):
        return _sample_poisson_many(model.intensity, model.space, n, rng)
    return [sample(model, rng) for _ in range(n)]


def _sample_poisson_many(intensity, space, n, rng) -> list[Configuration]:
    total = intensity.total()
    counts = rng.poisson(total, size=n)
    grand = int(counts.sum())
    pts = _place(grand, intensity, space, rng)
    out = []
    pos = 0
    for k in counts:
        out.append(Configuration(pts[pos:pos + k]))
        pos += k
    return out
