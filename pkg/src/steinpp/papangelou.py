"""Papangelou conditional intensities, their transform rules, and the
GNZ-identity verification harness.

An evaluator is the deterministic map (x, configuration) -> c(x, phi) >= 0
attached to a model, together with an optional vectorized profile over
quadrature nodes (the hot path of every Monte-Carlo check).  The defining
identity

    E[ sum_{x in Phi} u(x, Phi - x) ] = integral E[c(x, Phi) u(x, Phi)] dl(x)

is tested by :func:`gnz_check`; :func:`janossy_ratio_oracle` provides an
independent cross-check of every closed form through explicit Janossy
functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .geometry import Configuration, Grid, IntensityMeasure, Space, integrate
from .kernels import Kernel, alpha_determinant
from .models import (
    BoundedN, Condition, ConditionalPoissonPP, CountDistribution, DiscreteDPP,
    GibbsPairwise, HardcoreR, LabeledConfiguration, PoissonPP, PurelyRandomPP,
    SuperposeModel, sample_many,
)
from .reports import CheckRow
from .transforms import NotClosed, Rescale, Restrict, Superpose, Thin, transform_model

__all__ = [
    "PapangelouEvaluator", "RepulsivenessReport", "UnsupportedFamily",
    "pap_poisson", "pap_purely_random", "pap_conditional", "pap_gibbs",
    "pap_dpp", "pap_transform", "pap_thinned_config",
    "papangelou_evaluator", "janossy_ratio_oracle",
    "UFunc", "U_ONE", "box_count_u",
    "gnz_check", "gnz_check_many", "classify_prpp", "check_structural_lemmas",
]


class UnsupportedFamily(ValueError):
    pass


@dataclass
class PapangelouEvaluator:
    """c(x, phi) with an optional vectorized node profile.

    ``reference`` documents the measure the intensity is taken against
    (the space's own reference measure unless noted otherwise).
    """

    model_tag: str
    fn: Callable
    profile_fn: Callable | None = None
    reference: str = "space reference measure"
    wants_labels: bool = False
    model: object = None

    def __call__(self, x, config) -> float:
        return float(self.fn(x, config))

    def profile(self, nodes, config) -> np.ndarray:
        if self.profile_fn is not None:
            return np.asarray(self.profile_fn(nodes, config), dtype=float)
        if isinstance(nodes, np.ndarray) and nodes.ndim == 2:
            items = [tuple(row) for row in nodes]
        else:
            items = [int(i) for i in np.asarray(nodes).ravel()]
        return np.array([self.fn(x, config) for x in items], dtype=float)


@dataclass(frozen=True)
class RepulsivenessReport:
    family: str
    repulsive: bool
    weakly_repulsive: bool
    witness_repulsive: int | None = None
    witness_weak: int | None = None

    @property
    def witness(self) -> int | None:
        """First violated index of the strongest failed property."""
        if not self.weakly_repulsive:
            return self.witness_weak
        if not self.repulsive:
            return self.witness_repulsive
        return None


# ---------------------------------------------------------------------------
# closed forms per family


def pap_poisson(intensity: IntensityMeasure) -> PapangelouEvaluator:
    """c(x, phi) = m(x), independent of the configuration."""
    space = intensity.space

    def fn(x, config):
        return float(intensity.at_points([x], space)[0])

    return PapangelouEvaluator(
        "poisson", fn, profile_fn=lambda nodes, config: intensity.at(nodes)
    )


def pap_purely_random(counts: CountDistribution, density: IntensityMeasure
                      ) -> PapangelouEvaluator:
    """c(x, {x_1..x_n}) = (n+1) p_{n+1}/p_n q(x); needs p_n > 0 throughout."""
    if not counts.all_positive():
        raise ValueError("purely random intensities need p_n > 0 on the stored range")
    p = counts.probs
    space = density.space

    def ratio(n: int) -> float:
        if n + 1 >= len(p):
            raise ValueError(f"count {n + 1} beyond the stored truncation")
        return (n + 1) * p[n + 1] / p[n]

    def fn(x, config):
        return ratio(len(config)) * float(density.at_points([x], space)[0])

    def profile(nodes, config):
        return ratio(len(config)) * density.at(nodes)

    return PapangelouEvaluator("purely_random", fn, profile_fn=profile)


def pap_conditional(intensity: IntensityMeasure, condition: Condition
                    ) -> PapangelouEvaluator:
    """c(x, phi) = m(x) 1{phi + x in C} 1{phi in C}."""
    space = intensity.space

    def fn(x, config):
        if not condition.holds(config, space):
            return 0.0
        if not condition.holds_adding(x, config, space):
            return 0.0
        return float(intensity.at_points([x], space)[0])

    def profile(nodes, config):
        m = intensity.at(nodes)
        if not condition.holds(config, space):
            return np.zeros_like(m)
        if isinstance(condition, HardcoreR):
            return m * condition.profile_adding(nodes, config, space)
        if isinstance(condition, BoundedN):
            return m * float(len(config) + 1 <= condition.N)
        if isinstance(nodes, np.ndarray) and nodes.ndim == 2:
            items = [tuple(r) for r in nodes]
        else:
            items = [int(i) for i in np.asarray(nodes).ravel()]
        ok = np.array([condition.holds_adding(x, config, space) for x in items])
        return m * ok

    return PapangelouEvaluator("conditional_poisson", fn, profile_fn=profile)


def pap_gibbs(theta: float, psi1: Callable, psi2: Callable, space: Space
              ) -> PapangelouEvaluator:
    """c(x, phi) = exp(-theta (psi1(x) + sum_{y in phi} psi2(x, y)))."""

    def local_energy(xc: np.ndarray, config: Configuration) -> np.ndarray:
        e = np.asarray(psi1(xc), dtype=float)
        if len(config):
            yc = config.coords(space)
            e = e + np.sum(np.asarray(psi2(xc, yc), dtype=float), axis=1)
        return e

    def fn(x, config):
        xc = space.point_coords([x])
        return float(np.exp(-theta * local_energy(xc, config))[0])

    def profile(nodes, config):
        xc = nodes if (isinstance(nodes, np.ndarray) and nodes.ndim == 2) \
            else space.point_coords(list(np.asarray(nodes).ravel()))
        return np.exp(-theta * local_energy(np.atleast_2d(xc), config))

    return PapangelouEvaluator("gibbs_pairwise", fn, profile_fn=profile)


def pap_dpp(kernel: Kernel) -> PapangelouEvaluator:
    """Determinant-ratio intensity c(x, phi) = det_a J(x phi) / det_a J(phi).

    alpha = -1 goes through Schur complements of the J matrix (vectorized
    over cells); alpha = -1/n falls back to the brute-force
    alpha-determinant and is limited to |phi| + 1 <= 8.  A vanishing
    denominator returns 0 by the indicator convention.
    """
    jf = kernel.j_function_values()
    n_cells = kernel.grid.n_cells

    def idx_of(config: Configuration) -> list[int]:
        out = []
        for p, m in zip(config.pts, config.mult):
            out.extend([int(p)] * m)
        return out

    def profile_det(config: Configuration) -> np.ndarray:
        rows = idx_of(config)
        if len(rows) == 0:
            return np.diag(jf).copy()
        sub = jf[np.ix_(rows, rows)]
        try:
            sol = np.linalg.solve(sub, jf[np.ix_(rows, range(n_cells))])
        except np.linalg.LinAlgError:
            return np.zeros(n_cells)
        vals = np.diag(jf) - np.einsum("ij,ij->j", jf[np.ix_(rows, range(n_cells))], sol)
        vals[rows] = 0.0
        return np.maximum(vals, 0.0)

    if kernel.alpha_denominator == 1:

        def fn(x, config):
            return float(profile_det(config)[int(x)])

        def profile(nodes, config):
            return profile_det(config)[np.asarray(nodes, dtype=int)]

        return PapangelouEvaluator("dpp", fn, profile_fn=profile, model=DiscreteDPP(kernel))

    alpha = kernel.alpha

    def fn_alpha(x, config):
        rows = idx_of(config)
        denom = alpha_determinant(jf[np.ix_(rows, rows)], alpha)
        if denom == 0.0:
            return 0.0
        top = rows + [int(x)]
        num = alpha_determinant(jf[np.ix_(top, top)], alpha)
        return max(num / denom, 0.0)

    return PapangelouEvaluator("alpha_dpp", fn_alpha, model=DiscreteDPP(kernel))


def papangelou_evaluator(model) -> PapangelouEvaluator:
    """Closed-form evaluator for a model description."""
    if isinstance(model, PoissonPP):
        ev = pap_poisson(model.intensity)
    elif isinstance(model, PurelyRandomPP):
        ev = pap_purely_random(model.counts, model.density)
    elif isinstance(model, ConditionalPoissonPP):
        ev = pap_conditional(model.intensity, model.condition)
    elif isinstance(model, GibbsPairwise):
        ev = pap_gibbs(model.theta, model.psi1, model.psi2, model.space)
    elif isinstance(model, DiscreteDPP):
        ev = pap_dpp(model.kernel)
    elif isinstance(model, SuperposeModel):
        parts = [papangelou_evaluator(m) for m in model.components]
        return _superpose_evaluator(parts)
    else:
        raise UnsupportedFamily(f"no Papangelou closed form for {type(model).__name__}")
    ev.model = model
    return ev


def _superpose_evaluator(parts: Sequence[PapangelouEvaluator]) -> PapangelouEvaluator:
    """Sum of component evaluators, each fed its own labeled component.

    The sum is a workable stand-in for the superposition's intensity only
    on component-labeled configurations, which the superposition sampler
    provides.
    """

    def fn(x, labeled: LabeledConfiguration):
        return float(sum(ev(x, part) for ev, part in zip(parts, labeled.parts)))

    def profile(nodes, labeled: LabeledConfiguration):
        acc = None
        for ev, part in zip(parts, labeled.parts):
            v = ev.profile(nodes, part)
            acc = v if acc is None else acc + v
        return acc

    return PapangelouEvaluator(
        "superposition", fn, profile_fn=profile,
        reference="space reference measure (component-labeled configurations)",
        wants_labels=True,
    )


def pap_transform(base: PapangelouEvaluator, node) -> PapangelouEvaluator:
    """Transform rule for an evaluator; closed-form cases only."""
    if isinstance(node, Restrict):
        region = node.region
        space = _space_of(base)

        def fn(x, config):
            inside = bool(region.indicator(space.point_coords([x]))[0])
            return base.fn(x, config) * inside if inside else 0.0

        def profile(nodes, config):
            coords = nodes if (isinstance(nodes, np.ndarray) and nodes.ndim == 2) \
                else space.point_coords(list(np.asarray(nodes).ravel()))
            return base.profile(nodes, config) * region.indicator(np.atleast_2d(coords))

        return PapangelouEvaluator(base.model_tag + "|restricted", fn, profile_fn=profile,
                                   wants_labels=base.wants_labels)

    if isinstance(node, Superpose):
        others = [papangelou_evaluator(m) for m in node.others]
        return _superpose_evaluator([base, *others])

    if isinstance(node, Rescale):
        eps, d = node.eps, node.dim
        s = eps ** (1.0 / d)

        def fn(x, config):
            back = tuple(c / s for c in x)
            shrunk = Configuration([tuple(c / s for c in p) for p in config.pts],
                                   config.mult)
            return base.fn(back, shrunk) / eps

        def profile(nodes, config):
            shrunk = Configuration([tuple(c / s for c in p) for p in config.pts],
                                   config.mult)
            return base.profile(np.asarray(nodes, dtype=float) / s, shrunk) / eps

        return PapangelouEvaluator(base.model_tag + "|rescaled", fn, profile_fn=profile)

    if isinstance(node, Thin):
        if base.model is None:
            raise NotClosed(
                "thinning needs a conditional expectation of c given the "
                "thinned configuration; closed only for Poisson and "
                "constant-retention determinantal models"
            )
        return papangelou_evaluator(transform_model(base.model, node))

    raise NotClosed(f"unsupported evaluator transform {type(node).__name__}")


def _space_of(ev: PapangelouEvaluator):
    if ev.model is not None:
        return ev.model.space
    raise ValueError("evaluator carries no space information")


def pap_thinned_config(config: Configuration, p, space: Space):
    """Intensity of an independent thinning of one fixed configuration.

    Relative to the atomic reference measure p(x) phi(dx):
    c(x, eta) = 1{x in phi - eta} / (1 - p(x)).

    Returns (evaluator, reference_points, reference_weights): the atoms of
    the reference measure and their masses p(x) * multiplicity.
    """
    coords = config.coords(space, expand=False)
    if callable(p):
        pv = np.asarray(p(coords), dtype=float)
    else:
        pv = np.full(len(config.pts), float(p))
    if np.any(pv >= 1.0) or np.any(pv < 0):
        raise ValueError("retention must satisfy 0 <= p(x) < 1 at every point")
    pmap = dict(zip(config.pts, pv))

    def fn(x, eta: Configuration):
        left = config.multiplicity(x) - eta.multiplicity(x)
        if left <= 0:
            return 0.0
        return 1.0 / (1.0 - pmap[_key(x)])

    def _key(x):
        return x if x in pmap else Configuration([x]).pts[0]

    ev = PapangelouEvaluator(
        "thinned_configuration", fn,
        reference="atomic measure p(x) phi(dx) on the support of phi",
    )
    ref_pts = list(config.pts)
    ref_w = pv * np.asarray(config.mult, dtype=float)
    return ev, ref_pts, ref_w


# ---------------------------------------------------------------------------
# Janossy oracle


def janossy_ratio_oracle(model, x, config: Configuration) -> float:
    """j(x phi)/j(phi) computed from explicit Janossy functions.

    Independent of the pap_* closed forms; constants that cancel in the
    ratio (normalizations, partition functions) are dropped.  Supports
    Poisson, purely random, conditional Poisson and Gibbs; determinantal
    models are rejected.
    """
    if len(config) > 12:
        raise ValueError("oracle limited to |phi| <= 12 (factorial growth)")
    if isinstance(model, PoissonPP):
        m = model.intensity

        def j(cfg):
            vals = m.at_points(list(cfg), model.space) if len(cfg) else np.array([])
            return float(np.prod(vals)) if len(cfg) else 1.0

    elif isinstance(model, PurelyRandomPP):
        p = model.counts.probs
        q = model.density

        def j(cfg):
            n = len(cfg)
            if n >= len(p):
                return 0.0
            vals = q.at_points(list(cfg), model.space) if n else np.array([])
            return p[n] * math.factorial(n) * (float(np.prod(vals)) if n else 1.0)

    elif isinstance(model, ConditionalPoissonPP):
        m = model.intensity
        cond = model.condition

        def j(cfg):
            if not cond.holds(cfg, model.space):
                return 0.0
            vals = m.at_points(list(cfg), model.space) if len(cfg) else np.array([])
            return float(np.prod(vals)) if len(cfg) else 1.0

    elif isinstance(model, GibbsPairwise):

        def j(cfg):
            return math.exp(-model.theta * model.energy(cfg))

    else:
        raise UnsupportedFamily(
            f"no explicit Janossy for {type(model).__name__}"
        )

    denom = j(config)
    if denom == 0.0:
        return 0.0
    return j(config.add(x)) / denom


# ---------------------------------------------------------------------------
# GNZ check


@dataclass(frozen=True)
class UFunc:
    """Test integrand u(x, phi) with an optional vectorized node profile."""

    name: str
    fn: Callable
    profile_fn: Callable | None = None

    def value(self, x, config) -> float:
        return float(self.fn(x, config))

    def profile(self, nodes, config) -> np.ndarray:
        if self.profile_fn is not None:
            return np.asarray(self.profile_fn(nodes, config), dtype=float)
        if isinstance(nodes, np.ndarray) and nodes.ndim == 2:
            items = [tuple(r) for r in nodes]
        else:
            items = [int(i) for i in np.asarray(nodes).ravel()]
        return np.array([self.fn(x, config) for x in items], dtype=float)


U_ONE = UFunc("one", lambda x, cfg: 1.0,
              profile_fn=lambda nodes, cfg: np.ones(np.shape(nodes)[0]))


def box_count_u(region, space: Space) -> UFunc:
    """u(x, phi) = phi(A): independent of x, counts points in a box."""
    return UFunc(
        "box_count",
        lambda x, cfg: float(cfg.count_in(region, space)),
        profile_fn=lambda nodes, cfg: np.full(
            np.shape(nodes)[0], float(cfg.count_in(region, space))
        ),
    )


GNZ_ABS_TOL = 1e-3


def gnz_check_many(model, evaluator: PapangelouEvaluator, us: Sequence[UFunc],
                   n_samples: int, rng, resolution: int | None = None,
                   samples=None, reference=None) -> list[CheckRow]:
    """Monte-Carlo test of the defining identity of c, for several test
    integrands over one shared sample cache.

    Both sides are estimated from the same draws; the right-hand integrand
    is evaluated at quadrature nodes (or at the atoms of an explicit
    ``reference`` = (points, weights) pair), with the intensity profile
    computed once per draw and reused by every integrand.  A check passes
    when |lhs - rhs| <= 3 (se_lhs + se_rhs) + 1e-3.
    """
    space = model.space
    if samples is None:
        samples = sample_many(model, n_samples, rng)
    if reference is not None:
        node_pts, w = reference
        nodes = np.asarray(node_pts, dtype=float) if not isinstance(space, Grid) \
            else np.asarray(node_pts)
    else:
        nodes, w = space.quadrature(resolution)
    w = np.asarray(w, dtype=float)

    n = len(samples)
    lhs_vals = np.empty((len(us), n))
    rhs_vals = np.empty((len(us), n))
    for i, draw in enumerate(samples):
        combined = draw.combined if isinstance(draw, LabeledConfiguration) else draw
        c_weighted = w * evaluator.profile(nodes, draw)
        for k, u in enumerate(us):
            acc = 0.0
            for p, mlt in zip(combined.pts, combined.mult):
                acc += mlt * u.value(p, combined.remove(p))
            lhs_vals[k, i] = acc
            rhs_vals[k, i] = float(np.dot(c_weighted, u.profile(nodes, combined)))
    rows = []
    for k, u in enumerate(us):
        lhs, rhs = float(lhs_vals[k].mean()), float(rhs_vals[k].mean())
        se_l = float(lhs_vals[k].std(ddof=1) / math.sqrt(n))
        se_r = float(rhs_vals[k].std(ddof=1) / math.sqrt(n))
        ok = abs(lhs - rhs) <= 3 * (se_l + se_r) + GNZ_ABS_TOL
        rows.append(CheckRow(
            check_id=f"gnz[{u.name}]", model_id=evaluator.model_tag,
            lhs=lhs, rhs=rhs, stderr=se_l + se_r, passed=ok,
        ))
    return rows


def gnz_check(model, evaluator: PapangelouEvaluator, u: UFunc, n_samples: int,
              rng, resolution: int | None = None, samples=None,
              reference=None) -> CheckRow:
    """Single-integrand form of :func:`gnz_check_many`."""
    return gnz_check_many(model, evaluator, [u], n_samples, rng,
                          resolution=resolution, samples=samples,
                          reference=reference)[0]


# ---------------------------------------------------------------------------
# repulsiveness classification and structural lemmas


def classify_prpp(counts: CountDistribution) -> RepulsivenessReport:
    """Scan the stored count law for (weak) repulsiveness.

    Repulsive  iff (n+1) p_{n+1}^2 >= (n+2) p_n p_{n+2} for all n;
    weakly repulsive iff p_0 (n+1) p_{n+1} <= p_n p_1 for all n.
    Ties are accepted up to a 1e-12 relative tolerance (the Poisson law
    meets both with exact equality).
    """
    p = counts.probs
    rep, rep_wit = True, None
    for n in range(len(p) - 2):
        lhs = (n + 1) * p[n + 1] ** 2
        rhs = (n + 2) * p[n] * p[n + 2]
        if lhs < rhs - 1e-12 * (abs(lhs) + abs(rhs)):
            rep, rep_wit = False, n
            break
    weak, weak_wit = True, None
    for n in range(len(p) - 1):
        lhs = p[0] * (n + 1) * p[n + 1]
        rhs = p[n] * p[1]
        if lhs > rhs + 1e-12 * (abs(lhs) + abs(rhs)):
            weak, weak_wit = False, n
            break
    return RepulsivenessReport("purely_random", rep, weak, rep_wit, weak_wit)


def check_structural_lemmas(model, evaluator: PapangelouEvaluator,
                            n_samples: int, rng,
                            weakly_repulsive: bool = True,
                            rho_profile: Callable | None = None,
                            resolution: int | None = None,
                            coarse: int = 4) -> list[CheckRow]:
    """Four sample-level identities tying c to void probabilities and the
    correlation function.

    * singleton:    P(|Phi|=1) = P(|Phi|=0) * integral c(x, {}) dx
    * void_bound:   |c(x,{}) - rho(x)| <= (1-p0) c(x,{})      (weakly rep.)
    * mean_dev:     E|c(x,Phi) - rho(x)| <= 2 (c(x,{}) - rho(x))  (weakly rep.)
    * correlation:  E[c(x,Phi)] = rho(x)

    rho is taken from ``rho_profile`` when a closed form exists, otherwise
    from a binned empirical intensity (coarse^dim bins).  Inequalities get
    a 3-sigma margin per node; the equality check inflates its threshold
    for the number of nodes tested.
    """
    from scipy.stats import norm

    space = model.space
    samples = sample_many(model, n_samples, rng)
    if any(isinstance(s, LabeledConfiguration) for s in samples):
        raise UnsupportedFamily("structural lemmas need unlabeled configurations")
    configs = samples
    nodes, w = space.quadrature(resolution)
    n = len(samples)

    c_empty = evaluator.profile(nodes, Configuration())
    int_c_empty = float(np.dot(w, c_empty))

    profiles = np.stack([evaluator.profile(nodes, s) for s in samples])
    mean_c = profiles.mean(axis=0)
    se_c = profiles.std(axis=0, ddof=1) / math.sqrt(n)

    sizes = np.array([len(c) for c in configs])
    p0 = float(np.mean(sizes == 0))
    rows: list[CheckRow] = []

    # singleton identity
    z = (sizes == 1).astype(float) - int_c_empty * (sizes == 0)
    se = float(z.std(ddof=1) / math.sqrt(n))
    rows.append(CheckRow("lemma[singleton]", evaluator.model_tag,
                         float(np.mean(sizes == 1)), int_c_empty * p0,
                         se, bool(abs(z.mean()) <= 3 * se + 1e-4)))

    # rho estimate
    if rho_profile is not None:
        rho = np.asarray(rho_profile(nodes), dtype=float)
        se_rho = np.zeros_like(rho)
    else:
        rho = mean_c
        se_rho = se_c

    if weakly_repulsive:
        lhs = np.abs(c_empty - rho)
        rhs = (1 - p0) * c_empty
        slack = 3 * se_rho + 3 * c_empty * math.sqrt(p0 * (1 - p0) / n) + 1e-9
        ok = bool(np.all(lhs <= rhs + slack))
        worst = int(np.argmax(lhs - rhs - slack))
        rows.append(CheckRow("lemma[void_bound]", evaluator.model_tag,
                             float(lhs[worst]), float(rhs[worst]),
                             float(slack[worst]) / 3, ok))

        dev = np.abs(profiles - rho).mean(axis=0)
        se_dev = np.abs(profiles - rho).std(axis=0, ddof=1) / math.sqrt(n)
        rhs2 = 2 * (c_empty - rho)
        slack2 = 3 * (se_dev + 2 * se_rho) + 1e-9
        ok2 = bool(np.all(dev <= rhs2 + slack2))
        worst2 = int(np.argmax(dev - rhs2 - slack2))
        rows.append(CheckRow("lemma[mean_dev]", evaluator.model_tag,
                             float(dev[worst2]), float(rhs2[worst2]),
                             float(se_dev[worst2]), ok2))

    # correlation identity E[c(x, Phi)] = rho(x)
    if rho_profile is not None:
        zcrit = float(norm.isf(0.00135 / max(len(nodes), 1)))
        zs = np.abs(mean_c - rho) / np.maximum(se_c, 1e-12)
        worst3 = int(np.argmax(zs))
        rows.append(CheckRow("lemma[correlation]", evaluator.model_tag,
                             float(mean_c[worst3]), float(rho[worst3]),
                             float(se_c[worst3]),
                             bool(np.all(zs <= zcrit) or
                                  np.all(np.abs(mean_c - rho) <= 1e-3))))
    else:
        rows.append(_correlation_vs_counts(
            model, configs, nodes, w, mean_c, se_c, coarse))
    return rows


def _correlation_vs_counts(model, configs, nodes, w, mean_c, se_c, coarse):
    """Bin-averaged E[c] against the empirical intensity histogram."""
    from scipy.stats import norm

    from .geometry import Box, BoxRegion

    space = model.space
    # coarse^dim regular bins over the bounding box
    base = space if isinstance(space, Box) else space.bounding_box()
    lo = np.asarray(base.lower)
    up = np.asarray(base.upper)
    d = len(lo)
    side = (up - lo) / coarse
    node_xy = nodes if (isinstance(nodes, np.ndarray) and nodes.ndim == 2) \
        else space.locations[np.asarray(nodes, dtype=int)]
    n = len(configs)
    zs = []
    worst = (0.0, 0.0, 0.0)
    zmax = -1.0
    for flat in range(coarse ** d):
        idx = np.unravel_index(flat, (coarse,) * d)
        a = lo + side * np.asarray(idx)
        region = BoxRegion(tuple(a), tuple(a + side))
        mask = region.indicator(node_xy)
        vol = float(w[mask].sum())
        if vol <= 0:
            continue
        counts = np.array([c.count_in(region, space) for c in configs], dtype=float)
        emp = counts.mean() / vol
        se_emp = counts.std(ddof=1) / math.sqrt(n) / vol
        model_side = float(np.dot(w[mask], mean_c[mask])) / vol
        se_model = float(np.sqrt(np.dot(w[mask] ** 2, se_c[mask] ** 2))) / vol
        z = abs(emp - model_side) / max(se_emp + se_model, 1e-12)
        zs.append(z)
        if z > zmax:
            zmax, worst = z, (model_side, emp, se_emp + se_model)
    zcrit = float(norm.isf(0.00135 / max(len(zs), 1)))
    return CheckRow("lemma[correlation]", "empirical",
                    worst[0], worst[1], worst[2], bool(zmax <= zcrit))
