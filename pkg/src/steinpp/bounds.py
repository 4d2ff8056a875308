"""Theoretical upper bounds on the transport distance (total-variation
ground cost) between a point process and a Poisson or Cox target.

Each calculator returns a :class:`BoundReport`; Monte-Carlo ingredients
(void probabilities, acceptance rates, mean integrals) carry their own
standard errors in ``components`` so dominance tests can inflate their
margins correctly.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .geometry import Configuration, IntensityMeasure, Space, integrate
from .kernels import Kernel
from .models import (
    Condition, CountDistribution, LabeledConfiguration, sample_many,
)
from .papangelou import PapangelouEvaluator
from .reports import BoundReport, EstimateReport

__all__ = [
    "bound_generic", "bound_prpp", "bound_conditional_mc", "bound_hardcore",
    "bound_bounded", "bound_superposition", "bound_minus1n_dpp",
    "bound_thinned_superposition", "bound_dpp_thin_rescale", "bound_gibbs",
    "bound_thinned_vs_cox", "bound_kallenberg", "bound_poisson_pair",
    "ball_volume",
]


def bound_generic(m: IntensityMeasure, evaluator: PapangelouEvaluator,
                  sampler, space: Space, n: int, rng,
                  resolution: int | None = None) -> BoundReport:
    """integral of E|m(x) - c(x, Phi)| : the master bound, by Monte Carlo
    over draws and quadrature over x."""
    nodes, w = space.quadrature(resolution)
    m_vals = m.at(nodes)
    samples = sampler(n, rng) if callable(sampler) else sample_many(sampler, n, rng)
    per_draw = np.empty(len(samples))
    for i, draw in enumerate(samples):
        c_vals = evaluator.profile(nodes, draw)
        per_draw[i] = float(np.dot(w, np.abs(m_vals - c_vals)))
    value = float(per_draw.mean())
    se = float(per_draw.std(ddof=1) / math.sqrt(len(samples)))
    return BoundReport("generic_l1", value, components={"mc_stderr": se},
                       inputs={"n": n}, stderr=se)


def bound_prpp(counts: CountDistribution, total_mass: float) -> BoundReport:
    """sum_n |(n+1) p_{n+1} - M(X) p_n| over the stored count law.

    The truncated tail enters the report as a separate component rather
    than the value, so count laws that satisfy the identity term by term
    (Poisson with parameter M(X)) report an exact zero.
    """
    p = counts.probs
    terms = [abs((n + 1) * p[n + 1] - total_mass * p[n]) for n in range(len(p) - 1)]
    tail = counts.tail_bound * (total_mass + len(p) + 1)
    return BoundReport(
        "prpp", math.fsum(terms),
        components={"tail_allowance": tail, "n_terms": len(terms)},
        inputs={"total_mass": total_mass, "n_max": counts.n_max},
    )


def bound_conditional_mc(m: IntensityMeasure, condition: Condition,
                         sampler, space: Space, n: int, rng,
                         resolution: int | None = None) -> BoundReport:
    """integral m(x) P(Phi_C + x violates C) dx by Monte Carlo over
    accepted draws and quadrature over x."""
    from .models import BoundedN, HardcoreR

    nodes, w = space.quadrature(resolution)
    m_vals = m.at(nodes)
    samples = sampler(n, rng) if callable(sampler) else sample_many(sampler, n, rng)
    per_draw = np.empty(len(samples))
    for i, cfg in enumerate(samples):
        if isinstance(condition, HardcoreR):
            ok = condition.profile_adding(nodes, cfg, space)
        elif isinstance(condition, BoundedN):
            ok = np.full(len(m_vals), len(cfg) + 1 <= condition.N)
        else:
            items = ([tuple(r) for r in nodes] if nodes.ndim == 2
                     else [int(v) for v in nodes])
            ok = np.array([condition.holds_adding(x, cfg, space) for x in items])
        per_draw[i] = float(np.dot(w, m_vals * (~np.asarray(ok, dtype=bool))))
    value = float(per_draw.mean())
    se = float(per_draw.std(ddof=1) / math.sqrt(len(samples)))
    return BoundReport("conditional_mc", value, components={"mc_stderr": se},
                       inputs={"n": n}, stderr=se)


def ball_volume(radius: float, dim: int, paper_convention: bool = True) -> float:
    """V_d(R): the printed form uses Gamma(d/2); the standard Euclidean
    ball volume divides by Gamma(d/2 + 1).  Both agree for d = 2."""
    g = math.gamma(dim / 2) if paper_convention else math.gamma(dim / 2 + 1)
    return math.pi ** (dim / 2) * radius**dim / g


def bound_hardcore(lam: float, area: float, radius: float, dim: int,
                   p_r: float, p_r_stderr: float = 0.0,
                   use_paper_volume: bool = True) -> BoundReport:
    """lam^2 |Lambda| V_d(R) / p_R for the minimum-separation constraint."""
    if not 0 < p_r <= 1:
        raise ValueError("p_R must lie in (0, 1]")
    v = ball_volume(radius, dim, use_paper_volume)
    value = lam**2 * area * v / p_r
    se = value * p_r_stderr / p_r
    return BoundReport(
        "hardcore", value,
        components={"ball_volume": v, "p_R": p_r, "p_R_stderr": p_r_stderr},
        inputs={"lam": lam, "area": area, "radius": radius, "dim": dim,
                "paper_volume": use_paper_volume},
        stderr=se,
    )


def bound_bounded(total_mass: float, n_cap: int,
                  p_n: float | None = None) -> BoundReport:
    """e^(-M) / p_N * M^(N+1) / N! for the capped-count constraint.

    p_N defaults to the exact Poisson CDF at N.
    """
    if p_n is None:
        p = CountDistribution.poisson(total_mass)
        p_n = float(p.probs[: n_cap + 1].sum()) if n_cap <= p.n_max else 1.0
    if not 0 < p_n <= 1:
        raise ValueError("p_N must lie in (0, 1]")
    value = math.exp(-total_mass) / p_n * total_mass ** (n_cap + 1) / math.factorial(n_cap)
    return BoundReport("bounded", value, components={"p_N": p_n},
                       inputs={"total_mass": total_mass, "n_cap": n_cap})


def bound_superposition(component_rhos: Sequence, m: IntensityMeasure,
                        space: Space, resolution: int | None = None) -> BoundReport:
    """R_n + 2 n (max_i integral rho_i)^2 for n superposed weakly
    repulsive components with correlation densities rho_i."""
    n = len(component_rhos)
    rho_fns = [r.at if isinstance(r, IntensityMeasure) else r for r in component_rhos]
    ints = [integrate(f, space, resolution) for f in rho_fns]

    def residual(pts):
        acc = np.zeros(np.shape(pts)[0])
        for f in rho_fns:
            acc = acc + np.asarray(f(pts), dtype=float)
        return np.abs(acc - m.at(pts))

    r_n = integrate(residual, space, resolution)
    second = 2 * n * max(ints) ** 2
    return BoundReport(
        "superposition", r_n + second,
        components={"residual": r_n, "second_term": second,
                    "max_rho_integral": max(ints)},
        inputs={"n": n},
    )


def bound_minus1n_dpp(kernel: Kernel, n: int | None = None) -> BoundReport:
    """(2/n) (integral K(x,x) dx)^2 for an alpha = -1/n law."""
    n = n or kernel.alpha_denominator
    tr = kernel.trace
    return BoundReport("minus1n_dpp", 2.0 / n * tr**2,
                       components={"trace": tr}, inputs={"n": n})


def bound_thinned_superposition(k_var: Callable, n: int, space: Space,
                                resolution: int | None = None) -> BoundReport:
    """(1/sqrt(n)) integral sqrt(K(x)) dx given a variance envelope
    V[c(x, Phi)] <= K(x)."""
    val = integrate(lambda pts: np.sqrt(np.asarray(k_var(pts), dtype=float)),
                    space, resolution) / math.sqrt(n)
    return BoundReport("thinned_superposition", val, inputs={"n": n})


def bound_dpp_thin_rescale(beta: float, lam: float, area: float) -> BoundReport:
    """2 beta/(1-beta) * lam * |Lambda| for a beta-thinned, beta-rescaled
    stationary determinantal process against the matching Poisson law."""
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    return BoundReport("dpp_thin_rescale", 2 * beta / (1 - beta) * lam * area,
                       inputs={"beta": beta, "lam": lam, "area": area})


def bound_gibbs(total_mass: float, theta: float, eps: float) -> BoundReport:
    """M(X)^2 theta eps for a pairwise interaction bounded by eps,
    with M(dx) = e^(-theta psi1(x)) dx."""
    return BoundReport("gibbs", total_mass**2 * theta * eps,
                       inputs={"total_mass": total_mass, "theta": theta,
                               "eps": eps})


def _p_values(p, coords: np.ndarray) -> np.ndarray:
    if callable(p):
        return np.asarray(p(coords), dtype=float)
    return np.full(coords.shape[0], float(p))


def bound_thinned_vs_cox(sampler, p, space: Space, n: int, rng) -> BoundReport:
    """2 E[sum_{x in Phi} p(x)^2]: thinned process against the Cox process
    directed by the random measure p Phi."""
    samples = sampler(n, rng) if callable(sampler) else sample_many(sampler, n, rng)
    vals = np.empty(len(samples))
    for i, draw in enumerate(samples):
        cfg = draw.combined if isinstance(draw, LabeledConfiguration) else draw
        if len(cfg) == 0:
            vals[i] = 0.0
            continue
        coords = cfg.coords(space)
        vals[i] = float(np.sum(_p_values(p, coords) ** 2))
    value = 2 * float(vals.mean())
    se = 2 * float(vals.std(ddof=1) / math.sqrt(len(vals)))
    return BoundReport("thinned_vs_cox", value, components={"mc_stderr": se},
                       inputs={"n": n}, stderr=se)


def bound_kallenberg(sampler, p, cox_target, space: Space, n: int, rng,
                     k_max: int = 32) -> BoundReport:
    """Convergence-in-law bound for thinned processes against a Cox law:

        2 E[sum p^2(x)]  +  series distance between p Phi and the
        directing law, lifted through g_k(measure) = E f_k(Poisson(measure)).

    The lift is realized with one inner Poisson draw per outer sample on
    both legs; the directing mixture must be atomic (finitely many
    deterministic measures).
    """
    from .distances import polish_functionals
    from .models import CoxAtomic, sample_poisson

    if not isinstance(cox_target, CoxAtomic):
        raise TypeError("second term needs an atomic directing mixture")
    first = bound_thinned_vs_cox(sampler, p, space, n, rng)

    fs = polish_functionals(space, k_max)
    # leg 1: Phi-draws lifted through Poisson(p Phi)
    lift_a = np.empty((n, len(fs)))
    samples = sampler(n, rng) if callable(sampler) else sample_many(sampler, n, rng)
    for i, draw in enumerate(samples):
        cfg = draw.combined if isinstance(draw, LabeledConfiguration) else draw
        inner = _poisson_on_atoms(cfg, p, space, rng)
        lift_a[i] = [f(inner) for f in fs]
    # leg 2: directing-mixture draws lifted through Poisson(M_j)
    weights = np.array([a[0] for a in cox_target.atoms], dtype=float)
    lift_b = np.empty((n, len(fs)))
    for i in range(n):
        j = int(rng.choice(len(weights), p=weights / weights.sum()))
        inner = sample_poisson(cox_target.atoms[j][1], space, rng)
        lift_b[i] = [f(inner) for f in fs]

    second = 0.0
    second_se = 0.0
    for k in range(len(fs)):
        diff = abs(float(lift_a[:, k].mean() - lift_b[:, k].mean()))
        se = math.sqrt(lift_a[:, k].var(ddof=1) / n + lift_b[:, k].var(ddof=1) / n)
        second += 2.0 ** -(k + 1) * diff / (1.0 + diff)
        second_se += 2.0 ** -(k + 1) * se
    total_se = first.stderr + second_se
    return BoundReport(
        "kallenberg", first.value + second,
        components={"thinning_term": first.value, "series_term": second,
                    "mc_stderr": total_se},
        inputs={"n": n, "k_max": k_max}, stderr=total_se,
    )


def _poisson_on_atoms(cfg: Configuration, p, space: Space, rng) -> Configuration:
    """One draw of a Poisson process whose intensity is the atomic measure
    p(x) * multiplicity at the points of cfg."""
    if len(cfg.pts) == 0:
        return Configuration()
    coords = cfg.coords(space, expand=False)
    rates = _p_values(p, coords) * np.asarray(cfg.mult, dtype=float)
    counts = rng.poisson(rates)
    return Configuration(list(cfg.pts), counts)


def bound_poisson_pair(m1: IntensityMeasure, m2: IntensityMeasure,
                       space: Space, resolution: int | None = None) -> BoundReport:
    """Total variation of the intensity measures bounds the transport
    distance between two Poisson laws."""
    from .geometry import tv_measures

    return BoundReport("poisson_pair", tv_measures(m1, m2, space, resolution),
                       inputs={})
