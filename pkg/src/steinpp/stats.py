"""Count-law goodness-of-fit helpers shared by tests and verifications."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats as sps

__all__ = ["chi_square_vs_poisson", "chi_square_two_sample", "pool_bins"]


def pool_bins(observed: np.ndarray, expected: np.ndarray, min_expected: float = 5.0):
    """Pool trailing bins until every expected count reaches the floor."""
    obs, exp = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            obs.append(acc_o)
            exp.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 and exp:
        obs[-1] += acc_o
        exp[-1] += acc_e
    return np.asarray(obs), np.asarray(exp)


def chi_square_vs_poisson(counts: np.ndarray, lam: float,
                          significance: float = 1e-3) -> tuple[bool, float]:
    """Chi-square fit of observed total counts against Poisson(lam).

    Returns (pass, p_value); passes when p >= significance.
    """
    counts = np.asarray(counts)
    n = len(counts)
    kmax = int(counts.max()) + 1
    observed = np.bincount(counts, minlength=kmax + 1).astype(float)
    pmf = sps.poisson.pmf(np.arange(kmax + 1), lam)
    pmf[-1] = sps.poisson.sf(kmax - 1, lam)
    expected = pmf * n
    obs, exp = pool_bins(observed, expected)
    if len(obs) < 2:
        return True, 1.0
    stat = float(np.sum((obs - exp) ** 2 / exp))
    p = float(sps.chi2.sf(stat, df=len(obs) - 1))
    return p >= significance, p


def chi_square_two_sample(counts_a: np.ndarray, counts_b: np.ndarray,
                          significance: float = 1e-3) -> tuple[bool, float]:
    """Homogeneity test of two integer samples (same law?)."""
    a = np.asarray(counts_a)
    b = np.asarray(counts_b)
    kmax = int(max(a.max(initial=0), b.max(initial=0)))
    oa = np.bincount(a, minlength=kmax + 1).astype(float)
    ob = np.bincount(b, minlength=kmax + 1).astype(float)
    tot = oa + ob
    keep = tot > 0
    oa, ob, tot = oa[keep], ob[keep], tot[keep]
    na, nb = oa.sum(), ob.sum()
    ea = tot * na / (na + nb)
    eb = tot * nb / (na + nb)
    oa, ea = pool_bins(oa, ea)
    ob, eb = pool_bins(ob, eb)
    m = min(len(oa), len(ob))
    if m < 2:
        return True, 1.0
    stat = float(np.sum((oa[:m] - ea[:m]) ** 2 / ea[:m])
                 + np.sum((ob[:m] - eb[:m]) ** 2 / eb[:m]))
    p = float(sps.chi2.sf(stat, df=m - 1))
    return p >= significance, p
