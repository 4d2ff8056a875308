import math

import numpy as np
import pytest

from steinpp import rng as rngmod
from steinpp.bounds import (
    ball_volume, bound_bounded, bound_conditional_mc, bound_dpp_thin_rescale,
    bound_generic, bound_gibbs, bound_hardcore, bound_kallenberg,
    bound_minus1n_dpp, bound_poisson_pair, bound_prpp, bound_superposition,
    bound_thinned_superposition, bound_thinned_vs_cox,
)
from steinpp.distances import w1_counts
from steinpp.geometry import Box, Configuration, Grid, IntensityMeasure
from steinpp.kernels import Kernel
from steinpp.models import (
    BoundedN, ConditionalPoissonPP, CountDistribution, CoxAtomic,
    GibbsPairwise, HardcoreR, PoissonPP, sample_many,
)
from steinpp.papangelou import papangelou_evaluator

BOX1 = Box((0.0,), (1.0,))
BOX2 = Box((0.0, 0.0), (1.0, 1.0))
UNIF1 = IntensityMeasure(BOX1, 1.0)
UNIF2 = IntensityMeasure(BOX2, 1.0)


# ---------------------------------------------------------------------------
# purely random counts


def test_bound_prpp_poisson_counts_zero():
    counts = CountDistribution.poisson(1.0)
    assert bound_prpp(counts, 1.0).value == 0.0


def test_bound_prpp_geometric_partial_sum_oracle():
    counts = CountDistribution.geometric(0.5)
    rep = bound_prpp(counts, 1.0)
    # oracle: sum to n = 60 with exact weights 2^-(n+1)
    oracle = math.fsum(
        abs((n + 1) * 2.0 ** -(n + 2) - 2.0 ** -(n + 1)) for n in range(60)
    )
    assert oracle == pytest.approx(0.5, abs=1e-12)
    assert rep.value == pytest.approx(oracle, abs=1e-9)


def test_bound_prpp_half_half():
    p2 = 1e-13
    rest = 1.0 - p2
    counts = CountDistribution([rest / 2, rest / 2, p2])
    rep = bound_prpp(counts, 1.0)
    # |1*p1 - p0| + |2 p2 - p1| with p0 = p1 = 1/2 up to the pad
    assert rep.value == pytest.approx(0.5, abs=1e-9)


# ---------------------------------------------------------------------------
# conditional closed forms


def test_bound_bounded_exact_values():
    assert bound_bounded(1.0, 0).value == pytest.approx(1.0, abs=1e-12)
    assert bound_bounded(1.0, 2).value == pytest.approx(0.2, abs=1e-12)
    # factorial decay kills the bound
    assert bound_bounded(1.0, 40).value < 1e-40


def test_bound_bounded_p_n_matches_poisson_cdf():
    from scipy import stats as sps

    rep = bound_bounded(2.5, 3)
    assert rep.components["p_N"] == pytest.approx(sps.poisson.cdf(3, 2.5), abs=1e-12)


def test_bound_hardcore_values_and_conventions():
    # d = 2: both volume conventions give pi R^2
    assert ball_volume(0.1, 2, True) == pytest.approx(math.pi * 0.01)
    assert ball_volume(0.1, 2, False) == pytest.approx(math.pi * 0.01)
    # d = 3 differs: Gamma(d/2 + 1)/Gamma(d/2) = d/2
    assert ball_volume(1.0, 3, True) / ball_volume(1.0, 3, False) \
        == pytest.approx(1.5)
    # the printed convention only enlarges the bound for d = 3
    assert ball_volume(1.0, 3, True) > ball_volume(1.0, 3, False)
    rep = bound_hardcore(1.0, 1.0, 0.1, 2, p_r=0.9)
    assert rep.value == pytest.approx(math.pi * 0.01 / 0.9, abs=1e-12)
    assert bound_hardcore(1.0, 1.0, 1e-9, 2, p_r=1.0).value < 1e-12
    with pytest.raises(ValueError):
        bound_hardcore(1.0, 1.0, 0.1, 2, p_r=0.0)


def test_bound_conditional_mc_always_true_zero():
    from steinpp.models import ALWAYS

    model = ConditionalPoissonPP(BOX1, UNIF1, ALWAYS)
    rep = bound_conditional_mc(UNIF1, ALWAYS, model, BOX1, 2_000,
                               rngmod.stream(100, "cond0"))
    assert rep.value == 0.0


def test_bound_conditional_mc_bounded_matches_closed_form():
    n_cap = 3
    model = ConditionalPoissonPP(BOX1, UNIF1, BoundedN(n_cap))
    rep = bound_conditional_mc(UNIF1, BoundedN(n_cap), model, BOX1, 60_000,
                               rngmod.stream(101, "condN"))
    closed = bound_bounded(1.0, n_cap)
    assert rep.value == pytest.approx(closed.value, abs=3 * rep.stderr)


def test_bound_conditional_mc_hardcore_below_corollary():
    radius = 0.1
    model = ConditionalPoissonPP(BOX2, UNIF2, HardcoreR(radius))
    g = rngmod.stream(102, "condR")
    rep = bound_conditional_mc(UNIF2, HardcoreR(radius), model, BOX2, 20_000,
                               g, resolution=64)
    # p_R estimated on the unconditioned law
    pois = PoissonPP(BOX2, UNIF2)
    hr = HardcoreR(radius)
    hits = np.array([
        hr.holds(c, BOX2) for c in sample_many(pois, 20_000, g)
    ])
    p_r = float(hits.mean())
    corollary = bound_hardcore(1.0, 1.0, radius, 2, p_r=p_r,
                               p_r_stderr=float(hits.std(ddof=1) / math.sqrt(len(hits))))
    assert rep.value <= corollary.value + 3 * (rep.stderr + corollary.stderr)


# ---------------------------------------------------------------------------
# master bound and consistency


def test_bound_generic_poisson_self_is_zero():
    model = PoissonPP(BOX1, UNIF1)
    ev = papangelou_evaluator(model)
    rep = bound_generic(UNIF1, ev, model, BOX1, 2_000, rngmod.stream(103, "gen0"))
    assert rep.value == pytest.approx(0.0, abs=1e-12)


def test_bound_generic_matches_conditional_mc_for_hardcore():
    radius = 0.1
    model = ConditionalPoissonPP(BOX2, UNIF2, HardcoreR(radius))
    ev = papangelou_evaluator(model)
    g1 = rngmod.stream(104, "genR")
    rep_a = bound_generic(UNIF2, ev, model, BOX2, 20_000, g1, resolution=64)
    rep_b = bound_conditional_mc(UNIF2, HardcoreR(radius), model, BOX2, 20_000,
                                 rngmod.stream(104, "genR2"), resolution=64)
    assert rep_a.value == pytest.approx(rep_b.value,
                                        abs=3 * (rep_a.stderr + rep_b.stderr))


def test_bound_generic_below_gibbs_closed_form():
    theta, eps = 1.0, 0.1
    psi2 = lambda a, b: eps * (
        np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1) < 0.2
    )
    model = GibbsPairwise(BOX2, theta, lambda c: np.zeros(len(c)), psi2, eps=eps)
    ev = papangelou_evaluator(model)
    rep = bound_generic(UNIF2, ev, model, BOX2, 20_000,
                        rngmod.stream(105, "genG"), resolution=32)
    closed = bound_gibbs(1.0, theta, eps)
    assert rep.value <= closed.value + 3 * rep.stderr


# ---------------------------------------------------------------------------
# superpositions, determinantal, thinning


def test_bound_superposition_cancellation():
    n = 4
    rhos = [IntensityMeasure(BOX1, 1.0 / n) for _ in range(n)]
    rep = bound_superposition(rhos, UNIF1, BOX1)
    assert rep.components["residual"] == pytest.approx(0.0, abs=1e-12)
    assert rep.value == pytest.approx(2.0 / n, abs=1e-12)


def test_bound_superposition_remark_form():
    # max integral rho_i <= C/n turns the second term into 2 C^2 / n
    n, c = 5, 0.7
    rhos = [IntensityMeasure(BOX1, c / n) for _ in range(n)]
    rep = bound_superposition(rhos, IntensityMeasure(BOX1, c), BOX1)
    assert rep.value <= rep.components["residual"] + 2 * c**2 / n + 1e-12


def test_bound_superposition_iid_points_corollary():
    # n i.i.d. points with density h(x/n)/n on [0, n]; window Lambda = [0,1]
    h0 = 1.0
    n = 50

    def h(x):
        return h0 + 0.5 * x  # density shape on [0,1] scaled below

    lam = Box((0.0,), (1.0,))
    rhos = []
    for _ in range(n):
        rhos.append(IntensityMeasure(
            lam, lambda pts: h(pts[:, 0] / n) / n, bound=2.0 / n))
    target = IntensityMeasure(lam, h0)
    rep = bound_superposition(rhos, target, lam)
    expected_residual = 0.5 / (2 * n)  # integral of |h(x/n) - h(0)| = 0.5 x/n
    assert rep.components["residual"] == pytest.approx(expected_residual, rel=1e-6)
    # second term: 2 n (max_i int rho_i)^2 with int rho_i = (h0 + 0.25/n)/n
    per = (h0 + 0.25 / n) / n
    assert rep.components["second_term"] == pytest.approx(2 * n * per**2, rel=1e-9)


def two_cell_kernel(w=1.0, alpha=-1.0):
    grid = Grid([[0.25], [0.75]], [w, w])
    return Kernel.from_function_values(np.array([[0.4, 0.2], [0.2, 0.4]]) / w,
                                       grid, alpha=alpha)


def test_bound_minus1n_dpp_values():
    k = two_cell_kernel()
    assert bound_minus1n_dpp(k, 4).value == pytest.approx(2.0 / 4 * 0.8**2)
    # trace via weighted diagonal sum with weights 0.5
    k_half = Kernel.from_function_values(np.array([[0.4, 0.2], [0.2, 0.4]]),
                                         Grid([[0.25], [0.75]], [0.5, 0.5]))
    assert k_half.trace == pytest.approx(0.4)
    assert bound_minus1n_dpp(k_half, 2).value == pytest.approx(0.16, abs=1e-12)
    assert bound_minus1n_dpp(k, 10**9).value < 1e-8


def test_bound_thinned_superposition_values():
    assert bound_thinned_superposition(lambda pts: np.zeros(len(pts)), 10,
                                       BOX2).value == 0.0
    rep = bound_thinned_superposition(lambda pts: np.ones(len(pts)), 100, BOX2)
    assert rep.value == pytest.approx(0.1, abs=1e-12)


def test_bound_dpp_thin_rescale_values():
    assert bound_dpp_thin_rescale(0.1, 1.0, 1.0).value == pytest.approx(2.0 / 9)
    assert bound_dpp_thin_rescale(1e-9, 1.0, 1.0).value < 1e-8
    assert bound_dpp_thin_rescale(0.5, 2.0, 3.0).value == pytest.approx(12.0)
    with pytest.raises(ValueError):
        bound_dpp_thin_rescale(1.0, 1.0, 1.0)


def test_bound_gibbs_values():
    assert bound_gibbs(1.0, 1.0, 0.0).value == 0.0
    assert bound_gibbs(1.0, 1.0, 0.1).value == pytest.approx(0.1)
    assert bound_gibbs(2.0, 0.5, 0.2).value == pytest.approx(0.4)


# ---------------------------------------------------------------------------
# thinning against Cox targets


def test_bound_thinned_vs_cox_values():
    one_cell = Grid([[0.0, 0.0]], [1.0])
    fixed = Configuration([0])
    sampler = lambda n, rng: [fixed] * n
    g = rngmod.stream(106, "cox1")
    assert bound_thinned_vs_cox(sampler, 0.0, one_cell, 500, g).value == 0.0
    rep = bound_thinned_vs_cox(sampler, 0.1, one_cell, 500, g)
    assert rep.value == pytest.approx(0.02, abs=1e-12)
    # dominance against the exact count-law W1
    w1 = w1_counts(CountDistribution.bernoulli(0.1),
                   CountDistribution.poisson(0.1))
    assert w1 <= rep.value


def test_bound_thinned_vs_cox_poisson_base():
    model = PoissonPP(BOX1, UNIF1)
    rep = bound_thinned_vs_cox(model, 0.1, BOX1, 50_000,
                               rngmod.stream(107, "cox2"))
    # 2 E|Phi| p^2 = 0.02
    assert rep.value == pytest.approx(0.02, abs=3 * rep.stderr)


def test_bound_kallenberg_matched_directing_law():
    # grid with unit weights; Phi deterministic with 2 points at one cell,
    # p = 1/2, so p*Phi equals the single directing atom exactly
    grid = Grid([[0.0, 0.0], [1.0, 0.0]], [1.0, 1.0])
    phi = Configuration([0, 0, 1])
    p = 0.5
    directing = IntensityMeasure(grid, np.array([1.0, 0.5]))
    cox = CoxAtomic(grid, ((1.0, directing),))
    sampler = lambda n, rng: [phi] * n
    rep = bound_kallenberg(sampler, p, cox, grid, 20_000,
                           rngmod.stream(108, "kal"))
    assert rep.components["series_term"] <= 3 * rep.stderr + 1e-3
    assert rep.components["thinning_term"] == pytest.approx(2 * 3 * p**2,
                                                            abs=1e-12)


def test_bound_kallenberg_superposed_scaling():
    # n-fold superposition with p = 1/n: first term 2 |phi| / n
    grid = Grid([[0.0, 0.0]], [1.0])
    n_fold = 8
    phi = Configuration([0] * n_fold)
    p = 1.0 / n_fold
    sampler = lambda n, rng: [phi] * n
    rep = bound_thinned_vs_cox(sampler, p, grid, 100, rngmod.stream(109, "kal2"))
    # 2 |phi| p^2 = 2/n: vanishes at rate 1/n
    assert rep.value == pytest.approx(2.0 / n_fold, abs=1e-12)


def test_bound_poisson_pair_is_intensity_tv():
    rep = bound_poisson_pair(UNIF1, IntensityMeasure(BOX1, 2.0), BOX1)
    assert rep.value == pytest.approx(1.0, abs=1e-12)
