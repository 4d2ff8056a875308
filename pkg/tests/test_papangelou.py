import math

import numpy as np
import pytest

from steinpp import rng as rngmod
from steinpp.geometry import (
    Box, BoxRegion, Configuration, Grid, IntensityMeasure,
)
from steinpp.kernels import Kernel, alpha_determinant
from steinpp.models import (
    ALWAYS, BoundedN, ConditionalPoissonPP, CountDistribution, DiscreteDPP,
    GibbsPairwise, HardcoreR, PoissonPP, PurelyRandomPP, SuperposeModel,
    sample_many,
)
from steinpp.papangelou import (
    U_ONE, UFunc, box_count_u, classify_prpp, check_structural_lemmas,
    gnz_check, janossy_ratio_oracle, pap_conditional, pap_dpp, pap_gibbs,
    pap_poisson, pap_purely_random, pap_thinned_config, pap_transform,
    papangelou_evaluator,
)
from steinpp.transforms import NotClosed, Rescale, Restrict, Superpose, Thin

BOX1 = Box((0.0,), (1.0,))
BOX2 = Box((0.0, 0.0), (1.0, 1.0))
UNIF1 = IntensityMeasure(BOX1, 1.0)
UNIF2 = IntensityMeasure(BOX2, 1.0)


def random_config(space, n, rng):
    return Configuration([tuple(r) for r in space.uniform_points(n, rng)])


# ---------------------------------------------------------------------------
# closed forms


def test_pap_poisson_constant_in_configuration():
    ev = pap_poisson(UNIF2)
    g = rngmod.stream(40, "pp")
    assert ev((0.3, 0.3), Configuration()) == 1.0
    assert ev((0.3, 0.3), random_config(BOX2, 5, g)) == 1.0


def test_pap_purely_random_values():
    geom = CountDistribution.geometric(0.5)
    ev = pap_purely_random(geom, UNIF1)
    # (n+1) p_{n+1}/p_n with p_n = 2^-(n+1): at n=1 gives 2 * (1/8)/(1/4) = 1
    assert ev((0.5,), Configuration([(0.2,)])) == pytest.approx(1.0, abs=1e-12)
    # n = 0: p_1/p_0 = 1/2
    assert ev((0.5,), Configuration()) == pytest.approx(0.5, abs=1e-12)
    pois = CountDistribution.poisson(1.7)
    evp = pap_purely_random(pois, UNIF1)
    for n in range(4):
        cfg = Configuration([((i + 1) / 10,) for i in range(n)])
        assert evp((0.5,), cfg) == pytest.approx(1.7, rel=1e-12)


def test_pap_purely_random_truncation_error():
    ev = pap_purely_random(CountDistribution([0.5, 0.5]), UNIF1)
    with pytest.raises(ValueError):
        ev((0.5,), Configuration([(0.1,)]))


def test_pap_conditional_indicators():
    hard = pap_conditional(UNIF2, HardcoreR(0.2))
    near = Configuration([(0.5, 0.5)])
    assert hard((0.55, 0.5), near) == 0.0
    assert hard((0.9, 0.9), near) == 1.0
    bounded = pap_conditional(UNIF2, BoundedN(2))
    two = Configuration([(0.1, 0.1), (0.9, 0.9)])
    assert bounded((0.5, 0.5), two) == 0.0
    assert bounded((0.5, 0.5), two.remove((0.1, 0.1))) == 1.0
    trivial = pap_conditional(UNIF2, ALWAYS)
    assert trivial((0.5, 0.5), two) == 1.0


def _gibbs_model(theta=1.0, scale=0.5, rng_range=0.2):
    psi2 = lambda a, b: scale * (
        np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1) < rng_range
    )
    return GibbsPairwise(BOX2, theta, lambda c: np.zeros(len(c)), psi2, eps=scale)


def test_pap_gibbs_values():
    model = _gibbs_model()
    ev = pap_gibbs(model.theta, model.psi1, model.psi2, BOX2)
    assert ev((0.5, 0.5), Configuration()) == pytest.approx(1.0)
    # one in-range neighbour at potential 0.5
    one = Configuration([(0.45, 0.5)])
    assert ev((0.5, 0.5), one) == pytest.approx(math.exp(-0.5), abs=1e-12)
    free = _gibbs_model(scale=0.0)
    ev0 = pap_gibbs(free.theta, free.psi1, free.psi2, BOX2)
    assert ev0((0.5, 0.5), one) == pytest.approx(1.0)


def two_cell_kernel():
    grid = Grid([[0.25], [0.75]], [1.0, 1.0])
    return Kernel(grid, np.array([[0.4, 0.2], [0.2, 0.4]]))


def test_pap_dpp_hand_values():
    k = two_cell_kernel()
    j = k.j_function_values()
    assert np.allclose(j, [[0.875, 0.625], [0.625, 0.875]], atol=1e-12)
    ev = pap_dpp(k)
    assert ev(0, Configuration()) == pytest.approx(0.875, abs=1e-12)
    c01 = ev(0, Configuration([1]))
    assert c01 == pytest.approx(0.375 / 0.875, abs=1e-12)
    # repulsiveness at these values
    assert c01 <= 0.875 + 1e-12
    # single cell: K = [0.5] gives J = [1]
    k1 = Kernel(Grid([[0.0]], [1.0]), np.array([[0.5]]))
    assert pap_dpp(k1)(0, Configuration()) == pytest.approx(1.0, abs=1e-12)


def test_pap_dpp_duplicate_cell_gives_zero():
    ev = pap_dpp(two_cell_kernel())
    assert ev(0, Configuration([0])) == 0.0
    assert ev(1, Configuration([0, 0])) == 0.0


def test_alpha_determinant_oracle():
    a = np.array([[2.0, 1.0], [1.0, 3.0]])
    assert alpha_determinant(a, -1.0) == pytest.approx(np.linalg.det(a))
    # permanent for alpha = +1
    assert alpha_determinant(a, 1.0) == pytest.approx(2 * 3 + 1 * 1)
    with pytest.raises(ValueError):
        alpha_determinant(np.eye(9), -1.0)


def test_pap_alpha_dpp_matches_superposition_semantics():
    k = two_cell_kernel().with_alpha(-0.5)
    ev = pap_dpp(k)
    j = k.j_function_values()
    # det_alpha on the 2x2 minor {0, 1} over det_alpha on {1}
    num = alpha_determinant(j[np.ix_([1, 0], [1, 0])], -0.5)
    den = j[1, 1]
    assert ev(0, Configuration([1])) == pytest.approx(num / den, abs=1e-12)


# ---------------------------------------------------------------------------
# oracle agreement (the A2 surface, smaller n here)


def oracle_families():
    geom = CountDistribution.geometric(0.5)
    return [
        PoissonPP(BOX2, UNIF2),
        PurelyRandomPP(BOX1, geom, UNIF1),
        ConditionalPoissonPP(BOX2, UNIF2, HardcoreR(0.15)),
        ConditionalPoissonPP(BOX1, UNIF1, BoundedN(3)),
        _gibbs_model(),
    ]


def test_oracle_agreement():
    g = rngmod.stream(41, "oracle")
    for model in oracle_families():
        ev = papangelou_evaluator(model)
        space = model.space
        for _ in range(40):
            n = int(g.integers(0, 7))
            cfg = random_config(space, n, g)
            x = tuple(space.uniform_points(1, g)[0])
            expected = janossy_ratio_oracle(model, x, cfg)
            assert abs(ev(x, cfg) - expected) <= 1e-10, (model, x, cfg)


def test_oracle_rejects_dpp_and_large_configs():
    from steinpp.papangelou import UnsupportedFamily

    with pytest.raises(UnsupportedFamily):
        janossy_ratio_oracle(DiscreteDPP(two_cell_kernel()), 0, Configuration())
    g = rngmod.stream(42, "oracle-large")
    with pytest.raises(ValueError):
        janossy_ratio_oracle(PoissonPP(BOX2, UNIF2), (0.5, 0.5),
                             random_config(BOX2, 13, g))


# ---------------------------------------------------------------------------
# transform rules


def test_pap_transform_restrict():
    ev = papangelou_evaluator(PoissonPP(BOX2, UNIF2))
    half = BoxRegion((0.0, 0.0), (0.5, 1.0))
    restricted = pap_transform(ev, Restrict(half))
    assert restricted((0.25, 0.5), Configuration()) == 1.0
    assert restricted((0.75, 0.5), Configuration()) == 0.0


def test_pap_transform_superpose_adds_intensities():
    from steinpp.models import LabeledConfiguration

    ev1 = papangelou_evaluator(PoissonPP(BOX2, UNIF2))
    sup = pap_transform(ev1, Superpose((PoissonPP(BOX2, IntensityMeasure(BOX2, 2.0)),)))
    labeled = LabeledConfiguration([Configuration(), Configuration()])
    assert sup((0.5, 0.5), labeled) == pytest.approx(3.0)


def test_pap_transform_rescale_homogeneous():
    ev = papangelou_evaluator(PoissonPP(BOX2, UNIF2))
    scaled = pap_transform(ev, Rescale(4.0, 2))
    # c = lambda / eps for a homogeneous law
    assert scaled((0.5, 0.5), Configuration()) == pytest.approx(0.25)


def test_pap_transform_thin_poisson_and_dpp():
    ev = papangelou_evaluator(PoissonPP(BOX2, UNIF2))
    thinned = pap_transform(ev, Thin(0.25))
    assert thinned((0.5, 0.5), Configuration()) == pytest.approx(0.25)
    evd = papangelou_evaluator(DiscreteDPP(two_cell_kernel()))
    thinned_d = pap_transform(evd, Thin(0.5))
    half = two_cell_kernel().scaled(0.5)
    expected = pap_dpp(half)(0, Configuration())
    assert thinned_d(0, Configuration()) == pytest.approx(expected, abs=1e-12)


def test_pap_transform_general_thin_not_closed():
    geom = CountDistribution.geometric(0.5)
    ev = papangelou_evaluator(PurelyRandomPP(BOX1, geom, UNIF1))
    with pytest.raises(NotClosed):
        pap_transform(ev, Thin(0.5))


def test_pap_thinned_config_values_and_gnz():
    g = rngmod.stream(43, "thincfg")
    phi = random_config(BOX2, 6, g)
    ev, ref_pts, ref_w = pap_thinned_config(phi, 0.5, BOX2)
    # nothing left to add once everything is retained
    assert ev(phi.pts[0], phi) == 0.0
    # a point of phi missing from eta contributes 1/(1-p) = 2
    eta = phi.remove(phi.pts[0])
    assert ev(phi.pts[0], eta) == pytest.approx(2.0)
    assert ev(phi.pts[1], eta) == 0.0
    # GNZ over the atomic reference measure with u == 1 recovers E|thinned|
    from steinpp.transforms import thin_config

    class FixedThinning:
        space = BOX2

        @staticmethod
        def draw(n, rng):
            return [thin_config(phi, 0.5, BOX2, rng) for _ in range(n)]

    row = gnz_check(FixedThinning, ev, U_ONE, 20_000, g,
                    reference=(ref_pts, ref_w), samples=FixedThinning.draw(20_000, g))
    assert row.passed
    assert row.lhs == pytest.approx(sum(ref_w), abs=5 * row.stderr + 1e-2)


def test_pap_thinned_config_rejects_p_one():
    phi = Configuration([(0.5, 0.5)])
    with pytest.raises(ValueError):
        pap_thinned_config(phi, 1.0, BOX2)


# ---------------------------------------------------------------------------
# GNZ checks


def test_gnz_poisson_u_one_closed_form():
    model = PoissonPP(BOX1, UNIF1)
    ev = papangelou_evaluator(model)
    row = gnz_check(model, ev, U_ONE, 30_000, rngmod.stream(44, "gnz1"),
                    resolution=256)
    assert row.passed
    assert row.rhs == pytest.approx(1.0, abs=1e-9)  # rhs is exact here
    assert row.lhs == pytest.approx(1.0, abs=4 * row.stderr)


def test_gnz_u_zero_trivial():
    model = PoissonPP(BOX1, UNIF1)
    ev = papangelou_evaluator(model)
    u0 = UFunc("zero", lambda x, cfg: 0.0,
               profile_fn=lambda nodes, cfg: np.zeros(np.shape(nodes)[0]))
    row = gnz_check(model, ev, u0, 2_000, rngmod.stream(45, "gnz0"))
    assert row.lhs == 0.0 and row.rhs == 0.0 and row.passed


def test_gnz_hardcore_ball_functional():
    model = ConditionalPoissonPP(BOX2, UNIF2, HardcoreR(0.15))
    ev = papangelou_evaluator(model)
    R = 0.15

    def ball_u(x, cfg):
        xc = np.asarray(x)
        if len(cfg) == 0:
            return 1.0
        d2 = np.sum((cfg.coords(BOX2) - xc) ** 2, axis=1)
        return float(np.all(d2 >= R**2))

    def ball_profile(nodes, cfg):
        if len(cfg) == 0:
            return np.ones(len(nodes))
        d2 = ((np.atleast_2d(nodes)[:, None, :] - cfg.coords(BOX2)[None, :, :]) ** 2).sum(-1)
        return np.all(d2 >= R**2, axis=1).astype(float)

    u = UFunc("empty_ball", ball_u, profile_fn=ball_profile)
    g = rngmod.stream(46, "gnzhc")
    samples = sample_many(model, 20_000, g)
    row = gnz_check(model, ev, u, 20_000, g, resolution=64, samples=samples)
    assert row.passed
    # every retained point has an empty R-ball, so the lhs is E|Phi|
    mean_count = np.mean([len(c) for c in samples])
    assert row.lhs == pytest.approx(mean_count, abs=1e-12)


def test_gnz_detects_mismatched_evaluator():
    model = PoissonPP(BOX2, IntensityMeasure(BOX2, 2.0))
    wrong = papangelou_evaluator(PoissonPP(BOX2, UNIF2))
    row = gnz_check(model, wrong, U_ONE, 20_000, rngmod.stream(47, "bad"))
    assert not row.passed


def test_gnz_superposition_with_labels():
    model = SuperposeModel((PoissonPP(BOX2, UNIF2),
                            ConditionalPoissonPP(BOX2, UNIF2, HardcoreR(0.15))))
    ev = papangelou_evaluator(model)
    assert ev.wants_labels
    row = gnz_check(model, ev, U_ONE, 20_000, rngmod.stream(48, "gnzsup"),
                    resolution=32)
    assert row.passed


def test_superposition_weak_repulsiveness():
    # summed evaluator stays below its empty-configuration value when the
    # components are weakly repulsive
    model = SuperposeModel((ConditionalPoissonPP(BOX2, UNIF2, HardcoreR(0.2)),
                            PoissonPP(BOX2, UNIF2)))
    ev = papangelou_evaluator(model)
    from steinpp.models import LabeledConfiguration

    g = rngmod.stream(49, "weak")
    empty = LabeledConfiguration([Configuration(), Configuration()])
    for _ in range(200):
        labeled = LabeledConfiguration([
            random_config(BOX2, int(g.integers(0, 4)), g) for _ in range(2)
        ])
        x = tuple(BOX2.uniform_points(1, g)[0])
        assert ev(x, labeled) <= ev(x, empty) + 1e-10


# ---------------------------------------------------------------------------
# repulsiveness classification


def test_classify_poisson_counts_equality():
    rep = classify_prpp(CountDistribution.poisson(1.3))
    assert rep.repulsive and rep.weakly_repulsive
    assert rep.witness is None


def test_classify_geometric():
    rep = classify_prpp(CountDistribution.geometric(0.5))
    assert not rep.weakly_repulsive
    # p0 * 2 p2 = 0.125 > p1 * p1 = 0.0625 first fails at n = 1
    assert rep.witness == 1
    assert not rep.repulsive


def test_classify_two_point_with_fast_tail():
    # p0 = p1 = 1/2 padded with a doubly fast tail stays repulsive
    p2 = 1e-4
    p3 = 1.2e-8
    rest = 1.0 - (p2 + p3)
    counts = CountDistribution([rest / 2, rest / 2, p2, p3])
    rep = classify_prpp(counts)
    assert rep.repulsive and rep.weakly_repulsive


# ---------------------------------------------------------------------------
# structural lemmas


def test_structural_poisson_exact_singleton():
    model = PoissonPP(BOX1, UNIF1)
    ev = papangelou_evaluator(model)
    rows = check_structural_lemmas(
        model, ev, 30_000, rngmod.stream(50, "lem"),
        rho_profile=lambda nodes: UNIF1.at(nodes), resolution=64,
    )
    assert all(r.passed for r in rows), rows


def test_structural_dpp_correlation_is_kernel_diagonal():
    k = two_cell_kernel()
    model = DiscreteDPP(k)
    ev = papangelou_evaluator(model)
    rows = check_structural_lemmas(
        model, ev, 40_000, rngmod.stream(51, "lemdpp"),
        rho_profile=lambda idx: k.diagonal_density()[np.asarray(idx, dtype=int)],
    )
    assert all(r.passed for r in rows), rows


def test_structural_hardcore_all_pass():
    model = ConditionalPoissonPP(BOX2, UNIF2, HardcoreR(0.1))
    ev = papangelou_evaluator(model)
    rows = check_structural_lemmas(model, ev, 30_000,
                                   rngmod.stream(52, "lemhc"),
                                   resolution=32, coarse=2)
    assert len(rows) == 4
    assert all(r.passed for r in rows), rows
