"""Command-line entry point: sample realizations, verify identities,
compute bounds with their empirical counterparts.

Everything is driven by one JSON config (see config.py); a master seed
makes every output byte-reproducible.  Replicated work fans out across
processes when --jobs > 1 (or STEINPP_JOBS is set); results are keyed by
their config index, so the worker count never changes the output.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import rng as rngmod
from .config import ConfigError, ExperimentConfig, SampledTransform, load_config
from .functionals import BoxCount, Cardinality, default_family
from .geometry import (
    Grid, IntensityMeasure, config_to_csv, config_to_json, dyadic_boxes,
    integrate,
)
from .models import (
    ConditionalPoissonPP, CoxAtomic, DiscreteDPP, GibbsPairwise, HardcoreR,
    LabeledConfiguration, PoissonPP, PurelyRandomPP, sample, sample_many,
)
from .reports import BOUND_HEADER, CHECK_HEADER, write_csv
from .stats import chi_square_vs_poisson  # noqa: F401  (re-export for configs)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="steinpp",
        description="point-process sampling, identity verification and "
                    "distance-bound evaluation",
    )
    parser.add_argument("command", choices=["sample", "verify", "bound"])
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--jobs", type=int, default=None,
                        help="worker processes (default: STEINPP_JOBS or 1)")
    parser.add_argument("--format", choices=["csv", "json"], default=None,
                        help="override the config output format")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        cfg.seed = args.seed
    if args.format is not None:
        cfg.out_format = args.format
    jobs = args.jobs
    if jobs is None:
        jobs = int(os.environ.get("STEINPP_JOBS", "1"))
    os.makedirs(args.out, exist_ok=True)

    if args.command == "sample":
        return cmd_sample(cfg, args.out)
    if args.command == "verify":
        return cmd_verify(cfg, args.out, args.config, jobs)
    return cmd_bound(cfg, args.out, args.config, jobs)


# ---------------------------------------------------------------------------
# sample


def cmd_sample(cfg: ExperimentConfig, out_dir: str) -> int:
    for model_id in cfg.sample_ids:
        model = cfg.models[model_id]
        g = rngmod.stream(cfg.seed, "sample", model_id)
        draw = model.draw(g) if isinstance(model, SampledTransform) else sample(model, g)
        if isinstance(draw, LabeledConfiguration):
            draw = draw.combined
        space = model.space
        if cfg.out_format == "json":
            payload = config_to_json(draw, space)
            path = os.path.join(out_dir, f"sample_{model_id}.json")
        else:
            payload = config_to_csv(draw, space)
            path = os.path.join(out_dir, f"sample_{model_id}.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(payload)
        print(f"wrote {path} ({len(draw)} points)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def _rho_profile_for(model):
    if isinstance(model, PoissonPP):
        return lambda nodes: model.intensity.at(nodes)
    if isinstance(model, DiscreteDPP) and model.kernel.alpha_denominator == 1:
        diag = model.kernel.diagonal_density()
        return lambda idx: diag[np.asarray(idx, dtype=int)]
    return None


def _default_start_config(space):
    from .geometry import Configuration

    if isinstance(space, Grid):
        picks = np.linspace(0, space.n_cells - 1, 3).astype(int)
        return Configuration([int(i) for i in picks])
    lo = np.asarray(space.bounding_box().lower)
    up = np.asarray(space.bounding_box().upper)
    pts = [tuple(lo + frac * (up - lo)) for frac in (0.2, 0.5, 0.8)]
    return Configuration(pts)


def run_verify_check(config_path, seed, index) -> tuple[list, list]:
    """One verify item; returns (check rows, rate-curve artifacts)."""
    from .glauber import (
        GlauberTarget, stein_dirichlet_check, verify_commutation,
        verify_invariance_and_rate, verify_semigroup, verify_stationarity,
    )
    from .papangelou import (
        U_ONE, box_count_u, check_structural_lemmas, gnz_check,
        papangelou_evaluator,
    )

    cfg = load_config(config_path)
    cfg.seed = seed
    spec = cfg.verify_checks[index]
    kind = spec.get("check")
    n = spec.get("n_samples", cfg.n_samples)
    rows, artifacts = [], []

    if kind == "gnz":
        model = cfg.models[spec["model"]]
        # a deliberately mismatched evaluator (borrowed from another model)
        # is allowed so that the identity can be shown to fail
        ev = papangelou_evaluator(cfg.models[spec.get("evaluator", spec["model"])])
        space = model.space
        u_name = spec.get("u", "one")
        if u_name == "one":
            u = U_ONE
        elif u_name == "box_count":
            region = dyadic_boxes(space, 2)[1]
            u = box_count_u(region, space)
        else:
            raise ConfigError(f"$.verify.checks[{index}].u",
                              f"unknown integrand {u_name!r}")
        g = rngmod.stream(cfg.seed, "verify", index, "gnz", spec["model"], u_name)
        row = gnz_check(model, ev, u, n, g, resolution=cfg.resolution)
        rows.append(row.with_model(spec["model"]))
    elif kind == "structural":
        model = cfg.models[spec["model"]]
        ev = papangelou_evaluator(model)
        g = rngmod.stream(cfg.seed, "verify", index, "structural", spec["model"])
        out = check_structural_lemmas(
            model, ev, n, g,
            weakly_repulsive=spec.get("weakly_repulsive", True),
            rho_profile=_rho_profile_for(model),
            resolution=cfg.resolution,
        )
        rows.extend(r.with_model(spec["model"]) for r in out)
    elif kind == "glauber":
        target_model = cfg.models[spec["target"]]
        if not isinstance(target_model, PoissonPP):
            raise ConfigError(f"$.verify.checks[{index}].target",
                              "glauber targets must be Poisson models")
        target = GlauberTarget(target_model.space, target_model.intensity)
        space = target.space
        F = Cardinality()
        box_f = BoxCount(dyadic_boxes(space, 2)[1], space, id="half_box")
        phi = _default_start_config(space)
        parts = spec.get("parts", ["semigroup", "commutation",
                                   "invariance_rate", "stationarity",
                                   "stein_dirichlet"])
        g = rngmod.stream(cfg.seed, "verify", index, "glauber", spec["target"])
        if "semigroup" in parts:
            rows.append(verify_semigroup(F, phi, 0.3, 0.7, target, n, g))
            rows.append(verify_semigroup(box_f, phi, 0.3, 0.7, target, n, g))
        if "commutation" in parts:
            x = tuple(np.asarray(space.bounding_box().lower) * 0.6
                      + np.asarray(space.bounding_box().upper) * 0.4) \
                if not isinstance(space, Grid) else int(space.n_cells // 2)
            rows.append(verify_commutation(F, x, phi, 0.8, target, n, g))
        if "invariance_rate" in parts:
            out, points = verify_invariance_and_rate(F, phi, target, n, g)
            rows.extend(out)
            artifacts.append(("rate", spec["target"], points,
                              len(phi) + target.total))
        if "stationarity" in parts:
            rows.extend(verify_stationarity(
                PoissonPP(space, target.intensity), [F, box_f], target,
                min(n, 20_000), g, resolution=cfg.resolution))
        if "stein_dirichlet" in parts:
            rows.append(stein_dirichlet_check(
                F, phi, target, g, s_steps=41,
                n_inner=max(200, n // 50), n_outer=n, resolution=16))
    else:
        raise ConfigError(f"$.verify.checks[{index}].check",
                          f"unknown check {kind!r}")
    return rows, artifacts


def cmd_verify(cfg: ExperimentConfig, out_dir: str, config_path, jobs: int) -> int:
    results = _fan_out(run_verify_check, config_path, cfg.seed,
                       len(cfg.verify_checks), jobs)
    rows, artifacts = [], []
    for check_rows, check_artifacts in results:
        rows.extend(check_rows)
        artifacts.extend(check_artifacts)
    _emit(out_dir, "verify", CHECK_HEADER, [r.csv_row() for r in rows],
          cfg.out_format)
    for kind, target_id, points, mass in artifacts:
        if kind != "rate":
            continue
        write_csv(os.path.join(out_dir, f"glauber_rate_{target_id}.csv"),
                  ["t", "abs_dev", "stderr", "ref_bound"],
                  [(p.t, p.deviation, p.stderr, p.reference) for p in points])
    failed = [r for r in rows if not r.passed]
    for r in rows:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.model_id} {r.check_id} lhs={r.lhs:.6g} "
              f"rhs={r.rhs:.6g} se={r.stderr:.3g}")
    return EXIT_CHECK_FAILED if failed else EXIT_OK


# ---------------------------------------------------------------------------
# bound


def _sampler_of(model):
    if isinstance(model, SampledTransform):
        return lambda n, rng: [model.draw(rng) for _ in range(n)]
    return model


def _space_of_model(model):
    return model.space


def run_bound_pair(config_path, seed, index):
    """One dominance pair; returns (bound rows, dominance row)."""
    from .bounds import (
        bound_bounded, bound_dpp_thin_rescale, bound_generic, bound_gibbs,
        bound_hardcore, bound_kallenberg, bound_minus1n_dpp,
        bound_poisson_pair, bound_prpp, bound_thinned_vs_cox,
    )
    from .distances import kr_lower_bound, polish_distance
    from .papangelou import papangelou_evaluator
    from .transforms import Rescale, Thin, thin_config, transform_model

    cfg = load_config(config_path)
    cfg.seed = seed
    pair = cfg.bound_pairs[index]
    pair_id = pair.get("pair_id", f"pair{index}")
    kind = pair.get("kind")
    n = pair.get("n_samples", cfg.n_samples)
    kr_n = pair.get("kr_samples", cfg.kr_samples)
    g = rngmod.stream(cfg.seed, "bound", index, pair_id)

    def kr(sampler_a, sampler_b, space):
        return kr_lower_bound(sampler_a, sampler_b, default_family(space),
                              kr_n, g)

    if kind == "prpp":
        model = cfg.models[pair["model"]]
        target = cfg.models[pair["target"]]
        report = bound_prpp(model.counts, target.intensity.total())
        emp = kr(_sampler_of(model), _sampler_of(target), model.space)
    elif kind == "hardcore":
        model = cfg.models[pair["model"]]
        target = cfg.models[pair["target"]]
        cond = model.condition
        base = PoissonPP(model.space, model.intensity)
        hits = np.array([cond.holds(c, model.space)
                         for c in sample_many(base, n, g)])
        p_r = float(hits.mean())
        se_r = float(hits.std(ddof=1) / math.sqrt(len(hits)))
        report = bound_hardcore(
            model.intensity.constant, model.space.total_mass(),
            cond.R, model.space.dim, p_r, se_r,
            use_paper_volume=pair.get("paper_volume", True))
        emp = kr(model, target, model.space)
    elif kind == "bounded":
        model = cfg.models[pair["model"]]
        target = cfg.models[pair["target"]]
        report = bound_bounded(model.intensity.total(), model.condition.N)
        emp = kr(model, target, model.space)
    elif kind == "gibbs":
        model = cfg.models[pair["model"]]
        target = cfg.models[pair["target"]]
        total = integrate(
            lambda pts: np.exp(-model.theta * np.asarray(model.psi1(np.atleast_2d(pts)))),
            model.space, cfg.resolution)
        report = bound_gibbs(total, model.theta, model.eps)
        emp = kr(model, target, model.space)
    elif kind == "minus1n_dpp":
        model = cfg.models[pair["model"]]
        kernel = model.kernel
        report = bound_minus1n_dpp(kernel)
        target = PoissonPP(kernel.grid,
                           IntensityMeasure(kernel.grid, kernel.diagonal_density()))
        emp = kr(model, target, kernel.grid)
    elif kind == "dpp_thin_rescale":
        base = cfg.models[pair["model"]]
        beta = pair["beta"]
        thinned = transform_model(base, Thin(beta))
        moved = transform_model(thinned, Rescale(beta, base.space.dim))
        kernel = moved.kernel
        lam = float(kernel.diagonal_density().mean())
        area = kernel.grid.total_mass()
        report = bound_dpp_thin_rescale(beta, lam, area)
        target = PoissonPP(kernel.grid, IntensityMeasure(kernel.grid, lam))
        emp = kr(moved, target, kernel.grid)
    elif kind == "thinned_vs_cox":
        base = cfg.models[pair["model"]]
        p = pair["p"]
        space = base.space
        report = bound_thinned_vs_cox(_sampler_of(base), p, space, n, g)

        def thinned_draws(k, rng):
            return [thin_config(c, p, space, rng)
                    for c in sample_many(base, k, rng)]

        def cox_draws(k, rng):
            from .bounds import _poisson_on_atoms

            return [_poisson_on_atoms(c, p, space, rng)
                    for c in sample_many(base, k, rng)]

        emp = kr(thinned_draws, cox_draws, space)
    elif kind == "kallenberg":
        base = cfg.models[pair["model"]]
        cox = cfg.models[pair["target"]]
        p = pair["p"]
        space = base.space
        report = bound_kallenberg(_sampler_of(base), p, cox, space, n, g)

        def thinned_draws(k, rng):
            return [thin_config(c, p, space, rng)
                    for c in sample_many(base, k, rng)]

        emp = polish_distance(thinned_draws, cox, kr_n, g, space)
    elif kind == "poisson_pair":
        model = cfg.models[pair["model"]]
        target = cfg.models[pair["target"]]
        report = bound_poisson_pair(model.intensity, target.intensity,
                                    model.space, cfg.resolution)
        emp = kr(model, target, model.space)
    elif kind == "generic":
        model = cfg.models[pair["model"]]
        target = cfg.models[pair["target"]]
        ev = papangelou_evaluator(model)
        report = bound_generic(target.intensity, ev, model, model.space, n, g,
                               resolution=cfg.resolution)
        emp = kr(model, target, model.space)
    else:
        raise ConfigError(f"$.bound.pairs[{index}].kind",
                          f"unknown pair kind {kind!r}")

    margin = report.value + 3 * (report.stderr + emp.stderr) - emp.value
    dom_row = (pair_id, report.bound_id, float(report.value),
               float(report.stderr), float(emp.value), float(emp.stderr),
               float(margin), margin >= 0)
    bound_row = (f"{pair_id}/{report.bound_id}", float(report.value),
                 float(report.stderr),
                 report.csv_row()[3], str(cfg.seed))
    return [bound_row], dom_row


DOMINANCE_HEADER = ["pair_id", "bound_id", "bound", "bound_stderr",
                    "kr_lower", "kr_stderr", "margin", "pass"]


def cmd_bound(cfg: ExperimentConfig, out_dir: str, config_path, jobs: int) -> int:
    results = _fan_out(run_bound_pair, config_path, cfg.seed,
                       len(cfg.bound_pairs), jobs)
    bound_rows, dom_rows = [], []
    for b_rows, d_row in results:
        bound_rows.extend(b_rows)
        dom_rows.append(d_row)
    _emit(out_dir, "bounds", BOUND_HEADER, bound_rows, cfg.out_format)
    _emit(out_dir, "dominance", DOMINANCE_HEADER, dom_rows, cfg.out_format)
    ok = True
    for row in dom_rows:
        status = "PASS" if row[7] else "FAIL"
        ok = ok and row[7]
        print(f"{status} {row[0]} bound={row[2]:.6g} kr_lower={row[4]:.6g} "
              f"margin={row[6]:.3g}")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# shared plumbing


def _fan_out(worker, config_path, seed, count, jobs):
    indices = list(range(count))
    if jobs <= 1 or count <= 1:
        return [worker(config_path, seed, i) for i in indices]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(worker, config_path, seed, i) for i in indices]
        return [f.result() for f in futures]


def _emit(out_dir, stem, header, rows, fmt):
    if fmt == "json":
        path = os.path.join(out_dir, f"{stem}.json")
        payload = [dict(zip(header, row)) for row in rows]
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True)
            fh.write("\n")
    else:
        write_csv(os.path.join(out_dir, f"{stem}.csv"), header, rows)


if __name__ == "__main__":
    sys.exit(main())
