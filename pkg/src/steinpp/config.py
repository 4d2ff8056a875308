"""Experiment configuration: one strict, versioned JSON document.

Unknown keys anywhere in the tree are errors; every message carries the
JSON path of the offending entry so a bad config can be fixed without
reading this file.  Only JSON-expressible model families are accepted
here; the library itself takes arbitrary callables.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Box, BoxRegion, Disk, Grid, IntensityMeasure
from .kernels import Kernel, ginibre_kernel
from .models import (
    BinomialPP, BoundedN, ConditionalPoissonPP, CountDistribution, CoxAtomic,
    DiscreteDPP, GibbsPairwise, HardcoreR, PoissonPP, PurelyRandomPP,
)
from .transforms import (
    NotClosed, Rescale, Restrict, Superpose, Thin, rescale_config,
    rescale_space, thin_config, transform_model,
)

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "build_model",
           "SampledTransform"]

SCHEMA_VERSION = "steinpp/1"

KNOWN_TOP = {"schema", "seed", "output", "estimators", "models", "sample",
             "verify", "bound"}


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def _expect_keys(d: dict, path: str, required: set, optional: set = frozenset()):
    if not isinstance(d, dict):
        raise ConfigError(path, f"expected an object, got {type(d).__name__}")
    unknown = set(d) - required - set(optional)
    if unknown:
        raise ConfigError(path, f"unknown keys {sorted(unknown)}")
    missing = required - set(d)
    if missing:
        raise ConfigError(path, f"missing keys {sorted(missing)}")


def _number(d, key, path, lo=None, hi=None):
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}", "expected a number")
    if lo is not None and v < lo:
        raise ConfigError(f"{path}.{key}", f"must be >= {lo}")
    if hi is not None and v > hi:
        raise ConfigError(f"{path}.{key}", f"must be <= {hi}")
    return float(v)


def _integer(d, key, path, lo=None):
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}.{key}", "expected an integer")
    if lo is not None and v < lo:
        raise ConfigError(f"{path}.{key}", f"must be >= {lo}")
    return int(v)


# ---------------------------------------------------------------------------
# spaces


def build_space(spec: dict, path: str):
    _expect_keys(spec, path, {"kind"},
                 {"lower", "upper", "radius", "center", "cells_per_axis",
                  "rings"})
    kind = spec["kind"]
    if kind == "box":
        _expect_keys(spec, path, {"kind", "lower", "upper"})
        return Box(tuple(spec["lower"]), tuple(spec["upper"]))
    if kind == "disk":
        _expect_keys(spec, path, {"kind", "radius"}, {"center"})
        return Disk(_number(spec, "radius", path, lo=0.0),
                    tuple(spec.get("center", (0.0, 0.0))))
    if kind == "grid_box":
        _expect_keys(spec, path, {"kind", "lower", "upper", "cells_per_axis"})
        return Grid.regular(Box(tuple(spec["lower"]), tuple(spec["upper"])),
                            _integer(spec, "cells_per_axis", path, lo=1))
    if kind == "grid_polar":
        _expect_keys(spec, path, {"kind", "radius", "rings"}, {"center"})
        return Grid.polar(_number(spec, "radius", path, lo=0.0),
                          _integer(spec, "rings", path, lo=1),
                          tuple(spec.get("center", (0.0, 0.0))))
    raise ConfigError(f"{path}.kind", f"unknown space kind {kind!r}")


def build_counts(spec: dict, path: str) -> CountDistribution:
    _expect_keys(spec, path, {"kind"}, {"ratio", "mean", "probs"})
    kind = spec["kind"]
    if kind == "geometric":
        return CountDistribution.geometric(_number(spec, "ratio", path, 0.0, 1.0))
    if kind == "poisson":
        return CountDistribution.poisson(_number(spec, "mean", path, lo=0.0))
    if kind == "explicit":
        return CountDistribution(spec["probs"])
    raise ConfigError(f"{path}.kind", f"unknown count law {kind!r}")


# ---------------------------------------------------------------------------
# models


@dataclass
class SampledTransform:
    """Transform pipeline applied draw by draw when no closed form exists."""

    base: object
    nodes: tuple
    space: object

    def draw(self, rng):
        from .models import sample

        cfg = sample(self.base, rng)
        space = self.base.space
        for node in self.nodes:
            if isinstance(node, Thin):
                cfg = thin_config(cfg, node.beta, space, rng)
            elif isinstance(node, Rescale):
                cfg = rescale_config(cfg, node.eps, node.dim)
                space = rescale_space(space, node.eps)
            elif isinstance(node, Restrict):
                from .transforms import restrict_config

                cfg = restrict_config(cfg, node.region, space)
            else:
                raise NotClosed("superposition pipelines need closed form")
        return cfg


def _gibbs_from_config(space, theta, pair_scale, pair_range, max_attempts):
    def psi1(coords):
        return np.zeros(np.shape(coords)[0])

    def psi2(a, b):
        d = np.linalg.norm(np.atleast_2d(a)[:, None, :]
                           - np.atleast_2d(b)[None, :, :], axis=-1)
        return pair_scale * (d < pair_range)

    return GibbsPairwise(space, theta, psi1, psi2, eps=pair_scale,
                         max_attempts=max_attempts)


def _gaussian_kernel(grid: Grid, magnitude, length_scale, spectral_cap):
    xy = grid.locations
    d2 = ((xy[:, None, :] - xy[None, :, :]) ** 2).sum(-1)
    vals = magnitude * np.exp(-d2 / (2 * length_scale**2))
    s = np.sqrt(grid.weights)
    weighted = vals * np.outer(s, s)
    top = float(np.linalg.eigvalsh(weighted).max())
    if spectral_cap is not None and top > 0:
        weighted *= spectral_cap / top
    return Kernel(grid, weighted)


def build_model(spec: dict, path: str, models_by_id: dict | None = None):
    _expect_keys(spec, path, {"id", "family", "space", "parameters"},
                 {"transforms"})
    space = build_space(spec["space"], f"{path}.space")
    fam = spec["family"]
    par = spec["parameters"]
    ppath = f"{path}.parameters"

    if fam == "poisson":
        _expect_keys(par, ppath, {"intensity"})
        model = PoissonPP(space, IntensityMeasure(space, _number(par, "intensity", ppath, lo=0.0)))
    elif fam == "binomial":
        _expect_keys(par, ppath, {"n_points", "density"})
        model = BinomialPP(space, _integer(par, "n_points", ppath, lo=0),
                           IntensityMeasure(space, _number(par, "density", ppath, lo=0.0)))
    elif fam == "purely_random":
        _expect_keys(par, ppath, {"counts", "density"})
        model = PurelyRandomPP(space, build_counts(par["counts"], f"{ppath}.counts"),
                               IntensityMeasure(space, _number(par, "density", ppath, lo=0.0)))
    elif fam == "hardcore":
        _expect_keys(par, ppath, {"intensity", "radius"}, {"max_attempts"})
        model = ConditionalPoissonPP(
            space, IntensityMeasure(space, _number(par, "intensity", ppath, lo=0.0)),
            HardcoreR(_number(par, "radius", ppath, lo=0.0)),
            max_attempts=par.get("max_attempts", 10**6))
    elif fam == "bounded":
        _expect_keys(par, ppath, {"intensity", "max_points"}, {"max_attempts"})
        model = ConditionalPoissonPP(
            space, IntensityMeasure(space, _number(par, "intensity", ppath, lo=0.0)),
            BoundedN(_integer(par, "max_points", ppath, lo=0)),
            max_attempts=par.get("max_attempts", 10**6))
    elif fam == "gibbs_pairwise":
        _expect_keys(par, ppath, {"theta", "pair_scale", "pair_range"},
                     {"max_attempts"})
        model = _gibbs_from_config(
            space, _number(par, "theta", ppath, lo=0.0),
            _number(par, "pair_scale", ppath, lo=0.0),
            _number(par, "pair_range", ppath, lo=0.0),
            par.get("max_attempts", 10**6))
    elif fam == "dpp_gaussian":
        _expect_keys(par, ppath, {"magnitude", "length_scale"},
                     {"spectral_cap", "alpha_denominator"})
        if not isinstance(space, Grid):
            raise ConfigError(f"{path}.space", "determinantal models need a grid")
        kernel = _gaussian_kernel(
            space, _number(par, "magnitude", ppath, lo=0.0),
            _number(par, "length_scale", ppath, lo=0.0),
            par.get("spectral_cap"))
        n = par.get("alpha_denominator", 1)
        if n != 1:
            kernel = kernel.with_alpha(-1.0 / n)
        model = DiscreteDPP(kernel)
    elif fam == "ginibre":
        _expect_keys(par, ppath, {"gamma", "beta"}, {"grid_resolution"})
        if not isinstance(space, Disk):
            raise ConfigError(f"{path}.space", "this kernel lives on a disk")
        model = DiscreteDPP(ginibre_kernel(
            _number(par, "gamma", ppath, lo=0.0),
            _number(par, "beta", ppath, lo=0.0),
            space, par.get("grid_resolution", 16)))
    elif fam == "cox_atomic":
        _expect_keys(par, ppath, {"atoms"})
        atoms = []
        for i, atom in enumerate(par["atoms"]):
            _expect_keys(atom, f"{ppath}.atoms[{i}]", {"weight", "intensity"})
            inten = atom["intensity"]
            if isinstance(inten, list):
                m = IntensityMeasure(space, np.asarray(inten, dtype=float))
            else:
                m = IntensityMeasure(space, float(inten))
            atoms.append((float(atom["weight"]), m))
        model = CoxAtomic(space, tuple(atoms))
    else:
        raise ConfigError(f"{path}.family", f"unknown family {fam!r}")

    for t_index, t in enumerate(spec.get("transforms", [])):
        node = build_transform(t, f"{path}.transforms[{t_index}]", space)
        try:
            model = transform_model(model, node)
        except NotClosed:
            nodes = (node,) if not isinstance(model, SampledTransform) \
                else model.nodes + (node,)
            base = model.base if isinstance(model, SampledTransform) else model
            final_space = base.space
            for nd in nodes:
                if isinstance(nd, Rescale):
                    final_space = rescale_space(final_space, nd.eps)
            model = SampledTransform(base, nodes, final_space)
    return model


def build_transform(spec: dict, path: str, space):
    _expect_keys(spec, path, {"op"}, {"beta", "eps", "lower", "upper"})
    op = spec["op"]
    if op == "thin":
        return Thin(_number(spec, "beta", path, 0.0, 1.0))
    if op == "rescale":
        return Rescale(_number(spec, "eps", path, lo=0.0), space.dim)
    if op == "restrict":
        return Restrict(BoxRegion(tuple(spec["lower"]), tuple(spec["upper"])))
    raise ConfigError(f"{path}.op", f"unknown transform {op!r}")


# ---------------------------------------------------------------------------
# whole document


@dataclass
class ExperimentConfig:
    seed: int
    out_format: str
    n_samples: int
    kr_samples: int
    resolution: int | None
    models: dict
    sample_ids: list
    verify_checks: list
    bound_pairs: list
    raw: dict = field(repr=False, default_factory=dict)


def load_config(path_or_dict) -> ExperimentConfig:
    if isinstance(path_or_dict, dict):
        doc = path_or_dict
    else:
        with open(path_or_dict, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    _expect_keys(doc, "$", {"schema", "seed"},
                 KNOWN_TOP - {"schema", "seed"})
    if doc["schema"] != SCHEMA_VERSION:
        raise ConfigError("$.schema", f"expected {SCHEMA_VERSION!r}")
    seed = _integer(doc, "seed", "$", lo=0)

    out = doc.get("output", {})
    _expect_keys(out, "$.output", set(), {"format"})
    out_format = out.get("format", "csv")
    if out_format not in ("csv", "json"):
        raise ConfigError("$.output.format", "must be 'csv' or 'json'")

    est = doc.get("estimators", {})
    _expect_keys(est, "$.estimators", set(),
                 {"n_samples", "kr_samples", "resolution"})
    n_samples = est.get("n_samples", 20_000)
    kr_samples = est.get("kr_samples", n_samples)
    resolution = est.get("resolution")

    models = {}
    for i, mspec in enumerate(doc.get("models", [])):
        path = f"$.models[{i}]"
        if not isinstance(mspec, dict) or "id" not in mspec:
            raise ConfigError(path, "model entries need an 'id'")
        if mspec["id"] in models:
            raise ConfigError(f"{path}.id", f"duplicate id {mspec['id']!r}")
        models[mspec["id"]] = build_model(mspec, path)

    sample_block = doc.get("sample", {})
    _expect_keys(sample_block, "$.sample", set(), {"models"})
    sample_ids = sample_block.get("models", list(models))
    for sid in sample_ids:
        if sid not in models:
            raise ConfigError("$.sample.models", f"unknown model id {sid!r}")

    verify_block = doc.get("verify", {})
    _expect_keys(verify_block, "$.verify", set(), {"checks"})
    verify_checks = verify_block.get("checks", [])

    bound_block = doc.get("bound", {})
    _expect_keys(bound_block, "$.bound", set(), {"pairs"})
    bound_pairs = bound_block.get("pairs", [])

    return ExperimentConfig(seed, out_format, n_samples, kr_samples,
                            resolution, models, sample_ids, verify_checks,
                            bound_pairs, raw=doc)
