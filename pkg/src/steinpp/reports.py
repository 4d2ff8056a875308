"""Report records and delimited serialization.

All CSV output is comma-separated, LF-terminated, UTF-8, '.' decimal,
headers mandatory.  Floats are written with repr (shortest round-trip)
so that a fixed (config, seed) pair reproduces files byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

__all__ = ["EstimateReport", "BoundReport", "CheckRow", "write_csv", "inputs_hash"]


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path, header: list[str], rows: list[tuple]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def inputs_hash(payload) -> str:
    """Stable 16-hex digest of a JSON-serializable inputs echo."""
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class EstimateReport:
    """Monte-Carlo estimate with provenance."""

    value: float
    stderr: float
    n_samples: int
    seed: object = None
    kind: str = "exact"  # lower_bound | upper_bound | exact

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("stderr must be >= 0")

    def merge(self, other: "EstimateReport") -> "EstimateReport":
        """Pooled-variance merge of two independent estimates of one mean."""
        n1, n2 = self.n_samples, other.n_samples
        n = n1 + n2
        value = (n1 * self.value + n2 * other.value) / n
        var = (n1 * (n1 * self.stderr**2) + n2 * (n2 * other.stderr**2)) / n
        return EstimateReport(value, math.sqrt(var / n), n, self.seed, self.kind)


@dataclass(frozen=True)
class BoundReport:
    """A theoretical upper bound with its estimated ingredients."""

    bound_id: str
    value: float
    components: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    stderr: float = 0.0
    seed: object = None

    def __post_init__(self):
        if self.value < -1e-12:
            raise ValueError("bound values are nonnegative")
        if self.stderr < 0:
            raise ValueError("stderr must be >= 0")

    def csv_row(self) -> tuple:
        return (self.bound_id, float(self.value), float(self.stderr),
                inputs_hash(self.inputs), str(self.seed))


@dataclass(frozen=True)
class CheckRow:
    """One verification check outcome (GNZ, lemma, Glauber, ...)."""

    check_id: str
    model_id: str
    lhs: float
    rhs: float
    stderr: float
    passed: bool

    def csv_row(self) -> tuple:
        return (self.model_id, self.check_id, float(self.lhs), float(self.rhs),
                float(self.stderr), self.passed)

    def with_model(self, model_id: str) -> "CheckRow":
        return CheckRow(self.check_id, model_id, self.lhs, self.rhs,
                        self.stderr, self.passed)


CHECK_HEADER = ["model_id", "check_id", "lhs", "rhs", "stderr", "pass"]
BOUND_HEADER = ["bound_id", "value", "stderr", "inputs_hash", "seed"]
