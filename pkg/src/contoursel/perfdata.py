"""Solver performance data and metrics.

Run records aggregate into an ERT table, then into a relERT matrix with
PAR10-style imputation of failed configurations.  The bi-objective side
normalizes attained hypervolume per instance and rescales it against the
virtual-best/single-best gap.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DataError, ParseError

log = logging.getLogger(__name__)

TARGET_PRECISION = 1e-2
RELHV_EPSILON = 1e-8
PAPER_PENALTY = 36_690.3
REFERENCE_INFLATION = 1.1

RUN_CSV_HEADER = ["algorithm", "function", "dimension", "instance", "evaluations", "success"]
MOO_CSV_HEADER = ["algorithm", "instance", "repetition", "hv"]


@dataclass(frozen=True)
class RunRecord:
    """One solver run on one SOO instance."""

    algorithm: str
    function_code: str
    dimension: int
    instance_index: int
    evaluations_used: int
    success: bool

    def __post_init__(self):
        if self.evaluations_used < 1:
            raise ContractError("evaluations_used must be >= 1")


@dataclass(frozen=True)
class MooHvRecord:
    """Hypervolume attained by one MOO solver run."""

    algorithm: str
    instance: str
    repetition: int
    hv: float


def ert(records) -> float | None:
    """Expected running time over runs of one (function, dimension, algorithm).

    Sum of evaluations divided by the number of successes; None when no run
    succeeded.
    """
    records = list(records)
    if not records:
        raise ContractError("ert needs at least one run record")
    total = sum(r.evaluations_used for r in records)
    successes = sum(1 for r in records if r.success)
    if successes == 0:
        return None
    return total / successes


def ert_table(records) -> dict:
    """Group records by (function, dimension, algorithm) and compute ERT."""
    groups: dict[tuple, list] = {}
    for r in records:
        groups.setdefault((r.function_code, r.dimension, r.algorithm), []).append(r)
    return {key: ert(runs) for key, runs in groups.items()}


@dataclass(eq=False)
class RelErtTable:
    """relERT per (function, dimension, algorithm), failures imputed."""

    configs: tuple
    algorithms: tuple
    relert: dict
    ert: dict
    penalty: float

    def row(self, function_code: str, dimension: int) -> np.ndarray:
        """relERT vector over the portfolio, in self.algorithms order."""
        return np.array(
            [self.relert[(function_code, dimension, a)] for a in self.algorithms]
        )

    def mean_per_algorithm(self) -> dict:
        return {
            a: float(np.mean([self.relert[(f, d, a)] for f, d in self.configs]))
            for a in self.algorithms
        }


def relert_matrix(erts: dict, penalty_override: float | None = None) -> RelErtTable:
    """Normalize an ERT table by the per-configuration portfolio best.

    Undefined entries receive 10x the maximum finite relERT over the whole
    table (PAR10 style); pass penalty_override to pin the constant instead,
    e.g. for parity with externally published tables.
    """
    algorithms = tuple(sorted({a for (_, _, a) in erts}))
    configs = sorted({(f, d) for (f, d, _) in erts})
    kept = []
    relert: dict = {}
    undefined = []
    for f, d in configs:
        values = {a: erts.get((f, d, a)) for a in algorithms}
        finite = [v for v in values.values() if v is not None]
        if not finite:
            log.warning("dropping configuration (%s, d=%d): no algorithm succeeded", f, d)
            continue
        best = min(finite)
        kept.append((f, d))
        for a, v in values.items():
            if v is None:
                undefined.append((f, d, a))
            else:
                relert[(f, d, a)] = v / best
    if not kept:
        raise DataError("no configuration has a finite ERT")
    max_finite = max(relert.values())
    penalty = penalty_override if penalty_override is not None else 10.0 * max_finite
    for key in undefined:
        relert[key] = penalty
    return RelErtTable(
        configs=tuple(kept),
        algorithms=algorithms,
        relert=relert,
        ert={k: v for k, v in erts.items() if k[:2] in set(kept)},
        penalty=penalty,
    )


def sbs(table: RelErtTable) -> str:
    """Single best solver: lowest mean relERT, ties by lexicographic id."""
    means = table.mean_per_algorithm()
    best = min(means.values())
    return min(a for a, m in means.items() if m == best)


def vbs_mean(table: RelErtTable) -> float:
    """Mean over configurations of the per-configuration best relERT (1.0)."""
    return float(
        np.mean([min(table.relert[(f, d, a)] for a in table.algorithms) for f, d in table.configs])
    )


def hypervolume_2d(points, ref) -> float:
    """Exact dominated area of a 2-D minimization front w.r.t. a reference point.

    Points not strictly dominating the reference contribute nothing; the
    remaining nondominated points are swept in ascending first objective.
    """
    ref = np.asarray(ref, dtype=float)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        return 0.0
    pts = pts[(pts[:, 0] < ref[0]) & (pts[:, 1] < ref[1])]
    if len(pts) == 0:
        return 0.0
    # sort by f1 then f2; keep the running f2 minimum = the nondominated staircase
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    hv = 0.0
    best_f2 = np.inf
    kept_f1 = []
    kept_f2 = []
    for f1, f2 in pts:
        if f2 < best_f2:
            best_f2 = f2
            kept_f1.append(f1)
            kept_f2.append(f2)
    for i in range(len(kept_f1)):
        f1_next = kept_f1[i + 1] if i + 1 < len(kept_f1) else ref[0]
        hv += (f1_next - kept_f1[i]) * (ref[1] - kept_f2[i])
    return float(hv)


def rel_hv(hv: float, hv_sbs: float, hv_vbs: float, eps: float = RELHV_EPSILON) -> float:
    """Rescale hypervolume against the VBS-SBS gap: SBS ~ 0, VBS = 1,
    negative means worse than the single best solver."""
    return (hv - hv_sbs + eps) / (hv_vbs - hv_sbs + eps)


def reference_point(fronts, prespecified=None) -> tuple[float, float]:
    """Per-instance HV reference: the least favorable corner of all fronts,
    inflated by 10%; a prespecified point passes through unchanged."""
    if prespecified is not None:
        return (float(prespecified[0]), float(prespecified[1]))
    stacked = [np.asarray(f, dtype=float).reshape(-1, 2) for f in fronts if len(f)]
    if not stacked:
        raise DataError("cannot derive a reference point from empty fronts")
    worst = np.max(np.concatenate(stacked), axis=0)
    return (float(worst[0] * REFERENCE_INFLATION), float(worst[1] * REFERENCE_INFLATION))


@dataclass(eq=False)
class MooPerfTable:
    """Normalized mean hypervolume and relHV per (instance, algorithm)."""

    instances: tuple
    algorithms: tuple
    hv_norm: dict  # (instance, algorithm) -> mean normalized HV over repetitions
    sbs_algorithm: str
    hv_sbs: dict  # instance -> SBS normalized HV
    hv_vbs: dict  # instance -> best normalized HV

    def relhv(self, instance: str, algorithm: str) -> float:
        return rel_hv(self.hv_norm[(instance, algorithm)], self.hv_sbs[instance], self.hv_vbs[instance])

    def relhv_row(self, instance: str) -> np.ndarray:
        return np.array([self.relhv(instance, a) for a in self.algorithms])


def build_moo_table(records, hv_best: dict) -> MooPerfTable:
    """Aggregate MOO run records into the relHV bookkeeping.

    hv values are normalized by the per-instance best-known HV, then averaged
    over repetitions before the SBS/VBS split (see the report disclaimer for
    this aggregation choice).
    """
    instances = tuple(sorted({r.instance for r in records}))
    algorithms = tuple(sorted({r.algorithm for r in records}))
    hv_norm = {}
    for inst in instances:
        if inst not in hv_best:
            raise DataError(f"no best-known HV for instance {inst!r}")
        if hv_best[inst] <= 0:
            raise DataError(f"best-known HV for {inst!r} must be positive")
    for inst in instances:
        for a in algorithms:
            vals = [r.hv for r in records if r.instance == inst and r.algorithm == a]
            if not vals:
                raise DataError(f"no runs for ({inst}, {a})")
            hv_norm[(inst, a)] = float(np.mean(vals)) / hv_best[inst]
    means = {a: float(np.mean([hv_norm[(i, a)] for i in instances])) for a in algorithms}
    best_mean = max(means.values())
    sbs_algorithm = min(a for a, m in means.items() if m == best_mean)
    hv_sbs = {i: hv_norm[(i, sbs_algorithm)] for i in instances}
    hv_vbs = {i: max(hv_norm[(i, a)] for a in algorithms) for i in instances}
    return MooPerfTable(
        instances=instances,
        algorithms=algorithms,
        hv_norm=hv_norm,
        sbs_algorithm=sbs_algorithm,
        hv_sbs=hv_sbs,
        hv_vbs=hv_vbs,
    )


# ---------------------------------------------------------------------------
# CSV plumbing


def emit_runs(path, records) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RUN_CSV_HEADER)
        for r in records:
            writer.writerow(
                [
                    r.algorithm,
                    r.function_code,
                    r.dimension,
                    r.instance_index,
                    r.evaluations_used,
                    int(r.success),
                ]
            )


def ingest_runs(path) -> list[RunRecord]:
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RUN_CSV_HEADER:
            raise ParseError(f"{path}: expected header {RUN_CSV_HEADER}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                records.append(
                    RunRecord(
                        algorithm=row[0],
                        function_code=row[1],
                        dimension=int(row[2]),
                        instance_index=int(row[3]),
                        evaluations_used=int(row[4]),
                        success=bool(int(row[5])),
                    )
                )
            except (ValueError, IndexError) as exc:
                raise ParseError(f"{path}:{lineno}: malformed run record: {exc}") from exc
    return records


def emit_moo_hv(path, records) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MOO_CSV_HEADER)
        for r in records:
            writer.writerow([r.algorithm, r.instance, r.repetition, repr(r.hv)])


def ingest_moo_hv(path) -> list[MooHvRecord]:
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != MOO_CSV_HEADER:
            raise ParseError(f"{path}: expected header {MOO_CSV_HEADER}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                records.append(
                    MooHvRecord(
                        algorithm=row[0],
                        instance=row[1],
                        repetition=int(row[2]),
                        hv=float(row[3]),
                    )
                )
            except (ValueError, IndexError) as exc:
                raise ParseError(f"{path}:{lineno}: malformed HV record: {exc}") from exc
    return records


def emit_relert_table(path, table: RelErtTable) -> None:
    """relERT matrix as CSV: one row per (function, dimension), one column
    per portfolio algorithm."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["function", "dimension", *table.algorithms])
        for f, d in table.configs:
            writer.writerow([f, d, *(repr(table.relert[(f, d, a)]) for a in table.algorithms)])
