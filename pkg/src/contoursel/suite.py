"""Analytic black-box problem suite with shifted instances.

Eight scalable single-objective functions (shifted in decision and
objective space) plus four fixed bi-objective problems stand in for the
usual benchmark suite at desk scale.  All decision variables live in
[-5, 5]; optima are known analytically so success checks are exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, InvalidProblemError

DOMAIN_LO = -5.0
DOMAIN_HI = 5.0
SHIFT_LO = -4.0
SHIFT_HI = 4.0

SOO_FUNCTIONS = (
    "sphere",
    "ellipsoid",
    "rastrigin",
    "rosenbrock",
    "discus",
    "bent_cigar",
    "griewank",
    "ackley",
)
MOO_FUNCTIONS = ("zdt1", "zdt2", "zdt3", "bi_sphere")

SOO_DIMENSIONS = (2, 3, 5, 10)
MOO_DIMENSION = 2

# Group analogy: 1 separable, 2 low-conditioned valley, 3 high-conditioned,
# 4 multimodal with global structure, 5 multimodal with weak structure.
FUNCTION_GROUPS = {
    "sphere": 1,
    "ellipsoid": 1,
    "rastrigin": 1,
    "rosenbrock": 2,
    "discus": 3,
    "bent_cigar": 3,
    "griewank": 4,
    "ackley": 5,
}

_KIND_CODE = {"soo": 0, "moo": 1}
_FUNCTION_CODE = {name: i for i, name in enumerate(SOO_FUNCTIONS + MOO_FUNCTIONS)}


@dataclass(frozen=True)
class ProblemId:
    """Identifies one problem: kind, function, dimension, instance index."""

    kind: str
    function_code: str
    dimension: int
    instance_index: int

    def __post_init__(self):
        if self.kind not in ("soo", "moo"):
            raise InvalidProblemError(f"unknown kind {self.kind!r}")
        if self.kind == "soo":
            if self.function_code not in SOO_FUNCTIONS:
                raise InvalidProblemError(
                    f"{self.function_code!r} is not a single-objective function"
                )
            if self.dimension not in SOO_DIMENSIONS:
                raise InvalidProblemError(
                    f"unsupported dimension {self.dimension} (want one of {SOO_DIMENSIONS})"
                )
        else:
            if self.function_code not in MOO_FUNCTIONS:
                raise InvalidProblemError(
                    f"{self.function_code!r} is not a bi-objective function"
                )
            if self.dimension != MOO_DIMENSION:
                raise InvalidProblemError("bi-objective problems are d=2 only")
        if self.instance_index < 0:
            raise InvalidProblemError("instance_index must be non-negative")


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """A concrete instance: id plus the sampled shifts.

    Immutable after construction; evaluation is pure, so instances are safe
    to share across threads.
    """

    id: ProblemId
    seed: int
    x_opt: np.ndarray | None
    f_opt: float | None
    centers: tuple[np.ndarray, np.ndarray] | None = field(default=None)

    @property
    def dimension(self) -> int:
        return self.id.dimension

    def descriptor(self) -> dict:
        return {
            "kind": self.id.kind,
            "function_code": self.id.function_code,
            "dimension": self.id.dimension,
            "instance_index": self.id.instance_index,
            "seed": self.seed,
        }


def _instance_rng(pid: ProblemId, seed: int) -> np.random.Generator:
    words = [
        seed & 0xFFFFFFFFFFFFFFFF,
        _KIND_CODE[pid.kind],
        _FUNCTION_CODE[pid.function_code],
        pid.dimension,
        pid.instance_index,
    ]
    return np.random.default_rng(np.random.SeedSequence(words))


def make_instance(pid: ProblemId, seed: int) -> ProblemInstance:
    """Build a deterministic instance for (pid, seed).

    SOO instances draw x_opt uniformly in [-4, 4]^d and f_opt in [-100, 100].
    ZDT problems are canonical (no shift); bi_sphere draws its two centers
    from the same seeded stream.
    """
    rng = _instance_rng(pid, seed)
    if pid.kind == "soo":
        x_opt = rng.uniform(SHIFT_LO, SHIFT_HI, size=pid.dimension)
        f_opt = float(rng.uniform(-100.0, 100.0))
        return ProblemInstance(id=pid, seed=seed, x_opt=x_opt, f_opt=f_opt)
    if pid.function_code == "bi_sphere":
        a = rng.uniform(SHIFT_LO, SHIFT_HI, size=2)
        b = rng.uniform(SHIFT_LO, SHIFT_HI, size=2)
        return ProblemInstance(id=pid, seed=seed, x_opt=None, f_opt=None, centers=(a, b))
    return ProblemInstance(id=pid, seed=seed, x_opt=None, f_opt=None)


def instance_from_descriptor(desc: dict) -> ProblemInstance:
    pid = ProblemId(
        kind=desc["kind"],
        function_code=desc["function_code"],
        dimension=int(desc["dimension"]),
        instance_index=int(desc["instance_index"]),
    )
    return make_instance(pid, int(desc["seed"]))


# ---------------------------------------------------------------------------
# Single-objective formulas.  Each takes the shifted coordinates z (n, d)
# and returns (n,) values with minimum 0 at z = 0 (rosenbrock: z = 1).


def _sphere(z):
    return np.sum(z * z, axis=-1)


def _ellipsoid(z):
    d = z.shape[-1]
    weights = 10.0 ** (6.0 * np.arange(d) / (d - 1))
    return np.sum(weights * z * z, axis=-1)


def _rastrigin(z):
    d = z.shape[-1]
    return 10.0 * (d - np.sum(np.cos(2.0 * np.pi * z), axis=-1)) + np.sum(z * z, axis=-1)


def _rosenbrock(z):
    a = z[..., :-1]
    b = z[..., 1:]
    return np.sum(100.0 * (a * a - b) ** 2 + (a - 1.0) ** 2, axis=-1)


def _discus(z):
    return 1e6 * z[..., 0] ** 2 + np.sum(z[..., 1:] ** 2, axis=-1)


def _bent_cigar(z):
    return z[..., 0] ** 2 + 1e6 * np.sum(z[..., 1:] ** 2, axis=-1)


def _griewank(z):
    d = z.shape[-1]
    idx = np.sqrt(np.arange(1, d + 1, dtype=float))
    return (
        np.sum(z * z, axis=-1) / 4000.0
        - np.prod(np.cos(z / idx), axis=-1)
        + 1.0
    )


def _ackley(z):
    d = z.shape[-1]
    rms = np.sqrt(np.sum(z * z, axis=-1) / d)
    mean_cos = np.sum(np.cos(2.0 * np.pi * z), axis=-1) / d
    return -20.0 * np.exp(-0.2 * rms) - np.exp(mean_cos) + 20.0 + np.e


_SOO_FORMULAS = {
    "sphere": _sphere,
    "ellipsoid": _ellipsoid,
    "rastrigin": _rastrigin,
    "rosenbrock": _rosenbrock,
    "discus": _discus,
    "bent_cigar": _bent_cigar,
    "griewank": _griewank,
    "ackley": _ackley,
}


def evaluate_soo_batch(inst: ProblemInstance, xs: np.ndarray) -> np.ndarray:
    """Evaluate a (n, d) batch of points on a single-objective instance."""
    if inst.id.kind != "soo":
        raise ContractError("evaluate_soo on a non-SOO instance")
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 2 or xs.shape[1] != inst.dimension:
        raise ContractError(
            f"expected points of shape (n, {inst.dimension}), got {xs.shape}"
        )
    z = xs - inst.x_opt
    if inst.id.function_code == "rosenbrock":
        z = z + 1.0
    return _SOO_FORMULAS[inst.id.function_code](z) + inst.f_opt


def evaluate_soo(inst: ProblemInstance, x: np.ndarray) -> float:
    """Evaluate one point; minimum value f_opt is attained at x_opt."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ContractError(f"expected a 1-D point, got shape {x.shape}")
    return float(evaluate_soo_batch(inst, x[None, :])[0])


# ---------------------------------------------------------------------------
# Bi-objective formulas.  The toolkit domain is [-5, 5]^2 everywhere; ZDT's
# native [0, 1]^2 box is reached through an affine map so the prober only
# ever deals with one domain convention.


def _to_unit(xs):
    return (xs - DOMAIN_LO) / (DOMAIN_HI - DOMAIN_LO)


def evaluate_moo_batch(inst: ProblemInstance, xs: np.ndarray) -> np.ndarray:
    """Evaluate a (n, 2) batch; returns an (n, 2) array of objective pairs."""
    if inst.id.kind != "moo":
        raise ContractError("evaluate_moo on a non-MOO instance")
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 2 or xs.shape[1] != 2:
        raise ContractError(f"expected points of shape (n, 2), got {xs.shape}")
    code = inst.id.function_code
    if code == "bi_sphere":
        a, b = inst.centers
        f1 = np.sum((xs - a) ** 2, axis=-1)
        f2 = np.sum((xs - b) ** 2, axis=-1)
        return np.stack([f1, f2], axis=-1)
    u = _to_unit(xs)
    f1 = u[:, 0]
    g = 1.0 + 9.0 * u[:, 1]
    ratio = f1 / g
    if code == "zdt1":
        f2 = g * (1.0 - np.sqrt(ratio))
    elif code == "zdt2":
        f2 = g * (1.0 - ratio**2)
    else:  # zdt3
        f2 = g * (1.0 - np.sqrt(ratio) - ratio * np.sin(10.0 * np.pi * f1))
    return np.stack([f1, f2], axis=-1)


def evaluate_moo(inst: ProblemInstance, x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ContractError(f"expected a 1-D point, got shape {x.shape}")
    pair = evaluate_moo_batch(inst, x[None, :])[0]
    return float(pair[0]), float(pair[1])


def pareto_front_points(inst: ProblemInstance, n: int = 2001) -> np.ndarray:
    """Dense sample of the instance's true Pareto front in objective space.

    Used as the best-known hypervolume reference at desk scale.  For ZDT the
    front lies at g = 1 (second coordinate at the mapped zero); zdt3's front
    is the nondominated subset of that curve.  bi_sphere's Pareto set is the
    segment between its two centers.
    """
    if inst.id.kind != "moo":
        raise ContractError("pareto front requested for a non-MOO instance")
    t = np.linspace(0.0, 1.0, n)
    code = inst.id.function_code
    if code == "bi_sphere":
        a, b = inst.centers
        gap = np.sum((b - a) ** 2)
        pts = np.stack([t**2 * gap, (1.0 - t) ** 2 * gap], axis=-1)
        return pts
    if code == "zdt1":
        pts = np.stack([t, 1.0 - np.sqrt(t)], axis=-1)
    elif code == "zdt2":
        pts = np.stack([t, 1.0 - t**2], axis=-1)
    else:
        f2 = 1.0 - np.sqrt(t) - t * np.sin(10.0 * np.pi * t)
        pts = np.stack([t, f2], axis=-1)
        keep = _nondominated_mask(pts)
        pts = pts[keep]
    return pts


def _nondominated_mask(points: np.ndarray) -> np.ndarray:
    """Boolean mask of points not dominated by any other point (minimization)."""
    n = len(points)
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        if not keep[i]:
            continue
        dominated = (
            np.all(points <= points[i], axis=1)
            & np.any(points < points[i], axis=1)
        )
        if np.any(dominated & keep):
            keep[i] = False
    return keep


def true_group(function_code: str) -> int:
    """Function group index (1..5) for a single-objective function."""
    if function_code not in FUNCTION_GROUPS:
        raise InvalidProblemError(f"no group defined for {function_code!r}")
    return FUNCTION_GROUPS[function_code]
