"""Seeded generators for the three benchmark designs and their exact laws.

Factors are i.i.d. uniform on {-1, 0, 1}, stored as codes 0, 1, 2. Responses
are binary (-1/1) and encoded with m = 1 and no mass at 0.

* ``ex1``: Y0 = 1 if X2 = 1 and X3 >= 0, or X2 = -1 and X3 + X5 >= 1; else -1.
  Y = Y0 * (-1)^Z with Z ~ Bernoulli(gamma).
* ``ex2``: Y0 = 1 if X2 = 1 or X3 + X5 + X8 >= 2; else -1. Same noise.
* ``ex3``: Y = 1 if 3^(X1+X2+X4) sin(X3 U^ln(X3 - 2 X4 + 7)) > 1 else -1,
  with U ~ Uniform[0, 1] independent of X.

Random streams
--------------
Every dataset is drawn from ``numpy.random.Generator(PCG64(SeedSequence(seed,
spawn_key=(stream,))))``. Within a stream the draw order is fixed: the full
N x n factor table via ``integers(0, 3, size=(N, n))`` (int64), then one
``random(N)`` vector (noise flips ``< gamma`` for ex1/ex2, U for ex3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .core import Dataset, FactorSpace, FactorSubset, ResponseSpace
from .oracle import JointLaw

CODING = {0: -1, 1: 0, 2: 1}
SIGNIFICANT = {"ex1": (2, 3, 5), "ex2": (2, 3, 5, 8), "ex3": (1, 2, 3, 4)}
RNG_NAME = "numpy PCG64 via SeedSequence(seed, spawn_key=(stream,))"


@dataclass(frozen=True)
class GeneratorSpec:
    example: str
    N: int
    seed: int
    n: int = 50
    gamma: float | None = 0.1
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        ex = str(self.example).lower()
        object.__setattr__(self, "example", ex)
        if ex not in SIGNIFICANT:
            raise ValueError(f"unknown example {self.example!r}; expected one of {sorted(SIGNIFICANT)}")
        if self.n < max(SIGNIFICANT[ex]):
            raise ValueError(f"{ex} needs n >= {max(SIGNIFICANT[ex])}, got n={self.n}")
        if self.N < 1:
            raise ValueError(f"N must be positive, got {self.N}")
        if ex == "ex3":
            object.__setattr__(self, "gamma", None)
        elif self.gamma is None or not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def significant(self) -> FactorSubset:
        return FactorSubset(SIGNIFICANT[self.example])

    def with_N(self, N: int) -> "GeneratorSpec":
        return GeneratorSpec(self.example, N, self.seed, self.n, self.gamma)

    def echo(self) -> dict:
        return {"example": self.example, "N": self.N, "seed": int(self.seed), "n": self.n,
                "gamma": self.gamma}


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(ss))


def clean_response(example: str, v: np.ndarray) -> np.ndarray:
    """Noise-free Y0 for ex1/ex2 given factor *values* (-1/0/1), columns = factors 1..n."""
    x = lambda i: v[:, i - 1]  # noqa: E731
    if example == "ex1":
        pos = ((x(2) == 1) & (x(3) >= 0)) | ((x(2) == -1) & (x(3) + x(5) >= 1))
    elif example == "ex2":
        pos = (x(2) == 1) | (x(3) + x(5) + x(8) >= 2)
    else:
        raise ValueError(f"{example} has no noise-free response")
    return np.where(pos, 1, -1)


def ex3_response(v: np.ndarray, u: np.ndarray) -> np.ndarray:
    x1, x2, x3, x4 = (v[:, i].astype(float) for i in range(4))
    with np.errstate(divide="ignore"):
        expo = np.log(x3 - 2 * x4 + 7)
    lhs = np.power(3.0, x1 + x2 + x4) * np.sin(x3 * np.power(u, expo))
    return np.where(lhs > 1.0, 1, -1)


def generate(spec: GeneratorSpec, stream: int = 0) -> Dataset:
    rng = make_rng(spec.seed, stream)
    codes = rng.integers(0, 3, size=(spec.N, spec.n), dtype=np.int64)
    u = rng.random(spec.N)
    values = codes - 1
    meta = {"generator": spec.echo(), "stream": int(stream), "coding": CODING, "rng": RNG_NAME}
    if spec.example == "ex3":
        y = ex3_response(values, u)
        meta["latent"] = "U ~ Uniform[0,1] per row, not stored"
    else:
        y0 = clean_response(spec.example, values)
        y = np.where(u < spec.gamma, -y0, y0)
    return Dataset(codes.astype(np.uint8), y, ResponseSpace(1), FactorSpace(spec.n, 2), meta)


def _ex3_cell_prob_closed(x1: int, x2: int, x3: int, x4: int) -> float:
    """P(Y = 1 | X1..X4) in closed form (values -1/0/1)."""
    if x3 != 1:
        # sin(0) = 0 and sin of a negative argument in [-1, 0) is negative
        return 0.0
    target = 3.0 ** -(x1 + x2 + x4)
    if target >= math.sin(1.0):
        return 0.0
    e = math.log(8 - 2 * x4)
    # sin(u^e) > target  <=>  u > arcsin(target)^(1/e)
    return 1.0 - math.asin(target) ** (1.0 / e)


def _ex3_cell_prob_numeric(x1: int, x2: int, x3: int, x4: int, grid: int = 4097) -> float:
    """Lebesgue measure of {u in [0,1]: event} from sign changes refined by brentq."""
    a = 3.0 ** (x1 + x2 + x4)
    e = math.log(x3 - 2 * x4 + 7)

    def g(u):
        return a * math.sin(x3 * u ** e) - 1.0

    us = np.linspace(0.0, 1.0, grid)
    vals = np.array([g(u) for u in us])
    pos = vals > 0
    edges = [0.0]
    for i in range(grid - 1):
        if pos[i] != pos[i + 1]:
            edges.append(brentq(g, us[i], us[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))
    edges.append(1.0)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if g(0.5 * (lo + hi)) > 0:
            total += hi - lo
    return total


def exact_law(spec: GeneratorSpec, method: str = "closed") -> JointLaw:
    """Exact joint law of (X_alpha, Y) on the significant factors.

    ``method`` only matters for ex3: ``"closed"`` uses the arcsin solution,
    ``"quadrature"`` measures the event set numerically.
    """
    r = len(SIGNIFICANT[spec.example])
    n_cells = 3 ** r
    probs = np.zeros((n_cells, 3))
    grid = np.array(np.meshgrid(*[np.arange(3)] * r, indexing="ij")).reshape(r, -1).T
    cell_p = 1.0 / n_cells
    for code, cell in enumerate(grid):
        vals = cell - 1
        if spec.example == "ex3":
            fn = _ex3_cell_prob_closed if method == "closed" else _ex3_cell_prob_numeric
            p1 = fn(*map(int, vals))
        else:
            full = np.zeros((1, max(SIGNIFICANT[spec.example])), dtype=np.int64)
            full[0, np.array(SIGNIFICANT[spec.example]) - 1] = vals
            y0 = clean_response(spec.example, full)[0]
            p1 = 1.0 - spec.gamma if y0 == 1 else spec.gamma
        probs[code, 2] = cell_p * p1
        probs[code, 0] = cell_p * (1.0 - p1)
    return JointLaw(probs, r, 2, 1)


def sample_law(law: JointLaw, N: int, seed: int, stream: int = 0) -> Dataset:
    """Draw N i.i.d. rows (r factors, response) from an explicit law."""
    rng = make_rng(seed, stream)
    flat = law.probs.ravel()
    idx = rng.choice(flat.size, size=N, p=flat / flat.sum())
    cell, yi = np.divmod(idx, 2 * law.m + 1)
    base = law.s + 1
    factors = np.empty((N, law.r), dtype=np.int64)
    for t in range(law.r - 1, -1, -1):
        cell, factors[:, t] = np.divmod(cell, base)
    return Dataset(factors.astype(np.uint8), yi - law.m, ResponseSpace(law.m),
                   FactorSpace(law.r, law.s), {"stream": int(stream)})
