"""Tail engines for the geometric compound sum S = X_1 + ... + X_nu.

Three engines share one output shape: an exact recursion on a lattice
(Panjer), a seeded Monte Carlo estimator, and a brute-force convolution used
as an oracle in tests. A helper converts tail tables into tables of the
relative error of the first-order approximation E(nu) * tail(x).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dist import GeometricParams, LatticeDistribution, SummandDistribution

__all__ = [
    "TailEstimate",
    "TailTable",
    "DeltaTable",
    "panjer_tail",
    "mc_tail",
    "brute_force_tail",
    "delta_from_tails",
]

_MC_BLOCK = 1 << 16


@dataclass(frozen=True)
class TailEstimate:
    """One tail probability P(S > x) with its sampling uncertainty."""

    x: float
    tail: float
    stderr: float
    engine: str


@dataclass(frozen=True)
class TailTable:
    """Tail probabilities P(S > x) on a grid, with per-point uncertainty.

    Behaves as a sequence of TailEstimate records. ``stderrs`` is zero for
    the exact engines.
    """

    xs: np.ndarray
    tails: np.ndarray
    stderrs: np.ndarray
    engine: str
    bandwidth: float | None = None

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        t = np.asarray(self.tails, dtype=float)
        s = np.asarray(self.stderrs, dtype=float)
        if not (xs.shape == t.shape == s.shape) or xs.ndim != 1:
            raise ValueError("xs, tails, stderrs must be matching 1-d arrays")
        if np.any(np.diff(xs) <= 0.0):
            raise ValueError("xs must be strictly increasing")
        if np.any(t < 0.0) or np.any(t > 1.0):
            raise ValueError("tail probabilities must lie in [0, 1]")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "tails", t)
        object.__setattr__(self, "stderrs", s)

    def __len__(self) -> int:
        return self.xs.size

    def __getitem__(self, i: int) -> TailEstimate:
        return TailEstimate(
            x=float(self.xs[i]),
            tail=float(self.tails[i]),
            stderr=float(self.stderrs[i]),
            engine=self.engine,
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))


@dataclass(frozen=True)
class DeltaTable:
    """Relative error p * P(S > x) / tail(x) - 1 on a grid."""

    xs: np.ndarray
    delta: np.ndarray
    delta_stderr: np.ndarray
    engine: str
    bandwidth: float | None = None

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        d = np.asarray(self.delta, dtype=float)
        s = np.asarray(self.delta_stderr, dtype=float)
        if not (xs.shape == d.shape == s.shape) or xs.ndim != 1:
            raise ValueError("xs, delta, delta_stderr must be matching 1-d arrays")
        if np.any(np.diff(xs) <= 0.0):
            raise ValueError("xs must be strictly increasing")
        if np.any(d < -1.0 - 1e-12):
            raise ValueError("relative error cannot fall below -1")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "delta", d)
        object.__setattr__(self, "delta_stderr", s)

    def __len__(self) -> int:
        return self.xs.size


def _kahan_cumsum(values: np.ndarray) -> np.ndarray:
    """Compensated running sum; plain cumsum drifts over 10^4+ terms."""
    out = np.empty_like(values)
    total = 0.0
    comp = 0.0
    for i, v in enumerate(values):
        y = v - comp
        t = total + y
        comp = (t - total) - y
        total = t
        out[i] = total
    return out


def panjer_tail(
    lattice: LatticeDistribution,
    params: GeometricParams,
    xmax: float,
) -> TailTable:
    """Exact compound tail on the lattice via the geometric Panjer recursion.

    Computes P(S > j * bw) for lattice points up to xmax. The recursion runs
    on the count shifted to start at zero; dividing the shifted tail by q maps
    it back to the count on {1, 2, ...}. The coefficients are exact whenever
    the severity lattice carries no truncated mass, or extends to at least
    xmax; requiring 2 * xmax leaves headroom and is the default upstream.
    """
    p, q = params.p, params.q
    bw = lattice.bandwidth
    if xmax <= 0.0:
        raise ValueError("xmax must be positive")
    if lattice.truncated_mass > 0.0 and lattice.truncation_point < xmax - 1e-9 * xmax:
        raise ValueError(
            f"severity lattice truncated at {lattice.truncation_point:g} < xmax {xmax:g}"
        )
    n = int(math.floor(xmax / bw + 1e-9))
    f = lattice.masses
    f0 = float(f[0])
    if q * f0 >= 1.0:
        raise ValueError("q * P(X=0) >= 1; recursion denominator vanishes")

    a = q / (1.0 - q * f0)
    w = np.empty(n + 1)
    w[0] = p / (1.0 - q * f0)
    for k in range(1, n + 1):
        m = min(k, f.size - 1)
        w[k] = a * float(np.dot(f[1 : m + 1], w[k - m : k][::-1]))
    if np.min(w) < -1e-12:
        raise RuntimeError("mass conservation violated: negative compound mass")
    w = np.maximum(w, 0.0)

    cdf = _kahan_cumsum(w)
    if cdf[-1] > 1.0 + 1e-9:
        raise RuntimeError("mass conservation violated: compound cdf exceeds 1")
    # the shifted compound W satisfies P(S > x) = P(W > x) / q for x >= 0
    tails = np.minimum(1.0, np.maximum(0.0, (1.0 - cdf) / q))
    xs = np.arange(n + 1, dtype=float) * bw
    return TailTable(
        xs=xs,
        tails=tails,
        stderrs=np.zeros(n + 1),
        engine="panjer",
        bandwidth=bw,
    )


def mc_tail(
    dist: SummandDistribution,
    params: GeometricParams,
    n: int,
    seed: int,
    xgrid,
) -> TailTable:
    """Monte Carlo estimate of P(S > x) on a grid, from n simulated sums.

    Draws are organized in fixed-size blocks with independently seeded
    streams, so results depend only on (seed, n) and merging block counts is
    order-independent. Uniforms are taken as dyadic rationals strictly inside
    (0, 1). Geometric counts use the inversion nu = ceil(log u / log q).
    Memory per block scales like block size divided by p. The returned table
    is in ascending grid order regardless of the order of ``xgrid``.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    xs = np.asarray(xgrid, dtype=float)
    if xs.ndim != 1 or xs.size == 0:
        raise ValueError("xgrid must be a non-empty 1-d array")
    order = np.argsort(xs, kind="stable")
    xs_sorted = xs[order]
    if np.any(np.diff(xs_sorted) <= 0.0):
        raise ValueError("xgrid values must be distinct")

    lnq = math.log(params.q)
    nblocks = (n + _MC_BLOCK - 1) // _MC_BLOCK
    seeds = np.random.SeedSequence(seed).spawn(nblocks)
    counts = np.zeros(xs_sorted.size, dtype=np.int64)
    scale = 0.5**53
    for b in range(nblocks):
        m = min(_MC_BLOCK, n - b * _MC_BLOCK)
        rng = np.random.Generator(np.random.PCG64(seeds[b]))
        u_count = (rng.integers(0, 1 << 53, size=m, dtype=np.uint64) + 0.5) * scale
        nu = np.ceil(np.log(u_count) / lnq).astype(np.int64)
        nu = np.maximum(nu, 1)
        total = int(nu.sum())
        u_sev = (rng.integers(0, 1 << 53, size=total, dtype=np.uint64) + 0.5) * scale
        sev = np.asarray(dist.sample(u_sev), dtype=float)
        starts = np.zeros(m, dtype=np.int64)
        np.cumsum(nu[:-1], out=starts[1:])
        sums = np.add.reduceat(sev, starts)
        sums.sort()
        counts += m - np.searchsorted(sums, xs_sorted, side="right")

    phat = counts / float(n)
    stderr = np.sqrt(phat * (1.0 - phat) / float(n))
    return TailTable(xs=xs_sorted, tails=phat, stderrs=stderr, engine="mc", bandwidth=None)


def brute_force_tail(
    lattice: LatticeDistribution,
    params: GeometricParams,
    term_cap: int,
    tol: float = 1e-12,
) -> TailTable:
    """Oracle engine: sum p q^(k-1) P(X_1+...+X_k > x) over k up to term_cap,
    with each convolution power computed directly.

    The neglected count mass q^term_cap bounds the truncation error and is
    reported as the per-point stderr; a warning is raised when it exceeds
    ``tol``. Quadratic in the lattice size, intended for small test lattices.
    """
    if term_cap < 1:
        raise ValueError("term_cap must be at least 1")
    p, q = params.p, params.q
    f = lattice.masses
    nn = f.size
    acc = np.zeros(nn)
    fk = f.copy()
    weight = p
    for k in range(1, term_cap + 1):
        if k > 1:
            fk = np.convolve(fk, f)[:nn]
            weight *= q
        tail_k = 1.0 - np.cumsum(fk)
        acc += weight * np.maximum(tail_k, 0.0)
    residual = q**term_cap
    if residual > tol:
        warnings.warn(
            f"brute force truncated the count at {term_cap}; residual mass {residual:.3e}",
            stacklevel=2,
        )
    xs = np.arange(nn, dtype=float) * lattice.bandwidth
    tails = np.minimum(1.0, np.maximum(0.0, acc))
    return TailTable(
        xs=xs,
        tails=tails,
        stderrs=np.full(nn, residual),
        engine="brute",
        bandwidth=lattice.bandwidth,
    )


def delta_from_tails(
    tails: TailTable,
    dist: SummandDistribution,
    params: GeometricParams,
) -> DeltaTable:
    """Relative error of the approximation P(S > x) ~ tail(x) / p.

    delta(x) = p * P(S > x) / tail(x) - 1, with the engine uncertainty scaled
    the same way.
    """
    fbar = np.asarray(dist.tail(tails.xs), dtype=float)
    if np.any(fbar <= 0.0):
        raise ValueError("severity tail vanishes on the grid; relative error undefined")
    delta = params.p * tails.tails / fbar - 1.0
    stderr = params.p * tails.stderrs / fbar
    return DeltaTable(
        xs=tails.xs,
        delta=delta,
        delta_stderr=stderr,
        engine=tails.engine,
        bandwidth=tails.bandwidth,
    )
