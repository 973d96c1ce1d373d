"""Severity distributions, geometric counts, and lattice discretization.

Everything downstream works with a heavy-tailed positive severity X and a
geometric claim count. This module provides the continuous families (Pareto,
Weibull with shape below one, finite mixtures of power tails), the geometric
parameters, and the machinery to turn a continuous severity into a lattice
distribution suitable for the recursion engine.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SummandDistribution",
    "ParetoDist",
    "WeibullDist",
    "PowerMixtureDist",
    "GeometricParams",
    "LatticeDistribution",
    "discretize",
    "build_overshoot_upper",
]


class SummandDistribution:
    """Base class for positive severity distributions.

    Subclasses must provide ``tail``, ``density`` and ``sample``. The
    remaining hooks have generic defaults that subclasses may override with
    numerically safer forms.
    """

    def tail(self, x):
        """P(X > x), vectorized over ``x``."""
        raise NotImplementedError

    def density(self, x):
        """Lebesgue density of X at ``x``, vectorized."""
        raise NotImplementedError

    def sample(self, u):
        """Map uniforms in the open interval (0, 1) to severity draws.

        Implemented as the quantile transform, so equal inputs give equal
        outputs across engines and platforms.
        """
        raise NotImplementedError

    def tail_ge(self, x):
        """P(X >= x). Coincides with ``tail`` for continuous distributions."""
        return self.tail(x)

    def tail_ratio(self, x: float, y: float) -> float:
        """tail(x - y) / tail(x) for scalar 0 <= y < x."""
        tx = self.tail(x)
        if tx == 0.0:
            raise ValueError("tail vanishes at x; ratio undefined")
        return float(self.tail(x - y) / tx)

    def k_value(self, x: float, r: float) -> float:
        """tail(x - r)/tail(x) - 1 for scalar 0 <= r < x."""
        return self.tail_ratio(x, r) - 1.0

    def j_integrand(self, x: float, y: float) -> float:
        """Integrand tail(x - y)/tail(x) * density(y) of the J kernel."""
        return self.tail_ratio(x, y) * float(self.density(y))

    def integrand_breakpoints(self, x: float) -> list[float]:
        """Interior points where the J integrand has kinks, if any."""
        return []

    @property
    def tail_power_terms(self):
        """Mixture representation sum_i c_i x^(-a_i) of the tail beyond the
        support threshold, or None when the tail is not of power type."""
        return None


def _check_uniforms(u: np.ndarray) -> None:
    if u.size and (np.min(u) <= 0.0 or np.max(u) >= 1.0):
        raise ValueError("uniform inputs must lie strictly inside (0, 1)")


@dataclass(frozen=True)
class ParetoDist(SummandDistribution):
    """Pareto severity with unit threshold: P(X > x) = x^(-alpha) for x >= 1."""

    alpha: float

    def __post_init__(self):
        if not (self.alpha > 1.0):
            raise ValueError("alpha must exceed 1 (finite mean required)")

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            t = np.where(x <= 1.0, 1.0, np.power(np.maximum(x, 1.0), -self.alpha))
        return t if t.ndim else float(t)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        d = np.where(x < 1.0, 0.0, self.alpha * np.power(np.maximum(x, 1.0), -self.alpha - 1.0))
        return d if d.ndim else float(d)

    def sample(self, u):
        u = np.asarray(u, dtype=float)
        _check_uniforms(u)
        s = np.exp(-np.log1p(-u) / self.alpha)
        return s if s.ndim else float(s)

    def tail_ratio(self, x: float, y: float) -> float:
        return self.k_value(x, y) + 1.0

    def k_value(self, x: float, r: float) -> float:
        # exact on the power region; below the threshold the tail plateaus at 1
        if x - r <= 1.0:
            return float(x) ** self.alpha - 1.0
        return math.expm1(-self.alpha * math.log1p(-r / x))

    def j_integrand(self, x: float, y: float) -> float:
        if y < 1.0:
            return 0.0
        if x - y <= 1.0:
            ratio = float(x) ** self.alpha
        else:
            ratio = math.exp(-self.alpha * (math.log(x - y) - math.log(x)))
        return ratio * self.alpha * float(y) ** (-self.alpha - 1.0)

    def integrand_breakpoints(self, x: float) -> list[float]:
        return [1.0, x - 1.0]

    @property
    def tail_power_terms(self):
        return ((1.0, self.alpha),)

    def tail_mean_above(self, r: float) -> float:
        """E[X; X > r] in closed form."""
        rr = max(r, 1.0)
        return self.alpha / (self.alpha - 1.0) * rr ** (1.0 - self.alpha)


@dataclass(frozen=True)
class WeibullDist(SummandDistribution):
    """Heavy-tailed Weibull: P(X > x) = exp(-x^beta) with 0 < beta < 1."""

    beta: float

    def __post_init__(self):
        if not (0.0 < self.beta < 1.0):
            raise ValueError("beta must lie in (0, 1) for a subexponential tail")

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        t = np.exp(-np.power(np.maximum(x, 0.0), self.beta))
        t = np.where(x <= 0.0, 1.0, t)
        return t if t.ndim else float(t)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        xp = np.maximum(x, 1e-300)
        d = self.beta * np.power(xp, self.beta - 1.0) * np.exp(-np.power(xp, self.beta))
        d = np.where(x <= 0.0, 0.0, d)
        return d if d.ndim else float(d)

    def sample(self, u):
        u = np.asarray(u, dtype=float)
        _check_uniforms(u)
        s = np.power(-np.log1p(-u), 1.0 / self.beta)
        return s if s.ndim else float(s)

    def diff_pow(self, x: float, r: float) -> float:
        """x^beta - (x-r)^beta without cancellation, for 0 <= r <= x."""
        if r <= 0.0:
            return 0.0
        if r >= x:
            return float(x) ** self.beta
        return float(x) ** self.beta * (-math.expm1(self.beta * math.log1p(-r / x)))

    def tail_ratio(self, x: float, y: float) -> float:
        return math.exp(self.diff_pow(x, y))

    def k_value(self, x: float, r: float) -> float:
        if x - r <= 0.0:
            raise ValueError("requires r < x")
        return math.expm1(self.diff_pow(x, r))

    def j_integrand(self, x: float, y: float) -> float:
        # combine exponents before exponentiating; the ratio alone overflows
        if y <= 0.0:
            return 0.0
        e = self.diff_pow(x, y) - float(y) ** self.beta
        return self.beta * float(y) ** (self.beta - 1.0) * math.exp(e)


@dataclass(frozen=True)
class PowerMixtureDist(SummandDistribution):
    """Finite mixture of power tails beyond a unit threshold.

    P(X > x) = sum_i c_i x^(-a_i) for x >= 1, with c_i > 0 summing to one and
    every exponent a_i > 1.
    """

    terms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        terms = tuple((float(c), float(a)) for c, a in self.terms)
        object.__setattr__(self, "terms", terms)
        if not terms:
            raise ValueError("mixture needs at least one term")
        csum = math.fsum(c for c, _ in terms)
        if abs(csum - 1.0) > 1e-9:
            raise ValueError(f"mixture weights sum to {csum}, expected 1")
        for c, a in terms:
            if c <= 0.0:
                raise ValueError("mixture weights must be positive")
            if a <= 1.0:
                raise ValueError("mixture exponents must exceed 1")

    @property
    def max_exponent(self) -> float:
        return max(a for _, a in self.terms)

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        xs = np.maximum(x, 1.0)
        t = np.zeros_like(xs)
        for c, a in self.terms:
            t += c * np.power(xs, -a)
        t = np.where(x <= 1.0, 1.0, t)
        return t if t.ndim else float(t)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        xs = np.maximum(x, 1.0)
        d = np.zeros_like(xs)
        for c, a in self.terms:
            d += c * a * np.power(xs, -a - 1.0)
        d = np.where(x < 1.0, 0.0, d)
        return d if d.ndim else float(d)

    def sample(self, u):
        u = np.asarray(u, dtype=float)
        scalar = u.ndim == 0
        u = np.atleast_1d(u)
        _check_uniforms(u)
        target = 1.0 - u
        # invert the tail by bisection on t = log x; the tail is strictly
        # decreasing on [1, inf) so the root is unique
        a_min = min(a for _, a in self.terms)
        t_hi = max(5.0, (-np.log(np.min(target)) + 5.0) / a_min)
        for _ in range(200):
            if self.tail(math.exp(t_hi)) < np.min(target):
                break
            t_hi *= 2.0
        lo = np.zeros_like(u)
        hi = np.full_like(u, t_hi)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            too_high = self.tail(np.exp(mid)) > target
            lo = np.where(too_high, mid, lo)
            hi = np.where(too_high, hi, mid)
        s = np.exp(0.5 * (lo + hi))
        return float(s[0]) if scalar else s

    def _tail_scalar(self, x: float) -> float:
        # scalar fast path; the kernel quadrature calls this in a tight loop
        if x <= 1.0:
            return 1.0
        return sum(c * x**-a for c, a in self.terms)

    def tail_ratio(self, x: float, y: float) -> float:
        return self._tail_scalar(x - y) / self._tail_scalar(x)

    def k_value(self, x: float, r: float) -> float:
        return self._tail_scalar(x - r) / self._tail_scalar(x) - 1.0

    def j_integrand(self, x: float, y: float) -> float:
        if y < 1.0:
            return 0.0
        dens = sum(c * a * y ** (-a - 1.0) for c, a in self.terms)
        return self._tail_scalar(x - y) / self._tail_scalar(x) * dens

    def integrand_breakpoints(self, x: float) -> list[float]:
        return [1.0, x - 1.0]

    @property
    def tail_power_terms(self):
        return self.terms

    def tail_mean_above(self, r: float) -> float:
        """E[X; X > r] in closed form."""
        rr = max(r, 1.0)
        return math.fsum(c * a / (a - 1.0) * rr ** (1.0 - a) for c, a in self.terms)


@dataclass(frozen=True)
class GeometricParams:
    """Geometric claim count on {1, 2, ...}: P(nu = k) = p (1-p)^(k-1)."""

    p: float

    def __post_init__(self):
        if not (0.0 < self.p < 1.0):
            raise ValueError("p must lie in (0, 1)")

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def mean(self) -> float:
        return 1.0 / self.p


@dataclass(frozen=True)
class LatticeDistribution:
    """Severity mass function on the lattice {0, h, 2h, ..., nh}."""

    bandwidth: float
    masses: np.ndarray
    truncation_point: float
    truncated_mass: float

    def __post_init__(self):
        if not (self.bandwidth > 0.0):
            raise ValueError("bandwidth must be positive")
        m = np.asarray(self.masses, dtype=float)
        if m.ndim != 1 or m.size == 0:
            raise ValueError("masses must be a non-empty 1-d array")
        if np.min(m) < -1e-12:
            raise ValueError("negative lattice mass")
        m = np.maximum(m, 0.0)
        object.__setattr__(self, "masses", m)
        total = math.fsum(m) + self.truncated_mass
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"lattice masses plus truncated mass total {total}, expected 1")

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.masses.size) * self.bandwidth


def discretize(
    dist: SummandDistribution,
    bandwidth: float,
    truncation: float,
    mode: str = "rounded",
    max_truncated_mass: float | None = None,
) -> LatticeDistribution:
    """Project a severity distribution onto a lattice of step ``bandwidth``.

    Modes assign the mass of X near each lattice point j*bw as follows:

    * ``rounded``: mass of [ (j-1/2) bw, (j+1/2) bw ), the midpoint rule;
    * ``lower``:   mass of [ j bw, (j+1) bw ), shifting mass down;
    * ``upper``:   mass of ( (j-1) bw, j bw ], shifting mass up.

    ``lower`` keeps atoms sitting exactly on the lattice at their own index,
    which is why it queries P(X >= x) rather than P(X > x).
    """
    if not (bandwidth > 0.0):
        raise ValueError("bandwidth must be positive")
    if not (truncation > 0.0):
        raise ValueError("truncation must be positive")
    ratio = truncation / bandwidth
    n = round(ratio)
    if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, n):
        raise ValueError("truncation must be a positive integer multiple of bandwidth")
    if mode not in ("rounded", "lower", "upper"):
        raise ValueError(f"unknown discretization mode {mode!r}")

    j = np.arange(n + 1, dtype=float)
    if mode == "rounded":
        cdf = 1.0 - np.asarray(dist.tail((j + 0.5) * bandwidth), dtype=float)
        masses = np.empty(n + 1)
        masses[0] = cdf[0]
        masses[1:] = np.diff(cdf)
    elif mode == "lower":
        tg = np.array([dist.tail_ge(v) for v in np.arange(n + 2) * bandwidth], dtype=float)
        masses = tg[:-1] - tg[1:]
    else:
        t = np.asarray(dist.tail(np.arange(-1, n + 1) * bandwidth), dtype=float)
        masses = t[:-1] - t[1:]

    masses = np.maximum(masses, 0.0)
    truncated = max(0.0, 1.0 - math.fsum(masses))
    if max_truncated_mass is not None and truncated > max_truncated_mass:
        raise ValueError(
            f"truncated mass {truncated:.3e} exceeds the allowed {max_truncated_mass:.3e};"
            " increase the truncation point"
        )
    return LatticeDistribution(
        bandwidth=bandwidth,
        masses=masses,
        truncation_point=float(truncation),
        truncated_mass=truncated,
    )


def build_overshoot_upper(c1: float, c2: float, base_exponent: float) -> PowerMixtureDist:
    """Mixture of a power tail G and its integrated tail, renormalized.

    Given a base tail G(x) = x^(-a) beyond the unit threshold, the integrated
    tail has the shape x^(-(a-1))/(a-1). The returned severity is the
    normalization of c1 * integrated + c2 * G, i.e. a two-term power mixture
    whose weights are proportional to (c1/(a-1), c2).
    """
    a = float(base_exponent)
    if not (a > 1.0):
        raise ValueError("base exponent must exceed 1")
    if c1 < 0.0 or c2 < 0.0 or c1 + c2 <= 0.0:
        raise ValueError("component weights must be non-negative with a positive sum")
    if c1 > 0.0 and a <= 2.0:
        raise ValueError(
            "integrated-tail exponent is base_exponent - 1 and must exceed 1; "
            "use base_exponent > 2 or drop the integrated component"
        )
    raw = []
    if c1 > 0.0:
        raw.append((c1 / (a - 1.0), a - 1.0))
    if c2 > 0.0:
        raw.append((c2, a))
    z = math.fsum(w for w, _ in raw)
    return PowerMixtureDist(terms=tuple((w / z, e) for w, e in raw))
