"""Overshoot kernels, cutoff functions, and test functions.

The two kernels measure how much heavier the tail of X is near x than at x:

    K(x, r) = tail(x - r) / tail(x) - 1
    J(x, r) = integral_r^{x-r} tail(x - y)/tail(x) * density(y) dy

A cutoff function h splits the integration range, and a test function g is
the shape the final relative-error bound is expressed against. The spliced
test function follows a monotone envelope of the exact relative error up to a
splice point and a pure power beyond it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .dist import ParetoDist, SummandDistribution, WeibullDist

__all__ = [
    "CutoffFunction",
    "K_kernel",
    "J_kernel",
    "validate_h",
    "HValidationReport",
    "pareto_K_envelope",
    "pareto_J_envelope",
    "weibull_K_envelope",
    "weibull_J_envelope",
    "TestFunction",
    "PowerTestFunction",
    "KKernelTestFunction",
    "SplicedTestFunction",
    "MonotoneEnvelope",
    "build_spliced_g",
    "optimal_pareto_g",
]


@dataclass(frozen=True)
class CutoffFunction:
    """Cutoff h(x), either s * x^gamma or s * (log x)^kappa.

    ``domain_start`` is the smallest x from which the function is usable as a
    cutoff: beyond it h is concave, increasing, and satisfies h(x) <= x/2.
    """

    family: str
    scale: float
    gamma: float = 0.0
    kappa: float = 0.0
    domain_start: float = field(init=False)

    @staticmethod
    def power(scale: float, gamma: float) -> "CutoffFunction":
        return CutoffFunction(family="power", scale=scale, gamma=gamma)

    @staticmethod
    def logpower(scale: float, kappa: float) -> "CutoffFunction":
        return CutoffFunction(family="logpower", scale=scale, kappa=kappa)

    def __post_init__(self):
        if self.family == "power":
            if not (self.scale > 0.0):
                raise ValueError("scale must be positive")
            if not (0.0 < self.gamma < 1.0):
                raise ValueError("power cutoff needs gamma in (0, 1)")
            # solve s x^gamma = x/2
            start = (2.0 * self.scale) ** (1.0 / (1.0 - self.gamma))
            object.__setattr__(self, "domain_start", start)
        elif self.family == "logpower":
            if not (self.scale > 0.0):
                raise ValueError("scale must be positive")
            if not (self.kappa > 0.0):
                raise ValueError("log-power cutoff needs kappa > 0")
            object.__setattr__(self, "domain_start", self._logpower_start())
        else:
            raise ValueError(f"unknown cutoff family {self.family!r}")

    def _logpower_start(self) -> float:
        # concavity of s (log x)^kappa holds from x = e^(kappa - 1); beyond
        # that, locate the last crossing of h(x) = x/2 by a scan plus bisection
        concave_from = math.exp(max(self.kappa - 1.0, 0.0))
        grid = np.geomspace(1.0 + 1e-9, 1e12, 4001)
        vals = 0.5 * grid - self(grid)
        below = np.nonzero(vals <= 0.0)[0]
        if below.size == 0:
            return max(concave_from, 1.0 + 1e-9)
        i = below[-1]
        if i + 1 >= grid.size:
            raise ValueError("cutoff exceeds x/2 beyond the probed range")
        lo, hi = grid[i], grid[i + 1]
        for _ in range(100):
            mid = math.sqrt(lo * hi)
            if 0.5 * mid - self(mid) <= 0.0:
                lo = mid
            else:
                hi = mid
        return max(hi, concave_from)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == "power":
            v = self.scale * np.power(x, self.gamma)
        else:
            if np.any(x <= 1.0):
                raise ValueError("log-power cutoff is defined for x > 1 only")
            v = self.scale * np.power(np.log(x), self.kappa)
        return v if v.ndim else float(v)

    def with_scale(self, scale: float) -> "CutoffFunction":
        if self.family == "power":
            return CutoffFunction.power(scale, self.gamma)
        return CutoffFunction.logpower(scale, self.kappa)

    def describe(self) -> str:
        if self.family == "power":
            return f"{self.scale:g} * x^{self.gamma:g}"
        return f"{self.scale:g} * (log x)^{self.kappa:g}"


def K_kernel(dist: SummandDistribution, x: float, r: float) -> float:
    """Relative overshoot of the tail over a shift r: tail(x-r)/tail(x) - 1."""
    if r < 0.0:
        raise ValueError("r must be non-negative")
    if r == 0.0:
        return 0.0
    if r >= x:
        raise ValueError("requires r < x")
    # stability beyond floating-point tail underflow is the distribution's
    # job: k_value works on ratios, never on the raw tails
    return max(0.0, dist.k_value(x, r))


def J_kernel(dist: SummandDistribution, x: float, r: float, epsrel: float = 1e-10) -> float:
    """Integral of tail(x-y)/tail(x) against the severity density over [r, x-r].

    Empty for r >= x/2 (returns 0 at equality, rejects beyond). Integration
    failures are reported rather than silently returned.
    """
    if not (r > 0.0):
        raise ValueError("r must be positive")
    if r > x / 2.0:
        raise ValueError("requires r <= x/2")
    if r == x / 2.0:
        return 0.0

    candidates = list(dist.integrand_breakpoints(x)) + [2.0 * r, 10.0 * r, x / 2.0]
    pts = sorted({p for p in candidates if r < p < x - r})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, abserr = integrate.quad(
            lambda y: dist.j_integrand(x, y),
            r,
            x - r,
            points=pts or None,
            limit=512,
            epsabs=1e-300,
            epsrel=epsrel,
        )
    if abserr > max(1e-8 * abs(val), 1e-13):
        raise RuntimeError(
            f"J kernel quadrature did not converge at x={x:g}, r={r:g}: "
            f"value {val:.6e}, error estimate {abserr:.2e}"
        )
    return max(0.0, val)


@dataclass(frozen=True)
class ConditionResult:
    passed: bool
    first_violation_x: float | None = None
    detail: str = ""


@dataclass(frozen=True)
class HValidationReport:
    """Outcome of checking a cutoff function on a grid.

    The geometric conditions (increasing, concave, below x/2) are intrinsic
    to h. The kernel conditions tie h to a severity distribution and fail for
    legitimately usable cutoffs whose K kernel does not vanish, so they are
    reported separately rather than folded into a single verdict.
    """

    grid: np.ndarray
    conditions: dict

    @property
    def geometric_ok(self) -> bool:
        return all(self.conditions[k].passed for k in ("increasing", "concave", "half"))

    @property
    def kernel_ok(self) -> bool:
        return all(self.conditions[k].passed for k in ("J_small", "K_small"))


def validate_h(
    dist: SummandDistribution,
    h: CutoffFunction,
    grid,
    c: float = 2.0,
) -> HValidationReport:
    """Check cutoff conditions on a grid: monotone, concave, h <= x/2, and the
    kernel smallness conditions J(x, h(x)) <= c * tail(h(x)) and
    K(x, h(x)) <= tail(h(x))."""
    xs = np.asarray(grid, dtype=float)
    if xs.ndim != 1 or xs.size < 3 or np.any(np.diff(xs) <= 0.0):
        raise ValueError("grid must be increasing with at least 3 points")
    hv = np.asarray(h(xs), dtype=float)

    conditions: dict[str, ConditionResult] = {}

    dif = np.diff(hv)
    bad = np.nonzero(dif < -1e-12 * np.maximum(1.0, np.abs(hv[:-1])))[0]
    conditions["increasing"] = ConditionResult(bad.size == 0, xs[bad[0] + 1] if bad.size else None)

    # concavity via chord slopes, valid on arbitrary grids
    slopes = dif / np.diff(xs)
    sbad = np.nonzero(np.diff(slopes) > 1e-9 * np.maximum(np.abs(slopes[:-1]), 1e-30))[0]
    conditions["concave"] = ConditionResult(sbad.size == 0, xs[sbad[0] + 2] if sbad.size else None)

    hbad = np.nonzero(hv > xs / 2.0 + 1e-12 * xs)[0]
    conditions["half"] = ConditionResult(hbad.size == 0, xs[hbad[0]] if hbad.size else None)

    j_first = None
    k_first = None
    for x, r in zip(xs, hv):
        if r >= x / 2.0 or r <= 0.0:
            continue
        th = float(dist.tail(r))
        if k_first is None:
            if K_kernel(dist, float(x), float(r)) > th + 1e-12:
                k_first = float(x)
        if j_first is None:
            if J_kernel(dist, float(x), float(r)) > c * th + 1e-12:
                j_first = float(x)
        if j_first is not None and k_first is not None:
            break
    conditions["J_small"] = ConditionResult(j_first is None, j_first, f"J <= {c:g} * tail(h)")
    conditions["K_small"] = ConditionResult(k_first is None, k_first, "K <= tail(h)")

    return HValidationReport(grid=xs, conditions=conditions)


def pareto_K_envelope(alpha: float, x: float, h: float) -> float:
    """Closed-form dominator of K(x, h) for the unit-threshold Pareto:
    alpha * h * x^alpha / (x - h)^(alpha + 1), valid for h < x/2."""
    if not (0.0 < h < x / 2.0):
        raise ValueError("requires 0 < h < x/2")
    u = h / x
    return alpha * u * math.exp(-(alpha + 1.0) * math.log1p(-u))


def pareto_J_envelope(alpha: float, x: float, h: float) -> float:
    """Closed-form dominator of J(x, h) for the unit-threshold Pareto:
    2 (2/h)^alpha + (4/x)^alpha, valid for h < x/2."""
    if not (0.0 < h < x / 2.0):
        raise ValueError("requires 0 < h < x/2")
    return 2.0 * (2.0 / h) ** alpha + (4.0 / x) ** alpha


def weibull_K_envelope(beta: float, x: float, h: float) -> float:
    """Dominator of K(x, h) for the Weibull tail exp(-x^beta):
    expm1(beta * h * (x - h)^(beta - 1)), valid for h < x/2."""
    if not (0.0 < h < x / 2.0):
        raise ValueError("requires 0 < h < x/2")
    return math.expm1(beta * h * (x - h) ** (beta - 1.0))


def weibull_J_envelope(beta: float, x: float, r: float) -> float:
    """Dominator of J(x, r) for the Weibull tail exp(-x^beta):
    exp(-(1-beta) r^beta)/(1-beta) + exp(-(2^(1-beta)-1) x^beta)."""
    if not (0.0 < r <= x / 2.0):
        raise ValueError("requires 0 < r <= x/2")
    head = math.exp(-(1.0 - beta) * r**beta) / (1.0 - beta)
    far = math.exp(-(2.0 ** (1.0 - beta) - 1.0) * x**beta)
    return head + far


class TestFunction:
    """Base class for the shape g(x) the error bound is expressed against."""

    variant: str = "abstract"

    def __call__(self, x: float) -> float:
        raise NotImplementedError

    def describe(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class PowerTestFunction(TestFunction):
    """g(x) = coef * x^(-exponent)."""

    coef: float = 1.0
    exponent: float = 1.0
    variant: str = field(default="power", init=False)

    def __post_init__(self):
        if not (self.coef > 0.0):
            raise ValueError("coef must be positive")
        if not (self.exponent > 0.0):
            raise ValueError("exponent must be positive")

    def __call__(self, x: float) -> float:
        return self.coef * float(x) ** (-self.exponent)

    def describe(self) -> str:
        return f"{self.coef:g} * x^-{self.exponent:g}"


@dataclass(frozen=True)
class KKernelTestFunction(TestFunction):
    """g(x) = K(x, h(x)), the overshoot kernel along the cutoff."""

    dist: SummandDistribution
    h: CutoffFunction
    variant: str = field(default="kkernel", init=False)

    def __call__(self, x: float) -> float:
        r = float(self.h(x))
        return K_kernel(self.dist, float(x), r)

    def describe(self) -> str:
        return f"K(x, h(x)) with h(x) = {self.h.describe()}"


@dataclass(frozen=True)
class MonotoneEnvelope:
    """Non-increasing piecewise-linear majorant of a tabulated function."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.size < 2 or g.shape != v.shape:
            raise ValueError("envelope needs matching 1-d grid and values, length >= 2")
        if np.any(np.diff(g) <= 0.0):
            raise ValueError("envelope grid must be strictly increasing")
        if np.any(np.diff(v) > 1e-12 * np.maximum(np.abs(v[:-1]), 1e-300)):
            raise ValueError("envelope values must be non-increasing")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    @staticmethod
    def from_table(xs, values) -> "MonotoneEnvelope":
        """Backward running maximum: the smallest non-increasing majorant on
        the table's grid."""
        v = np.asarray(values, dtype=float)
        env = np.maximum.accumulate(v[::-1])[::-1]
        return MonotoneEnvelope(grid=np.asarray(xs, dtype=float), values=env)

    def __call__(self, x: float) -> float:
        x = float(x)
        if x < self.grid[0] - 1e-9 * max(1.0, abs(self.grid[0])):
            raise ValueError(f"x={x:g} below the envelope range start {self.grid[0]:g}")
        if x >= self.grid[-1]:
            return float(self.values[-1])
        return float(np.interp(x, self.grid, self.values))


@dataclass(frozen=True)
class SplicedTestFunction(TestFunction):
    """Envelope of the tabulated relative error up to bstar, then a power tail
    kappa_splice * tailg(x) chosen so the two pieces meet continuously."""

    bstar: float
    envelope: MonotoneEnvelope
    kappa_splice: float
    tailg: PowerTestFunction
    variant: str = field(default="spliced", init=False)

    def __call__(self, x: float) -> float:
        x = float(x)
        if x >= self.bstar:
            return self.kappa_splice * self.tailg(x)
        return self.envelope(x)

    @property
    def tail_coef(self) -> float:
        """Coefficient of x^-exponent on the tail piece."""
        return self.kappa_splice * self.tailg.coef

    def describe(self) -> str:
        return (
            f"running max of the error table on [{self.envelope.grid[0]:g}, {self.bstar:g}], "
            f"then {self.tail_coef:g} * x^-{self.tailg.exponent:g}"
        )


def build_spliced_g(delta_table, bstar: float, tailg: PowerTestFunction) -> SplicedTestFunction:
    """Splice the monotone envelope of a relative-error table with a power tail.

    The envelope is the backward running maximum of the table values on
    [table start, bstar]; the power piece kappa * tailg(x) is anchored so that
    kappa * tailg(bstar) equals the envelope value at bstar.
    """
    xs = np.asarray(delta_table.xs, dtype=float)
    dv = np.asarray(delta_table.delta, dtype=float)
    if not (xs[0] <= bstar <= xs[-1]):
        raise ValueError(
            f"bstar={bstar:g} outside the table range [{xs[0]:g}, {xs[-1]:g}]"
        )
    sel = xs <= bstar
    sub_x = xs[sel]
    sub_v = dv[sel]
    if sub_x.size == 0 or sub_x[-1] < bstar - 1e-9 * max(1.0, bstar):
        sub_x = np.append(sub_x, bstar)
        sub_v = np.append(sub_v, np.interp(bstar, xs, dv))
    if sub_x.size < 2:
        raise ValueError("table too coarse to build an envelope up to bstar")
    env = MonotoneEnvelope.from_table(sub_x, sub_v)
    anchor = float(env.values[-1])
    if anchor <= 0.0:
        raise ValueError("relative error at the splice point is not positive")
    kappa = anchor / tailg(bstar)
    return SplicedTestFunction(bstar=float(bstar), envelope=env, kappa_splice=kappa, tailg=tailg)


def optimal_pareto_g(alpha: float, gamma: float) -> PowerTestFunction:
    """Power test function with the best decay exponent for a Pareto severity
    and cutoff s * x^gamma: the exponent is min(alpha * gamma, 1 - gamma)."""
    if not (alpha > 1.0):
        raise ValueError("alpha must exceed 1")
    if not (0.0 < gamma < 1.0):
        raise ValueError("gamma must lie in (0, 1)")
    return PowerTestFunction(coef=1.0, exponent=min(alpha * gamma, 1.0 - gamma))
