"""Probability and Laplace-functional estimators at small noise.

Estimates are organized around a noise schedule eps_1 > eps_2 > ... and
a speed function a(eps) (a(eps) = eps unless configured otherwise).  Log
probabilities are reported on the a(eps) * log scale that the large
deviation bounds live on; a zero-hit estimate carries an explicit -inf
sentinel plus the one-sided rule-of-three bound 3/n so downstream
comparisons stay meaningful.

Importance sampling uses Girsanov tilting by a deterministic control u:
simulate the controlled process and reweight each sample by

    exp( -(1/sqrt(eps)) sum_i u_i . dW_i  -  (1/(2 eps)) |u|^2_{L2} )

with dW the raw increments.  This is exactly unbiased for the discrete
models since the tilt acts on the increment distribution itself.

Sampling is deterministic and schedule independent: sample index k
always reads its noise from the counter-based substream of block
k // CHUNK, so the same (config, seed) reproduces byte-identical
estimates no matter how work is batched or threaded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .models import Control, ProcessModel, _noise_block, simulate_batch
from .pathspace import (
    Ball,
    DiscretePath,
    EventSpec,
    Intersection,
    PathSet,
    ShapeMismatchError,
    TerminalAtLeast,
    TimeGrid,
    _dist_batch,
    _norms_along_dim,
)

__all__ = [
    "CHUNK",
    "Z95",
    "EpsilonSchedule",
    "LogProbEstimate",
    "TestFunction",
    "Constant",
    "CappedDistance",
    "CappedSetDistance",
    "MinOverCenters",
    "SumOf",
    "MinOf",
    "EquicontinuousFamily",
    "wilson_interval",
    "mc_probability",
    "is_probability",
    "laplace_functional",
    "quadrature_probability",
    "band_probability",
]

CHUNK = 8192
Z95 = 1.959963984540054


@dataclass(frozen=True)
class EpsilonSchedule:
    """Decreasing noise grid with speed a(eps) = scale * eps**power."""

    eps: tuple[float, ...]
    power: float = 1.0
    scale: float = 1.0

    def __post_init__(self) -> None:
        vals = tuple(float(e) for e in self.eps)
        if not vals:
            raise ValueError("empty schedule")
        if any(e <= 0 for e in vals):
            raise ValueError("eps values must be positive")
        if any(b >= a for a, b in zip(vals, vals[1:])):
            raise ValueError("schedule must be strictly decreasing")
        object.__setattr__(self, "eps", vals)

    def speed(self, eps: float) -> float:
        return self.scale * eps**self.power

    @staticmethod
    def geometric(lo: float, hi: float, count: int, power: float = 1.0, scale: float = 1.0) -> "EpsilonSchedule":
        if not (0 < lo < hi):
            raise ValueError("need 0 < lo < hi")
        if count < 1:
            raise ValueError("count must be >= 1")
        if count == 1:
            grid = (hi,)
        else:
            ratio = (lo / hi) ** (1.0 / (count - 1))
            grid = tuple(hi * ratio**k for k in range(count))
        return EpsilonSchedule(grid, power=power, scale=scale)


@dataclass(frozen=True)
class LogProbEstimate:
    """One probability estimate on the a(eps) log scale."""

    eps: float
    a_eps: float
    x: tuple[float, ...]
    p_hat: float
    ci_low: float
    ci_high: float
    hit_count: int
    n: int
    log_value: float
    zero_hit: bool
    ess: float
    seed: int
    p_rule_of_three: float | None = None
    degenerate: bool = False

    CSV_HEADER = "eps,x,phat,ci_lo,ci_hi,log_value,zero_hit,ess,n,seed"

    def csv_row(self) -> str:
        xs = ";".join(format(v, ".17g") for v in self.x)
        fields = [
            format(self.eps, ".17g"),
            xs,
            format(self.p_hat, ".17g"),
            format(self.ci_low, ".17g"),
            format(self.ci_high, ".17g"),
            format(self.log_value, ".17g") if math.isfinite(self.log_value) else "-inf",
            "1" if self.zero_hit else "0",
            format(self.ess, ".17g"),
            str(self.n),
            str(self.seed),
        ]
        return ",".join(fields)


def wilson_interval(hits: int, n: int, z: float = Z95) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("n must be positive")
    p = hits / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom
    # the endpoints are exact at the boundary counts; cancellation is not
    lo = 0.0 if hits == 0 else max(0.0, center - half)
    hi = 1.0 if hits == n else min(1.0, center + half)
    return lo, hi


# ---------------------------------------------------------------------------
# test functions (bounded continuous functionals of the path)


class TestFunction:
    """Bounded Lipschitz functional of a discrete path."""

    def bound(self) -> float:
        raise NotImplementedError

    def lipschitz(self) -> float:
        raise NotImplementedError

    def batch(self, values: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, path: DiscretePath) -> float:
        return float(self.batch(path.values[None])[0])


@dataclass(frozen=True)
class Constant(TestFunction):
    value: float

    def bound(self) -> float:
        return abs(self.value)

    def lipschitz(self) -> float:
        return 0.0

    def batch(self, values: np.ndarray) -> np.ndarray:
        return np.full(values.shape[0], self.value)


@dataclass(frozen=True)
class CappedDistance(TestFunction):
    """psi -> scale * min(2 rho(psi, center) / width, 1)."""

    center: DiscretePath
    scale: float
    width: float

    def __post_init__(self) -> None:
        if self.scale < 0 or self.width <= 0:
            raise ValueError("need scale >= 0 and width > 0")

    def bound(self) -> float:
        return self.scale

    def lipschitz(self) -> float:
        return 2.0 * self.scale / self.width

    def batch(self, values: np.ndarray) -> np.ndarray:
        rho = _norms_along_dim(values - self.center.values)
        return self.scale * np.minimum(2.0 * rho / self.width, 1.0)


@dataclass(frozen=True)
class CappedSetDistance(TestFunction):
    """psi -> scale * min(2 dist(psi, targets) / width, 1), optionally inverted.

    The inverted form scale - scale * min(2 dist / width, 1) is the cap
    used against level sets in the upper-bound test families.
    """

    targets: PathSet
    scale: float
    width: float
    inverted: bool = False

    def __post_init__(self) -> None:
        if self.scale < 0 or self.width <= 0:
            raise ValueError("need scale >= 0 and width > 0")

    def bound(self) -> float:
        return self.scale

    def lipschitz(self) -> float:
        return 2.0 * self.scale / self.width

    def batch(self, values: np.ndarray) -> np.ndarray:
        d = _dist_batch(values, self.targets)
        capped = self.scale * np.minimum(2.0 * d / self.width, 1.0)
        return self.scale - capped if self.inverted else capped


@dataclass(frozen=True)
class MinOverCenters(TestFunction):
    """cap * min(1, min_n weight_n * rho(psi, center_n)).

    With geometrically growing weights this family is bounded but not
    equicontinuous; it is the standard witness separating the plain
    uniform Laplace principle from its equicontinuous strengthening.
    """

    centers: PathSet
    weights: tuple[float, ...]
    cap: float

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.centers):
            raise ShapeMismatchError("one weight per center required")
        if self.cap < 0 or any(w <= 0 for w in self.weights):
            raise ValueError("cap >= 0 and positive weights required")

    def bound(self) -> float:
        return self.cap

    def lipschitz(self) -> float:
        return self.cap * max(self.weights)

    def batch(self, values: np.ndarray) -> np.ndarray:
        best = None
        for member, w in zip(self.centers.stack, self.weights):
            d = w * _norms_along_dim(values - member)
            best = d if best is None else np.minimum(best, d)
        return self.cap * np.minimum(best, 1.0)


@dataclass(frozen=True)
class SumOf(TestFunction):
    parts: tuple[TestFunction, ...]

    def bound(self) -> float:
        return sum(p.bound() for p in self.parts)

    def lipschitz(self) -> float:
        return sum(p.lipschitz() for p in self.parts)

    def batch(self, values: np.ndarray) -> np.ndarray:
        out = self.parts[0].batch(values)
        for p in self.parts[1:]:
            out = out + p.batch(values)
        return out


@dataclass(frozen=True)
class MinOf(TestFunction):
    parts: tuple[TestFunction, ...]

    def bound(self) -> float:
        return max(p.bound() for p in self.parts)

    def lipschitz(self) -> float:
        return max(p.lipschitz() for p in self.parts)

    def batch(self, values: np.ndarray) -> np.ndarray:
        out = self.parts[0].batch(values)
        for p in self.parts[1:]:
            out = np.minimum(out, p.batch(values))
        return out


@dataclass(frozen=True)
class EquicontinuousFamily:
    """Family with a declared common bound and Lipschitz modulus.

    Construction validates every member against the declared constants;
    a member violating them (for instance the geometric-weight family
    above) is rejected with a ValueError.
    """

    members: tuple[TestFunction, ...]
    bound: float
    lipschitz: float

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("empty family")
        for k, m in enumerate(self.members):
            if m.bound() > self.bound * (1 + 1e-12):
                raise ValueError(
                    f"member {k} has bound {m.bound()} above the declared {self.bound}"
                )
            if m.lipschitz() > self.lipschitz * (1 + 1e-12):
                raise ValueError(
                    f"member {k} has Lipschitz constant {m.lipschitz()} above the declared {self.lipschitz}"
                )


# ---------------------------------------------------------------------------
# sampling machinery


def _iter_blocks(n: int):
    block = 0
    done = 0
    while done < n:
        size = min(CHUNK, n - done)
        yield block, done, size
        block += 1
        done += size


def _simulate_block(model, grid, x, eps, control, seed, block, size):
    inc = _noise_block(grid, model.channels, seed, block, size)
    paths = simulate_batch(model, grid, x, eps, control, inc)
    return inc, paths


def _girsanov_log_weights(control: Control, increments: np.ndarray, eps: float) -> np.ndarray:
    u = control.values
    dot = np.einsum("bik,ik->b", increments, u)
    return -dot / math.sqrt(eps) - control.squared_l2 / (2.0 * eps)


def _finish_estimate(
    *, model, x, eps, a_eps, hits, weights, n, seed
) -> LogProbEstimate:
    hit_count = int(np.sum(hits))
    zero = hit_count == 0
    if weights is None:
        p_hat = hit_count / n
        ci_low, ci_high = wilson_interval(hit_count, n)
        ess = float(n)
        degenerate = False
    else:
        contrib = weights * hits
        p_hat = float(math.fsum(contrib) / n)
        se = float(np.std(contrib, ddof=1)) / math.sqrt(n) if n > 1 else 0.0
        ci_low = max(0.0, p_hat - Z95 * se)
        ci_high = min(1.0, p_hat + Z95 * se)
        wsum = float(math.fsum(weights))
        wsq = float(math.fsum(w * w for w in weights))
        ess = wsum * wsum / wsq if wsq > 0 else 0.0
        degenerate = ess < 10.0
    if p_hat > 0.0:
        log_value = a_eps * math.log(p_hat)
    else:
        log_value = -math.inf
    start = model._as_state(x)
    return LogProbEstimate(
        eps=eps,
        a_eps=a_eps,
        x=tuple(float(v) for v in start),
        p_hat=p_hat,
        ci_low=ci_low,
        ci_high=ci_high,
        hit_count=hit_count,
        n=n,
        log_value=log_value,
        zero_hit=zero,
        ess=ess,
        seed=seed,
        p_rule_of_three=(3.0 / n) if zero else None,
        degenerate=degenerate,
    )


def mc_probability(
    model: ProcessModel,
    grid: TimeGrid,
    x,
    eps: float,
    event: EventSpec,
    n: int,
    seed: int,
    speed=None,
) -> LogProbEstimate:
    """Plain Monte Carlo estimate of P(X^eps_x in event) with Wilson CI."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    a_eps = float(speed(eps)) if speed is not None else eps
    hits = np.empty(n)
    for block, offset, size in _iter_blocks(n):
        _, paths = _simulate_block(model, grid, x, eps, None, seed, block, size)
        hits[offset : offset + size] = event.margins(paths) > 0.0
    return _finish_estimate(
        model=model, x=x, eps=eps, a_eps=a_eps, hits=hits, weights=None, n=n, seed=seed
    )


def is_probability(
    model: ProcessModel,
    grid: TimeGrid,
    x,
    eps: float,
    event: EventSpec,
    tilt: Control,
    n: int,
    seed: int,
    speed=None,
) -> LogProbEstimate:
    """Girsanov-tilted importance sampling estimate of P(X^eps_x in event)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    a_eps = float(speed(eps)) if speed is not None else eps
    hits = np.empty(n)
    weights = np.empty(n)
    for block, offset, size in _iter_blocks(n):
        inc, paths = _simulate_block(model, grid, x, eps, tilt, seed, block, size)
        hits[offset : offset + size] = event.margins(paths) > 0.0
        weights[offset : offset + size] = np.exp(_girsanov_log_weights(tilt, inc, eps))
    return _finish_estimate(
        model=model, x=x, eps=eps, a_eps=a_eps, hits=hits, weights=weights, n=n, seed=seed
    )


def laplace_functional(
    model: ProcessModel,
    grid: TimeGrid,
    x,
    eps: float,
    h: TestFunction,
    n: int,
    seed: int,
    speed=None,
    tilt: Control | None = None,
) -> float:
    """Estimate of a(eps) * log E exp(-h(X^eps_x) / a(eps)).

    The exponent is max-shifted (log-sum-exp) before exponentiation, so
    constant h returns exactly -h and rare large values cannot
    underflow the whole sum.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    a_eps = float(speed(eps)) if speed is not None else eps
    exponents = np.empty(n)
    for block, offset, size in _iter_blocks(n):
        inc, paths = _simulate_block(model, grid, x, eps, tilt, seed, block, size)
        expo = -h.batch(paths) / a_eps
        if tilt is not None:
            expo = expo + _girsanov_log_weights(tilt, inc, eps)
        exponents[offset : offset + size] = expo
    return a_eps * float(logsumexp(exponents) - math.log(n))


# ---------------------------------------------------------------------------
# deterministic quadrature oracle for tiny grids


def _last_step_sections(margin_fn, lo: float, hi: float, scan: int = 257) -> list[tuple[float, float]]:
    """Subintervals of [lo, hi] where a continuous margin is positive."""
    zs = np.linspace(lo, hi, scan)
    ms = margin_fn(zs)
    sections: list[tuple[float, float]] = []

    def refine(a, b, fa, fb):
        # bisect a sign change to 1e-13 absolute
        for _ in range(60):
            mid = 0.5 * (a + b)
            fm = float(margin_fn(np.array([mid]))[0])
            if (fa > 0) == (fm > 0):
                a, fa = mid, fm
            else:
                b, fb = mid, fm
            if b - a < 1e-13:
                break
        return 0.5 * (a + b)

    inside = ms[0] > 0
    start = lo if inside else None
    for i in range(1, scan):
        now = ms[i] > 0
        if now and not inside:
            start = refine(zs[i - 1], zs[i], ms[i - 1], ms[i])
        elif inside and not now:
            sections.append((start, refine(zs[i - 1], zs[i], ms[i - 1], ms[i])))
        inside = now
    if inside:
        sections.append((start, hi))
    return sections


def quadrature_probability(
    model: ProcessModel,
    grid: TimeGrid,
    x,
    eps: float,
    event: EventSpec,
    nodes: int = 20,
    analytic_last: bool = True,
) -> float:
    """Quadrature value of P(X^eps_x in event) for small scalar grids.

    Tensor Gauss-Hermite over the Gaussian increments; with
    ``analytic_last`` the final increment is integrated exactly against
    the normal density over the sections where the event margin is
    positive (found by scan and bisection), which removes the indicator
    discontinuity from the quadrature dimensions.
    """
    if model.channels != 1 or model.dim != 1:
        raise ShapeMismatchError("quadrature oracle covers scalar single-channel models")
    if grid.steps > 4:
        raise ValueError("quadrature oracle is for grids with at most 4 steps")
    from numpy.polynomial.hermite_e import hermegauss
    from scipy.stats import norm

    z, w = hermegauss(nodes)
    w = w / math.sqrt(2.0 * math.pi)  # weights of the standard normal density
    sdt = math.sqrt(grid.dt)
    steps = grid.steps
    outer = steps - 1 if analytic_last and steps >= 1 else steps

    # tensor grid over the outer increments
    if outer == 0:
        combos = np.zeros((1, 0))
        cw = np.ones(1)
    else:
        grids = np.meshgrid(*([z] * outer), indexing="ij")
        combos = np.stack([g.reshape(-1) for g in grids], axis=1)
        wgrids = np.meshgrid(*([w] * outer), indexing="ij")
        cw = np.ones(combos.shape[0])
        for g in wgrids:
            cw = cw * g.reshape(-1)

    total = 0.0
    span = 10.0  # integrate the last increment over +-10 standard deviations
    for combo, weight in zip(combos, cw):
        if not analytic_last:
            inc = (combo * sdt)[None, :, None]
            paths = simulate_batch(model, grid, x, eps, None, inc)
            total += float(weight) * float(event.margins(paths)[0] > 0.0)
            continue

        def margin_of_last(zlast: np.ndarray) -> np.ndarray:
            b = zlast.shape[0]
            inc = np.empty((b, steps, 1))
            inc[:, :outer, 0] = combo * sdt
            inc[:, outer, 0] = zlast * sdt
            paths = simulate_batch(model, grid, x, eps, None, inc)
            return event.margins(paths)

        mass = 0.0
        for a, b in _last_step_sections(margin_of_last, -span, span):
            mass += float(norm.cdf(b) - norm.cdf(a))
        total += float(weight) * mass
    return total


# ---------------------------------------------------------------------------
# exact band-propagation oracle


def _interval_bands(event: EventSpec, grid: TimeGrid) -> list[tuple[float, float]]:
    """Per-grid-point intervals whose conjunction equals the event.

    Covers events that factor across time into scalar interval
    constraints: balls around a path, terminal halfspaces and
    intersections of those.  Raises TypeError for anything else.
    """
    inf = math.inf
    bands = [(-inf, inf) for _ in range(grid.steps + 1)]

    def merge(i: int, lo: float, hi: float) -> None:
        a, b = bands[i]
        bands[i] = (max(a, lo), min(b, hi))

    def walk(ev: EventSpec) -> None:
        if isinstance(ev, Ball):
            if ev.center.grid != grid:
                raise ShapeMismatchError("ball center grid differs")
            if ev.center.dim != 1:
                raise TypeError("band oracle is scalar only")
            for i in range(grid.steps + 1):
                c = float(ev.center.values[i, 0])
                merge(i, c - ev.radius, c + ev.radius)
        elif isinstance(ev, TerminalAtLeast):
            if ev.coordinate != 0:
                raise TypeError("band oracle is scalar only")
            merge(grid.steps, ev.level, inf)
        elif isinstance(ev, Intersection):
            for part in ev.parts:
                walk(part)
        else:
            raise TypeError(f"no band structure for {type(ev).__name__}")

    walk(event)
    return bands


def band_probability(
    model: ProcessModel,
    grid: TimeGrid,
    x,
    eps: float,
    event: EventSpec,
    nodes: int = 200,
) -> float:
    """Exact P(X^eps_x in event) for band-factorable events (scalar BM family).

    Propagates the Gaussian transition density through the per-time
    intervals of the event on Gauss-Legendre panels; smooth integrands
    make this converge to well below Monte Carlo resolution, so it
    serves as the reference the sampling estimators are audited against.
    Unlike the sampled estimators this treats interval endpoints as
    immaterial (the law is atomless).
    """
    from numpy.polynomial.legendre import leggauss

    if eps <= 0:
        raise ValueError("eps must be positive")
    if model.channels != 1 or model.dim != 1:
        raise ShapeMismatchError("band oracle covers scalar single-channel models")
    bands = _interval_bands(event, grid)
    start = float(model.effective_start(model._as_state(x), eps)[0])
    lo0, hi0 = bands[0]
    if not lo0 < start < hi0:
        return 0.0
    sigma = math.sqrt(eps * grid.dt)
    # clip unbounded band ends to +-9 diffusion standard deviations
    def clipped(i: int) -> tuple[float, float]:
        lo, hi = bands[i]
        reach = 9.0 * sigma * math.sqrt(i)
        lo = max(lo, start - reach)
        hi = min(hi, start + reach)
        return lo, hi

    z, w = leggauss(nodes)

    def panel(lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
        half = 0.5 * (hi - lo)
        return lo + half * (z + 1.0), w * half

    def kernel(y: np.ndarray, zpts: np.ndarray) -> np.ndarray:
        d = y[:, None] - zpts[None, :]
        return np.exp(-0.5 * (d / sigma) ** 2) / (sigma * math.sqrt(2.0 * math.pi))

    lo, hi = clipped(1)
    if hi <= lo:
        return 0.0
    pts, wts = panel(lo, hi)
    dens = kernel(pts, np.array([start]))[:, 0]
    for i in range(2, grid.steps + 1):
        lo, hi = clipped(i)
        if hi <= lo:
            return 0.0
        new_pts, new_wts = panel(lo, hi)
        dens = kernel(new_pts, pts) @ (wts * dens)
        pts, wts = new_pts, new_wts
    return float(np.dot(wts, dens))
