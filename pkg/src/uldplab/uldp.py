"""Finite-sample checkers for five uniform large deviation definitions.

Each checker turns one definition into a family of measurable gap
quantities.  A gap compares an estimated log probability (or Laplace
functional) against the matching rate-side quantity so that the
definition predicts a sign in the small-noise limit: lower-bound gaps
should approach something >= 0, upper-bound gaps something <= 0, and
Laplace gaps should shrink to 0.  Reports keep every cell with its
provenance (estimates, rates, seeds) and attach a fitted trend plus a
coarse verdict.

Conventions
-----------
* Probabilities of events are always taken on the plain set; shrinking
  (eta > 0) and fattening (eta < 0) apply to the rate side only.
* Set infima of the rate function are estimated from level-set samples
  plus a deterministic pool of constant-slope controls; they are upper
  bounds of the true infimum.  An empty filter gives +inf and makes the
  corresponding bound vacuous: the gap is reported as +inf.
* A zero-hit probability keeps its -inf sentinel; a lower gap built
  from it is -inf, which is what the counterexamples predict.
* All sub-seeds are derived from the budget seed with stable hashing
  and never depend on the index point x, so index sets sharing a model
  family share their noise (common random numbers).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .estimators import (
    CappedDistance,
    CappedSetDistance,
    EpsilonSchedule,
    EquicontinuousFamily,
    LogProbEstimate,
    TestFunction,
    is_probability,
    laplace_functional,
    mc_probability,
)
from .models import Control, ProcessModel, constant_control, simulate_batch, skeleton
from .pathspace import Ball, DiscretePath, DistanceAtLeast, EventSpec, PathSet, TimeGrid
from .rates import constant_slope_controls, inf_h_plus_I, sample_level_set

__all__ = [
    "subseed",
    "IndexSetSample",
    "CheckBudgets",
    "CheckCell",
    "TrendInfo",
    "CheckReport",
    "event_rate_bound",
    "fwuldp_gaps",
    "dzuldp_gaps",
    "ulp_gap",
    "eulp_gap",
    "luldp_gaps",
    "make_families",
    "scenario",
    "gap_sum",
]


def subseed(seed: int, *tags) -> int:
    """Stable 63-bit sub-seed from a master seed and a tag tuple."""
    text = repr((int(seed),) + tuple(tags)).encode()
    return int.from_bytes(hashlib.sha256(text).digest()[:8], "big") >> 1


@dataclass(frozen=True)
class IndexSetSample:
    """Finite stand-in for the index set of starting points.

    ``tag`` records the class of subsets of the state space the sample
    is meant to represent: "all-subsets", "bounded" (with ``radius``)
    or "compact".
    """

    label: str
    points: tuple
    tag: str = "bounded"
    radius: float | None = None

    def __post_init__(self) -> None:
        if self.tag not in ("all-subsets", "bounded", "compact"):
            raise ValueError(f"unknown index-set tag {self.tag!r}")
        pts = tuple(tuple(float(v) for v in np.atleast_1d(p)) for p in self.points)
        if not pts:
            raise ValueError("index set sample must be nonempty")
        object.__setattr__(self, "points", pts)
        if self.tag == "bounded" and self.radius is None:
            r = max(max(abs(v) for v in p) for p in pts)
            object.__setattr__(self, "radius", float(r))


@dataclass(frozen=True)
class CheckBudgets:
    """Sampling budgets and estimator policy for one checker run."""

    mc_samples: int = 2000
    level_count: int = 24
    constant_pool: int = 16
    s_levels: int = 8
    seed: int = 0
    tilt: str = "none"  # "none" | "level-member" | "auto-constant"
    tilt_grid: tuple[float, float, int] = (-3.0, 3.0, 121)
    tilt_margin: float = 0.0
    hold_threshold: float = 0.25

    def __post_init__(self) -> None:
        if self.tilt not in ("none", "level-member", "auto-constant"):
            raise ValueError(f"unknown tilt policy {self.tilt!r}")


@dataclass
class CheckCell:
    eps: float
    x: tuple[float, ...]
    extra: dict
    gap: float
    inputs: dict


@dataclass
class TrendInfo:
    slope: float
    verdict: str


@dataclass
class CheckReport:
    definition: str
    model: dict
    index_set: dict
    params: dict
    cells: list[CheckCell]
    aggregates: list[dict]
    trend: TrendInfo

    def to_json(self) -> dict:
        return _jsonable(
            {
                "definition": self.definition,
                "model": self.model,
                "A": self.index_set,
                "params": self.params,
                "cells": [
                    {"eps": c.eps, "x": c.x, "extra": c.extra, "gap": c.gap, "inputs": c.inputs}
                    for c in self.cells
                ],
                "aggregates": self.aggregates,
                "trend": {"slope": self.trend.slope, "verdict": self.trend.verdict},
            }
        )

    def save_json(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)
            fh.write("\n")

    def cells_csv(self) -> str:
        lines = ["definition,eps,x,extra,gap,phat,log_value,rate"]
        for c in self.cells:
            xs = ";".join(format(v, ".17g") for v in c.x)
            row = [
                self.definition,
                format(c.eps, ".17g"),
                xs,
                json.dumps(_jsonable(c.extra), separators=(",", ":")),
                _fmt_float(c.gap),
                _fmt_float(c.inputs.get("phat")),
                _fmt_float(c.inputs.get("log_value")),
                _fmt_float(c.inputs.get("rate")),
            ]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def _fmt_float(v) -> str:
    if v is None:
        return ""
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        return "nan"
    return format(v, ".17g")


def _jsonable(obj):
    """Recursively convert to JSON-safe values; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def gap_sum(log_prob: float, rate_side: float) -> float:
    """Combine a log-probability with a rate-side value.

    +inf on the rate side means the bound is vacuous and dominates; a
    -inf sentinel in the probability makes a lower gap -inf.
    """
    if math.isinf(rate_side) and rate_side > 0:
        return math.inf
    if math.isinf(log_prob) and log_prob < 0:
        return -math.inf
    return log_prob + rate_side


def _fit_slope(pairs: list[tuple[float, float]]) -> float:
    finite = [(e, g) for e, g in pairs if math.isfinite(g)]
    if len(finite) < 2:
        return math.nan
    e = np.array([p[0] for p in finite])
    g = np.array([p[1] for p in finite])
    return float(np.polyfit(e, g, 1)[0])


def _estimate_csv_inputs(est: LogProbEstimate) -> dict:
    return {
        "phat": est.p_hat,
        "log_value": est.log_value,
        "ci": [est.ci_low, est.ci_high],
        "hits": est.hit_count,
        "n": est.n,
        "ess": est.ess,
        "zero_hit": est.zero_hit,
        "seed": est.seed,
        "rule_of_three": est.p_rule_of_three,
    }


# ---------------------------------------------------------------------------
# tilt policies


def _zero_noise_path(model: ProcessModel, grid: TimeGrid, x, eps: float, control: Control | None):
    inc = np.zeros((1, grid.steps, model.channels))
    return simulate_batch(model, grid, x, eps, control, inc)[0]


def _auto_constant_tilt(
    model: ProcessModel, grid: TimeGrid, x, eps: float, event: EventSpec, budgets: CheckBudgets
) -> Control | None:
    """Constant channel-0 control whose eps-skeleton best enters the event.

    Scans a 1-d grid of constants and keeps the margin maximizer (ties
    to the smaller |c|).  For ball-like events this lands on the center
    tilt; a centering tilt is still variance reducing even when the
    deterministic path stays outside the event.
    """
    lo, hi, num = budgets.tilt_grid
    best: tuple[float, float] | None = None
    for c in np.linspace(lo, hi, int(num)):
        control = constant_control(grid, float(c), model.channels)
        values = _zero_noise_path(model, grid, x, eps, control)
        margin = float(event.margins(values[None])[0])
        if best is None or margin > best[1] or (margin == best[1] and abs(c) < abs(best[0])):
            best = (float(c), margin)
    if best is None or best[0] == 0.0:
        return None
    return constant_control(grid, best[0], model.channels)


def _estimate_probability(
    model: ProcessModel,
    grid: TimeGrid,
    x,
    eps: float,
    event: EventSpec,
    budgets: CheckBudgets,
    seed: int,
    speed,
    member_tilt: Control | None = None,
) -> LogProbEstimate:
    tilt: Control | None = None
    if budgets.tilt == "level-member":
        tilt = member_tilt
    elif budgets.tilt == "auto-constant":
        tilt = _auto_constant_tilt(model, grid, x, eps, event, budgets)
    if tilt is None or not np.any(tilt.values):
        return mc_probability(model, grid, x, eps, event, budgets.mc_samples, seed, speed)
    return is_probability(model, grid, x, eps, event, tilt, budgets.mc_samples, seed, speed)


# ---------------------------------------------------------------------------
# rate side of set bounds


def event_rate_bound(
    model: ProcessModel,
    grid: TimeGrid,
    x,
    event: EventSpec,
    s_max: float,
    count: int,
    seed: int,
    constant_pool: int = 16,
    eta: float = 0.0,
    closed: bool = False,
) -> tuple[float, int | None]:
    """Upper-bound estimate of inf { I_x(phi) : phi in the (shrunk) event }.

    Membership of a candidate is margin > eta (open sets) or
    margin >= -eta (closed sets, where eta fattens).  Returns +inf and
    None when no candidate qualifies.
    """
    sample = sample_level_set(model, grid, x, s_max, count, seed)
    candidates = list(zip(sample.energies, sample.paths.members))
    for c in constant_slope_controls(grid, model.channels, s_max, constant_pool):
        candidates.append((c.energy, skeleton(model, grid, x, c)))
    best = math.inf
    best_idx: int | None = None
    for idx, (energy, member) in enumerate(candidates):
        margin = float(event.margins(member.values[None])[0])
        ok = margin >= -eta if closed else margin > eta
        if ok and energy < best:
            best = energy
            best_idx = idx
    return best, best_idx


# ---------------------------------------------------------------------------
# Freidlin-Wentzell style gaps


def fwuldp_gaps(
    model: ProcessModel,
    grid: TimeGrid,
    index_set: IndexSetSample,
    s0: float,
    delta: float,
    schedule: EpsilonSchedule,
    budgets: CheckBudgets,
) -> list[CheckReport]:
    """Lower and upper Freidlin-Wentzell gap reports.

    Lower cells: min over sampled level-set members phi of
    a(eps) log P(rho(X, phi) < delta) + I(phi); should stay above a
    small negative slack when the definition holds.  Upper cells: max
    over s in a grid of [0, s0] of
    a(eps) log P(dist(X, level set at s) >= delta) + s; should stay
    below a small positive slack.  Level-set seeds and Monte Carlo
    seeds never depend on x.
    """
    if s0 < 0 or delta <= 0:
        raise ValueError("need s0 >= 0 and delta > 0")
    model_spec = _model_dict(model)
    aset = _index_dict(index_set)
    params = {
        "eps": list(schedule.eps),
        "delta": delta,
        "s0": s0,
        "budgets": _budget_dict(budgets),
    }
    lower_cells: list[CheckCell] = []
    upper_cells: list[CheckCell] = []

    level_seed = subseed(budgets.seed, "fw", "level", s0)
    samples = {
        pt: sample_level_set(model, grid, np.array(pt), s0, budgets.level_count, level_seed)
        for pt in index_set.points
    }
    s_grid = [s0 * k / (budgets.s_levels - 1) for k in range(budgets.s_levels)] if budgets.s_levels > 1 else [s0]
    upper_samples = {
        (pt, si): sample_level_set(
            model, grid, np.array(pt), s, budgets.level_count, subseed(budgets.seed, "fw", "upper-level", si)
        )
        for pt in index_set.points
        for si, s in enumerate(s_grid)
    }

    for ei, eps in enumerate(schedule.eps):
        for pt in index_set.points:
            sample = samples[pt]
            member_rows = []
            cell_gap = math.inf
            for k, (control, energy, member) in enumerate(
                zip(sample.controls, sample.energies, sample.paths.members)
            ):
                event = Ball(member, delta)
                est = _estimate_probability(
                    model,
                    grid,
                    pt,
                    eps,
                    event,
                    budgets,
                    subseed(budgets.seed, "fw", "lower", ei, k),
                    schedule.speed,
                    member_tilt=control,
                )
                g = gap_sum(est.log_value, energy)
                member_rows.append({"member": k, "rate": energy, **_estimate_csv_inputs(est)})
                if g < cell_gap:
                    cell_gap = g
            best = min(member_rows, key=lambda r: gap_sum(r["log_value"], r["rate"]))
            lower_cells.append(
                CheckCell(
                    eps=eps,
                    x=pt,
                    extra={"member": best["member"]},
                    gap=cell_gap,
                    inputs={
                        "phat": best["phat"],
                        "log_value": best["log_value"],
                        "rate": best["rate"],
                        "members": member_rows,
                    },
                )
            )

            s_rows = []
            cell_up = -math.inf
            for si, s in enumerate(s_grid):
                event = DistanceAtLeast(upper_samples[(pt, si)].paths, delta)
                est = _estimate_probability(
                    model,
                    grid,
                    pt,
                    eps,
                    event,
                    budgets,
                    subseed(budgets.seed, "fw", "upper", ei, si),
                    schedule.speed,
                )
                g = est.log_value + s if math.isfinite(est.log_value) else -math.inf
                s_rows.append({"s": s, **_estimate_csv_inputs(est)})
                if g > cell_up:
                    cell_up = g
            best_s = max(
                s_rows,
                key=lambda r: (r["log_value"] + r["s"]) if math.isfinite(r["log_value"]) else -math.inf,
            )
            upper_cells.append(
                CheckCell(
                    eps=eps,
                    x=pt,
                    extra={"s": best_s["s"]},
                    gap=cell_up,
                    inputs={
                        "phat": best_s["phat"],
                        "log_value": best_s["log_value"],
                        "rate": best_s["s"],
                        "levels": s_rows,
                    },
                )
            )

    lower = _assemble(
        "fwuldp-lower", model_spec, aset, params, lower_cells, schedule, budgets, kind="lower"
    )
    upper = _assemble(
        "fwuldp-upper", model_spec, aset, params, upper_cells, schedule, budgets, kind="upper"
    )
    return [lower, upper]


# ---------------------------------------------------------------------------
# Dembo-Zeitouni style gaps


def dzuldp_gaps(
    model: ProcessModel,
    grid: TimeGrid,
    index_set: IndexSetSample,
    open_event: EventSpec | None,
    closed_event: EventSpec | None,
    schedule: EpsilonSchedule,
    budgets: CheckBudgets,
    s_max: float = 2.0,
) -> list[CheckReport]:
    """Gap reports for the open lower bound and the closed upper bound.

    Lower gap cells combine a(eps) log P(X in G) with sup over x of the
    estimated I_x(G); per-eps aggregates take the inf over x, matching
    liminf inf_x a log P >= -sup_x I_x(G).  Upper gap cells combine
    a(eps) log P(X in F) with inf over x of I_x(F), matching
    limsup sup_x a log P <= -inf_x I_x(F).
    """
    model_spec = _model_dict(model)
    aset = _index_dict(index_set)
    params = {
        "eps": list(schedule.eps),
        "s_max": s_max,
        "budgets": _budget_dict(budgets),
    }
    reports: list[CheckReport] = []
    rate_seed = subseed(budgets.seed, "dz", "rate")

    if open_event is not None:
        rates = {
            pt: event_rate_bound(
                model, grid, np.array(pt), open_event, s_max, budgets.level_count, rate_seed,
                budgets.constant_pool,
            )[0]
            for pt in index_set.points
        }
        sup_rate = max(rates.values())
        cells = []
        for ei, eps in enumerate(schedule.eps):
            for pt in index_set.points:
                est = _estimate_probability(
                    model, grid, pt, eps, open_event, budgets,
                    subseed(budgets.seed, "dz", "lower", ei), schedule.speed,
                )
                cells.append(
                    CheckCell(
                        eps=eps,
                        x=pt,
                        extra={},
                        gap=gap_sum(est.log_value, sup_rate),
                        inputs={
                            "rate": rates[pt],
                            "sup_rate": sup_rate,
                            **_estimate_csv_inputs(est),
                        },
                    )
                )
        reports.append(
            _assemble("dzuldp-lower", model_spec, aset, params, cells, schedule, budgets, kind="lower")
        )

    if closed_event is not None:
        rates = {
            pt: event_rate_bound(
                model, grid, np.array(pt), closed_event, s_max, budgets.level_count, rate_seed,
                budgets.constant_pool, closed=True,
            )[0]
            for pt in index_set.points
        }
        inf_rate = min(rates.values())
        cells = []
        for ei, eps in enumerate(schedule.eps):
            for pt in index_set.points:
                est = _estimate_probability(
                    model, grid, pt, eps, closed_event, budgets,
                    subseed(budgets.seed, "dz", "upper", ei), schedule.speed,
                )
                gap = est.log_value + inf_rate if math.isfinite(est.log_value) else (
                    math.inf if math.isinf(inf_rate) and inf_rate > 0 else -math.inf
                )
                cells.append(
                    CheckCell(
                        eps=eps,
                        x=pt,
                        extra={},
                        gap=gap,
                        inputs={
                            "rate": rates[pt],
                            "inf_rate": inf_rate,
                            **_estimate_csv_inputs(est),
                        },
                    )
                )
        reports.append(
            _assemble("dzuldp-upper", model_spec, aset, params, cells, schedule, budgets, kind="upper")
        )
    return reports


# ---------------------------------------------------------------------------
# Laplace principles


def ulp_gap(
    model: ProcessModel,
    grid: TimeGrid,
    index_set: IndexSetSample,
    h: TestFunction,
    schedule: EpsilonSchedule,
    budgets: CheckBudgets,
    s_max: float | None = None,
) -> CheckReport:
    """Signed Laplace gaps laplace + inf(h + I) per (eps, x).

    The uniform Laplace principle predicts the absolute value shrinks;
    cells keep the sign so counterexamples (gap bounded away below 0)
    stay visible.  ``s_max`` defaults to twice the bound of h.
    """
    bound = float(h.bound())
    s_hi = 2.0 * bound if s_max is None else s_max
    model_spec = _model_dict(model)
    aset = _index_dict(index_set)
    params = {"eps": list(schedule.eps), "s_max": s_hi, "budgets": _budget_dict(budgets)}
    cells = []
    for ei, eps in enumerate(schedule.eps):
        for pt in index_set.points:
            lap = laplace_functional(
                model, grid, pt, eps, h, budgets.mc_samples,
                subseed(budgets.seed, "ulp", "laplace", ei), schedule.speed,
            )
            inf_val, _ = inf_h_plus_I(
                model, grid, pt, h, s_hi, budgets.level_count,
                subseed(budgets.seed, "ulp", "inf"), budgets.constant_pool,
            )
            cells.append(
                CheckCell(
                    eps=eps,
                    x=pt,
                    extra={},
                    gap=lap + inf_val,
                    inputs={"laplace": lap, "inf_h_plus_I": inf_val, "n": budgets.mc_samples},
                )
            )
    return _assemble("ulp", model_spec, aset, params, cells, schedule, budgets, kind="laplace")


def eulp_gap(
    model: ProcessModel,
    grid: TimeGrid,
    index_set: IndexSetSample,
    family: EquicontinuousFamily,
    schedule: EpsilonSchedule,
    budgets: CheckBudgets,
    s_max: float | None = None,
) -> CheckReport:
    """Laplace gaps uniform over an equibounded equicontinuous family."""
    s_hi = 2.0 * family.bound if s_max is None else s_max
    model_spec = _model_dict(model)
    aset = _index_dict(index_set)
    params = {
        "eps": list(schedule.eps),
        "s_max": s_hi,
        "family": {"size": len(family.members), "bound": family.bound, "lipschitz": family.lipschitz},
        "budgets": _budget_dict(budgets),
    }
    cells = []
    for ei, eps in enumerate(schedule.eps):
        for pt in index_set.points:
            for hi_idx, h in enumerate(family.members):
                lap = laplace_functional(
                    model, grid, pt, eps, h, budgets.mc_samples,
                    subseed(budgets.seed, "eulp", "laplace", ei, hi_idx), schedule.speed,
                )
                inf_val, _ = inf_h_plus_I(
                    model, grid, pt, h, s_hi, budgets.level_count,
                    subseed(budgets.seed, "eulp", "inf", hi_idx), budgets.constant_pool,
                )
                cells.append(
                    CheckCell(
                        eps=eps,
                        x=pt,
                        extra={"h": hi_idx},
                        gap=lap + inf_val,
                        inputs={"laplace": lap, "inf_h_plus_I": inf_val},
                    )
                )
    return _assemble("eulp", model_spec, aset, params, cells, schedule, budgets, kind="laplace")


# ---------------------------------------------------------------------------
# locally uniform (shrunk/fattened) gaps


def luldp_gaps(
    model: ProcessModel,
    grid: TimeGrid,
    index_set: IndexSetSample,
    open_event: EventSpec | None,
    closed_event: EventSpec | None,
    etas: tuple[float, ...],
    schedule: EpsilonSchedule,
    budgets: CheckBudgets,
    s_max: float = 2.0,
) -> list[CheckReport]:
    """Gap reports with eta-shrunk (lower) and eta-fattened (upper) rate sides.

    Probabilities are estimated on the plain sets; only the rate-side
    membership filter moves by eta.  Cells carry their eta in ``extra``.
    """
    if any(e <= 0 for e in etas):
        raise ValueError("etas must be positive")
    model_spec = _model_dict(model)
    aset = _index_dict(index_set)
    params = {
        "eps": list(schedule.eps),
        "eta": list(etas),
        "s_max": s_max,
        "budgets": _budget_dict(budgets),
    }
    reports = []
    rate_seed = subseed(budgets.seed, "lu", "rate")

    if open_event is not None:
        cells = []
        for eta in etas:
            rates = {
                pt: event_rate_bound(
                    model, grid, np.array(pt), open_event, s_max, budgets.level_count, rate_seed,
                    budgets.constant_pool, eta=eta,
                )[0]
                for pt in index_set.points
            }
            sup_rate = max(rates.values())
            for ei, eps in enumerate(schedule.eps):
                for pt in index_set.points:
                    est = _estimate_probability(
                        model, grid, pt, eps, open_event, budgets,
                        subseed(budgets.seed, "lu", "lower", ei), schedule.speed,
                    )
                    cells.append(
                        CheckCell(
                            eps=eps,
                            x=pt,
                            extra={"eta": eta},
                            gap=gap_sum(est.log_value, sup_rate),
                            inputs={
                                "rate": rates[pt],
                                "sup_rate": sup_rate,
                                **_estimate_csv_inputs(est),
                            },
                        )
                    )
        reports.append(
            _assemble("luldp-lower", model_spec, aset, params, cells, schedule, budgets, kind="lower")
        )

    if closed_event is not None:
        cells = []
        for eta in etas:
            rates = {
                pt: event_rate_bound(
                    model, grid, np.array(pt), closed_event, s_max, budgets.level_count, rate_seed,
                    budgets.constant_pool, eta=eta, closed=True,
                )[0]
                for pt in index_set.points
            }
            inf_rate = min(rates.values())
            for ei, eps in enumerate(schedule.eps):
                for pt in index_set.points:
                    est = _estimate_probability(
                        model, grid, pt, eps, closed_event, budgets,
                        subseed(budgets.seed, "lu", "upper", ei), schedule.speed,
                    )
                    gap = est.log_value + inf_rate if math.isfinite(est.log_value) else (
                        math.inf if math.isinf(inf_rate) and inf_rate > 0 else -math.inf
                    )
                    cells.append(
                        CheckCell(
                            eps=eps,
                            x=pt,
                            extra={"eta": eta},
                            gap=gap,
                            inputs={
                                "rate": rates[pt],
                                "inf_rate": inf_rate,
                                **_estimate_csv_inputs(est),
                            },
                        )
                    )
        reports.append(
            _assemble("luldp-upper", model_spec, aset, params, cells, schedule, budgets, kind="upper")
        )
    return reports


# ---------------------------------------------------------------------------
# test-function families


def make_families(
    kind: str,
    j: float,
    delta: float,
    anchors,
) -> EquicontinuousFamily:
    """Equicontinuous family of capped-distance test functions.

    ``kind = "lower"``: one member per anchor path,
    psi -> j min(rho(psi, anchor)/delta, 1), declared modulus j/delta.
    ``kind = "upper"``: one member per anchor path set,
    psi -> j - j min(2 dist(psi, anchors)/delta, 1), declared modulus
    2 j/delta.
    """
    if j < 0 or delta <= 0:
        raise ValueError("need j >= 0 and delta > 0")
    if kind == "lower":
        members = tuple(CappedDistance(a, j, 2.0 * delta) for a in anchors)
        return EquicontinuousFamily(members, bound=j, lipschitz=j / delta)
    if kind == "upper":
        members = tuple(CappedSetDistance(a, j, delta, inverted=True) for a in anchors)
        return EquicontinuousFamily(members, bound=j, lipschitz=2.0 * j / delta)
    raise ValueError(f"unknown family kind {kind!r}")


# ---------------------------------------------------------------------------
# assembly


def _model_dict(model: ProcessModel) -> dict:
    from .models import model_to_spec

    return model_to_spec(model)


def _index_dict(index_set: IndexSetSample) -> dict:
    return {
        "label": index_set.label,
        "points": [list(p) for p in index_set.points],
        "tag": index_set.tag,
        "radius": index_set.radius,
    }


def _budget_dict(b: CheckBudgets) -> dict:
    return {
        "mc_samples": b.mc_samples,
        "level_count": b.level_count,
        "constant_pool": b.constant_pool,
        "s_levels": b.s_levels,
        "seed": b.seed,
        "tilt": b.tilt,
        "hold_threshold": b.hold_threshold,
    }


def _assemble(
    definition: str,
    model_spec: dict,
    aset: dict,
    params: dict,
    cells: list[CheckCell],
    schedule: EpsilonSchedule,
    budgets: CheckBudgets,
    kind: str,
) -> CheckReport:
    aggregates = []
    pairs = []
    for eps in schedule.eps:
        rows = [c for c in cells if c.eps == eps]
        if not rows:
            continue
        gaps = [c.gap for c in rows]
        if kind == "lower":
            agg = min(gaps)
        elif kind == "upper":
            agg = max(gaps)
        else:  # laplace defect
            agg = max(abs(g) if math.isfinite(g) else math.inf for g in gaps)
        aggregates.append(
            {
                "eps": eps,
                "gap": agg,
                "min_gap": min(gaps),
                "max_gap": max(gaps),
                "sentinel_cells": sum(1 for g in gaps if math.isinf(g) and g < 0),
                "vacuous_cells": sum(1 for g in gaps if math.isinf(g) and g > 0),
            }
        )
        pairs.append((eps, agg))
    slope = _fit_slope(pairs)
    verdict = _verdict(kind, pairs, budgets.hold_threshold)
    return CheckReport(
        definition=definition,
        model=model_spec,
        index_set=aset,
        params=params,
        cells=cells,
        aggregates=aggregates,
        trend=TrendInfo(slope=slope, verdict=verdict),
    )


def _verdict(kind: str, pairs: list[tuple[float, float]], threshold: float) -> str:
    if not pairs:
        return "inconclusive"
    gaps = [g for _, g in pairs]
    if kind == "lower":
        if any(math.isinf(g) and g < 0 for g in gaps):
            return "fails-sentinel"
        if all(math.isinf(g) and g > 0 for g in gaps):
            return "vacuous"
        return "holds-trend" if min(g for g in gaps if math.isfinite(g)) >= -threshold else "fails"
    if kind == "upper":
        if any(math.isinf(g) and g > 0 for g in gaps):
            return "vacuous"
        # a -inf cell (event below Monte Carlo resolution) satisfies the bound
        return "holds-trend" if max(gaps) <= threshold else "fails"
    # laplace: defect of the final (smallest) eps decides
    last = pairs[-1][1]
    if not math.isfinite(last):
        return "fails-sentinel"
    return "holds-trend" if last <= threshold else "fails"


def scenario(name: str, seed: int | None = None, out: str | None = None):
    """Run a pre-registered scenario by name; see ``uldplab.scenarios``."""
    from . import scenarios

    return scenarios.run(name, seed=seed, out=out)
