"""Process models driven by Gaussian increments plus deterministic controls.

All models share the driving structure: K independent Brownian channels
sampled as increments on the grid, an optional control u (a step
function with one value per increment), and a noise intensity eps.  The
controlled state at eps = 0 is the skeleton; its energy (half the
squared L2 norm of u) is what the rate functions measure.

Families
--------
* ``TranslatedBM``: x + sqrt(eps) W(t) + int_0^t u.
* ``PerturbedBM``: (1 + eps) x + sqrt(eps) W(t) + int_0^t u.  Same rate
  function as ``TranslatedBM``; the starting point moves with eps.
* ``SwappedBM``: equal to ``TranslatedBM`` at every x except x = 0,
  where the process (and its rate function) is the one started at 1/2.
* ``FiniteSDE``: Euler-Maruyama for dX = b(X) dt + sigma(X)(sqrt(eps) dW + u dt).
* ``GalerkinSPDE``: spectral truncation of a stochastic reaction-
  diffusion equation with diagonal linear part.  Stepping uses the
  exponential (integrating-factor) Euler scheme
      X_{i+1} = e^{-a dt} X_i + phi1(-a dt) (B(X_i) dt + G(X_i)(sqrt(eps) dW_i + u_i dt)),
  phi1(z) = (e^z - 1)/z, which reproduces the continuous Duhamel
  convolution exactly for constant forcing and is unconditionally
  stable for stiff eigenvalues.

Noise provenance is counter-based: the draw for (master_seed, sample_index)
never depends on how many other samples were drawn, so estimators are
reproducible under any execution schedule.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .pathspace import DiscretePath, ShapeMismatchError, TimeGrid

__all__ = [
    "NumericalBlowupError",
    "NoiseDraw",
    "Control",
    "zero_control",
    "constant_control",
    "sine_control",
    "sample_noise",
    "ProcessModel",
    "TranslatedBM",
    "PerturbedBM",
    "SwappedBM",
    "FiniteSDE",
    "GalerkinSPDE",
    "DriftSpec",
    "NoiseSpec",
    "Regularity",
    "solve_controlled",
    "skeleton",
    "convolutions",
    "model_from_spec",
    "model_to_spec",
    "load_model",
    "BUILTIN_MODELS",
]

_MASK64 = (1 << 64) - 1


class NumericalBlowupError(RuntimeError):
    """Non-finite state encountered while stepping a model."""

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} at step {step}")
        self.step = step


def _rng(seed: int, *spawn: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed & _MASK64, spawn_key=tuple(k & _MASK64 for k in spawn))
    return np.random.Generator(np.random.Philox(seed=ss))


@dataclass(frozen=True)
class NoiseDraw:
    """Brownian increments, shape (steps, channels), variance dt each."""

    grid: TimeGrid
    increments: np.ndarray
    master_seed: int | None = None
    sample_index: int | None = None

    def __post_init__(self) -> None:
        inc = np.asarray(self.increments, dtype=float)
        if inc.ndim == 1:
            inc = inc[:, None]
        if inc.ndim != 2 or inc.shape[0] != self.grid.steps:
            raise ShapeMismatchError(
                f"increments shape {inc.shape} does not fit grid with {self.grid.steps} steps"
            )
        if not np.all(np.isfinite(inc)):
            raise ValueError("noise increments must be finite")
        object.__setattr__(self, "increments", inc)

    @property
    def channels(self) -> int:
        return self.increments.shape[1]


def sample_noise(grid: TimeGrid, channels: int, master_seed: int, sample_index: int) -> NoiseDraw:
    """Draw the increments for one sample of one substream.

    The substream is keyed by (master_seed, sample_index); draws commute
    with each other, so parallel workers can fill samples in any order.
    """
    gen = _rng(master_seed, sample_index)
    inc = gen.standard_normal((grid.steps, channels)) * math.sqrt(grid.dt)
    return NoiseDraw(grid, inc, master_seed, sample_index)


def _noise_block(grid: TimeGrid, channels: int, master_seed: int, block: int, size: int) -> np.ndarray:
    """Increments for a whole block of samples, shape (size, steps, channels)."""
    gen = _rng(master_seed, block)
    return gen.standard_normal((size, grid.steps, channels)) * math.sqrt(grid.dt)


@dataclass(frozen=True)
class Control:
    """Deterministic step control, one value per increment, shape (steps, channels)."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != self.grid.steps:
            raise ShapeMismatchError(
                f"control shape {v.shape} does not fit grid with {self.grid.steps} steps"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("control values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def channels(self) -> int:
        return self.values.shape[1]

    @property
    def squared_l2(self) -> float:
        """int_0^T |u|^2 dt for the step function."""
        return float(np.sum(self.values * self.values) * self.grid.dt)

    @property
    def energy(self) -> float:
        """Half the squared L2 norm; the rate of the skeleton it generates."""
        return 0.5 * self.squared_l2

    def in_ball(self, bound: float) -> bool:
        """Whether the control lies in the L2 ball of squared radius `bound`."""
        return self.squared_l2 <= bound


def zero_control(grid: TimeGrid, channels: int = 1) -> Control:
    return Control(grid, np.zeros((grid.steps, channels)))


def constant_control(grid: TimeGrid, value, channels: int = 1) -> Control:
    v = np.asarray(value, dtype=float).reshape(-1)
    if v.size == 1 and channels > 1:
        vals = np.zeros((grid.steps, channels))
        vals[:, 0] = v[0]
    else:
        vals = np.tile(v, (grid.steps, 1))
    return Control(grid, vals)


def sine_control(grid: TimeGrid, n: int, channels: int = 1) -> Control:
    """Cell averages of sin(n pi t / T) on channel 0.

    Averaging (the L2 projection onto step functions) makes the running
    integral of the control exact at the grid points, so skeleton errors
    reflect the model and not the quadrature of the sine.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if 4 * n > grid.steps:
        raise ValueError(f"need grid.steps >= 4n, got steps={grid.steps}, n={n}")
    T = grid.horizon
    t = grid.times
    w = n * math.pi / T
    # (1/dt) int_{t_i}^{t_{i+1}} sin(w s) ds
    avg = (np.cos(w * t[:-1]) - np.cos(w * t[1:])) / (w * grid.dt)
    vals = np.zeros((grid.steps, channels))
    vals[:, 0] = avg
    return Control(grid, vals)


# ---------------------------------------------------------------------------
# drift / noise catalogs for the state-dependent models


@dataclass(frozen=True)
class DriftSpec:
    """Named drift map; see ``_drift_apply`` for the catalog."""

    name: str = "zero"
    kappa: float = 1.0
    matrix: tuple | None = None
    offset: tuple | None = None

    def lipschitz(self, dim: int) -> float:
        if self.name == "zero":
            return 0.0
        if self.name == "scaled-sine":
            return abs(self.kappa)
        if self.name == "linear":
            a = np.asarray(self.matrix, dtype=float) if self.matrix is not None else np.eye(dim)
            return float(np.linalg.norm(a, 2))
        raise ValueError(f"unknown drift {self.name!r}")


def _drift_apply(spec: DriftSpec, x: np.ndarray) -> np.ndarray:
    # x: (B, d) -> (B, d)
    if spec.name == "zero":
        return np.zeros_like(x)
    if spec.name == "scaled-sine":
        return spec.kappa * np.sin(x)
    if spec.name == "linear":
        d = x.shape[1]
        a = np.asarray(spec.matrix, dtype=float) if spec.matrix is not None else np.eye(d)
        out = x @ a.T
        if spec.offset is not None:
            out = out + np.asarray(spec.offset, dtype=float)
        return out
    raise ValueError(f"unknown drift {spec.name!r}")


@dataclass(frozen=True)
class NoiseSpec:
    """Named diffusion map.

    ``growth`` records whether the Hilbert-Schmidt bound on S(t)G(x) is
    uniform over all of the state space ("bounded") or only over bounded
    subsets ("linear").  The convergence experiments consult this tag to
    decide which index-set classes are admissible.
    """

    name: str = "identity"
    gain: float = 1.0
    decay: float = 0.0

    @property
    def growth(self) -> str:
        if self.name in ("identity", "diagonal-constant", "diagonal-bounded", "zero"):
            return "bounded"
        if self.name == "diagonal-linear-growth":
            return "linear"
        raise ValueError(f"unknown noise {self.name!r}")

    def gains(self, dim: int) -> np.ndarray:
        k = np.arange(1, dim + 1, dtype=float)
        return self.gain * k ** (-self.decay)


def _noise_apply(spec: NoiseSpec, x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """G(x) w for batches; x: (B, d), w: (B, K) -> (B, d)."""
    d = x.shape[1]
    k = w.shape[1]
    if spec.name == "zero":
        return np.zeros_like(x)
    if spec.name == "identity":
        # embedding R^K -> R^d, pad or truncate
        if k == d:
            return w.copy()
        if k < d:
            out = np.zeros_like(x)
            out[:, :k] = w
            return out
        return w[:, :d].copy()
    if k != d:
        raise ShapeMismatchError(f"diagonal noise needs channels == dim, got {k} != {d}")
    g = spec.gains(d)
    if spec.name == "diagonal-constant":
        return g * w
    if spec.name == "diagonal-bounded":
        return g * (1.0 + 0.5 * np.sin(x)) * w
    if spec.name == "diagonal-linear-growth":
        return g * (1.0 + np.abs(x)) * w
    raise ValueError(f"unknown noise {spec.name!r}")


def _noise_matrix(spec: NoiseSpec, x: np.ndarray, dim: int, channels: int) -> np.ndarray:
    """Dense d x K matrix G(x) at a single state, for least-squares recovery."""
    if spec.name == "zero":
        return np.zeros((dim, channels))
    if spec.name == "identity":
        m = np.zeros((dim, channels))
        for j in range(min(dim, channels)):
            m[j, j] = 1.0
        return m
    if channels != dim:
        raise ShapeMismatchError("diagonal noise needs channels == dim")
    g = spec.gains(dim)
    if spec.name == "diagonal-constant":
        diag = g
    elif spec.name == "diagonal-bounded":
        diag = g * (1.0 + 0.5 * np.sin(x))
    elif spec.name == "diagonal-linear-growth":
        diag = g * (1.0 + np.abs(x))
    else:
        raise ValueError(f"unknown noise {spec.name!r}")
    return np.diag(diag)


@dataclass(frozen=True)
class Regularity:
    """Documentation of the analytic hypotheses of the SPDE family.

    ``k_scale`` and ``k_power`` describe the integrable singularity
    K(t) = k_scale * t**(-k_power) dominating |S(t) G(x)|_HS near t = 0;
    ``alpha`` is the time-Hoelder exponent the a-priori bounds use.
    """

    alpha: float = 0.2
    k_scale: float = 1.0
    k_power: float = 0.25


# ---------------------------------------------------------------------------
# model variants


class ProcessModel:
    """Base class; the module-level ``simulate_batch`` dispatches on the subclass."""

    dim: int
    channels: int
    name: str

    def effective_start(self, x: np.ndarray, eps: float) -> np.ndarray:
        """Starting point actually used at noise level eps."""
        return x

    def _as_state(self, x) -> np.ndarray:
        v = np.asarray(x, dtype=float).reshape(-1)
        if v.size == 1 and self.dim > 1:
            v = np.full(self.dim, v[0])
        if v.size != self.dim:
            raise ShapeMismatchError(f"start has size {v.size}, model dim is {self.dim}")
        return v


def _integral_of_control(control_values: np.ndarray | None, steps: int, channels: int, dt: float) -> np.ndarray:
    """Running integral of the step control at grid points, shape (steps+1, channels)."""
    out = np.zeros((steps + 1, channels))
    if control_values is not None:
        np.cumsum(control_values * dt, axis=0, out=out[1:])
    return out


@dataclass(frozen=True)
class TranslatedBM(ProcessModel):
    """x + sqrt(eps) W + int u on one channel."""

    name: str = field(default="translated-bm", init=False)
    dim: int = field(default=1, init=False)
    channels: int = field(default=1, init=False)


@dataclass(frozen=True)
class PerturbedBM(ProcessModel):
    """(1 + eps) x + sqrt(eps) W + int u; starting point leaks with eps."""

    name: str = field(default="perturbed-bm", init=False)
    dim: int = field(default=1, init=False)
    channels: int = field(default=1, init=False)

    def effective_start(self, x, eps):
        return (1.0 + eps) * np.asarray(x, dtype=float)


@dataclass(frozen=True)
class SwappedBM(ProcessModel):
    """Translated BM whose x = 0 copy is replaced by the x = 1/2 copy."""

    name: str = field(default="swapped-bm", init=False)
    dim: int = field(default=1, init=False)
    channels: int = field(default=1, init=False)
    swap_at: float = 0.0
    swap_to: float = 0.5

    def effective_start(self, x, eps):
        v = np.asarray(x, dtype=float).reshape(-1)
        if v.size == 1 and float(v[0]) == self.swap_at:
            return np.array([self.swap_to])
        return v


@dataclass(frozen=True)
class FiniteSDE(ProcessModel):
    """Euler-Maruyama for a Lipschitz SDE in R^d with K = d channels."""

    dim: int = 1
    drift: DriftSpec = field(default_factory=DriftSpec)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    name: str = field(default="finite-sde", init=False)

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        object.__setattr__(self, "channels", self.dim)


@dataclass(frozen=True)
class GalerkinSPDE(ProcessModel):
    """Spectral truncation with diagonal semigroup e^{-a_k t}.

    ``eigenvalues`` is either the rule name ("quadratic" for a_k = scale*k^2,
    "linear" for scale*k) or an explicit list; modes is the truncation level.
    """

    modes: int = 32
    channels: int = 32
    eigen_rule: str = "quadratic"
    eigen_scale: float = 1.0
    eigen_values: tuple | None = None
    drift: DriftSpec = field(default_factory=lambda: DriftSpec(name="scaled-sine"))
    noise: NoiseSpec = field(default_factory=lambda: NoiseSpec(name="diagonal-bounded"))
    regularity: Regularity = field(default_factory=Regularity)
    name: str = field(default="galerkin-spde", init=False)

    def __post_init__(self) -> None:
        if self.modes < 1:
            raise ValueError("modes must be >= 1")
        object.__setattr__(self, "dim", self.modes)
        if self.eigen_values is not None:
            ev = tuple(float(a) for a in self.eigen_values)
            if len(ev) != self.modes:
                raise ShapeMismatchError("eigenvalue list length != modes")
            object.__setattr__(self, "eigen_values", ev)

    def eigenvalues(self) -> np.ndarray:
        if self.eigen_values is not None:
            return np.asarray(self.eigen_values, dtype=float)
        k = np.arange(1, self.modes + 1, dtype=float)
        if self.eigen_rule == "quadratic":
            return self.eigen_scale * k * k
        if self.eigen_rule == "linear":
            return self.eigen_scale * k
        raise ValueError(f"unknown eigenvalue rule {self.eigen_rule!r}")

    def hs_bound(self, t: float) -> float:
        """Frobenius bound |S(t) G(x)|_HS for the bounded catalogs."""
        a = self.eigenvalues()
        g = 1.5 * self.noise.gains(self.modes)
        return float(np.sqrt(np.sum(np.exp(-2.0 * a * t) * g * g)))


BUILTIN_MODELS = {
    "translated-bm": TranslatedBM,
    "perturbed-bm": PerturbedBM,
    "swapped-bm": SwappedBM,
    "finite-sde": FiniteSDE,
    "galerkin-spde": GalerkinSPDE,
}


# ---------------------------------------------------------------------------
# simulation


def _phi1(z: np.ndarray) -> np.ndarray:
    """(e^z - 1)/z with the removable singularity filled in."""
    out = np.ones_like(z)
    nz = np.abs(z) > 1e-12
    out[nz] = np.expm1(z[nz]) / z[nz]
    return out


def _simulate_translated_family(
    model: ProcessModel, x, eps: float, control_values, increments: np.ndarray, dt: float
) -> np.ndarray:
    start = model.effective_start(model._as_state(x), eps)
    b, steps, _ = increments.shape
    core = np.zeros((b, steps + 1, 1))
    np.cumsum(increments, axis=1, out=core[:, 1:, :])
    core *= math.sqrt(eps)
    if control_values is not None:
        core += _integral_of_control(control_values, steps, 1, dt)[None, :, :]
    # adding the scalar start last keeps the x = 0 core identical across x,
    # which is what the translation-identity checks rely on
    return core + start[0]


def _simulate_finite_sde(
    model: FiniteSDE, x, eps: float, control_values, increments: np.ndarray, dt: float
) -> np.ndarray:
    start = model._as_state(x)
    b, steps, k = increments.shape
    if k != model.channels:
        raise ShapeMismatchError(f"noise has {k} channels, model wants {model.channels}")
    seps = math.sqrt(eps)
    out = np.empty((b, steps + 1, model.dim))
    state = np.tile(start, (b, 1))
    out[:, 0, :] = state
    for i in range(steps):
        w = seps * increments[:, i, :]
        if control_values is not None:
            w = w + control_values[i] * dt
        state = state + _drift_apply(model.drift, state) * dt + _noise_apply(model.noise, state, w)
        if not np.all(np.isfinite(state)):
            raise NumericalBlowupError("finite SDE state became non-finite", i + 1)
        out[:, i + 1, :] = state
    return out


def _simulate_galerkin(
    model: GalerkinSPDE, x, eps: float, control_values, increments: np.ndarray, dt: float
) -> np.ndarray:
    start = model._as_state(x)
    b, steps, k = increments.shape
    if k != model.channels:
        raise ShapeMismatchError(f"noise has {k} channels, model wants {model.channels}")
    a = model.eigenvalues()
    decay = np.exp(-a * dt)
    factor = _phi1(-a * dt)
    seps = math.sqrt(eps)
    out = np.empty((b, steps + 1, model.dim))
    state = np.tile(start, (b, 1))
    out[:, 0, :] = state
    for i in range(steps):
        w = seps * increments[:, i, :]
        if control_values is not None:
            w = w + control_values[i] * dt
        forcing = _drift_apply(model.drift, state) * dt + _noise_apply(model.noise, state, w)
        state = decay * state + factor * forcing
        if not np.all(np.isfinite(state)):
            raise NumericalBlowupError("spectral SPDE state became non-finite", i + 1)
        out[:, i + 1, :] = state
    return out


def simulate_batch(
    model: ProcessModel,
    grid: TimeGrid,
    x,
    eps: float,
    control: Control | None,
    increments: np.ndarray,
) -> np.ndarray:
    """Batched controlled paths; increments has shape (B, steps, channels)."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    cv = None
    if control is not None:
        if control.grid != grid:
            raise ShapeMismatchError("control grid differs from simulation grid")
        if control.channels != model.channels:
            raise ShapeMismatchError(
                f"control has {control.channels} channels, model wants {model.channels}"
            )
        cv = control.values
    if increments.shape[1] != grid.steps:
        raise ShapeMismatchError("increment count differs from grid steps")
    dt = grid.dt
    if isinstance(model, (TranslatedBM, PerturbedBM, SwappedBM)):
        return _simulate_translated_family(model, x, eps, cv, increments, dt)
    if isinstance(model, FiniteSDE):
        return _simulate_finite_sde(model, x, eps, cv, increments, dt)
    if isinstance(model, GalerkinSPDE):
        return _simulate_galerkin(model, x, eps, cv, increments, dt)
    raise TypeError(f"unknown model type {type(model).__name__}")


def solve_controlled(
    model: ProcessModel,
    grid: TimeGrid,
    x,
    eps: float,
    control: Control | None = None,
    noise: NoiseDraw | None = None,
) -> DiscretePath:
    """One controlled path.  With eps = 0 the noise may be omitted."""
    if noise is None:
        if eps != 0.0:
            raise ValueError("noise draw required when eps > 0")
        increments = np.zeros((1, grid.steps, model.channels))
    else:
        if noise.grid != grid:
            raise ShapeMismatchError("noise grid differs from simulation grid")
        if noise.channels != model.channels:
            raise ShapeMismatchError(
                f"noise has {noise.channels} channels, model wants {model.channels}"
            )
        increments = noise.increments[None, :, :]
    values = simulate_batch(model, grid, x, eps, control, increments)[0]
    return DiscretePath(grid, values)


def skeleton(model: ProcessModel, grid: TimeGrid, x, control: Control | None = None) -> DiscretePath:
    """Noise-free controlled path (the eps = 0 flow of the control)."""
    return solve_controlled(model, grid, x, 0.0, control, None)


# ---------------------------------------------------------------------------
# Duhamel convolutions of the spectral model


def convolutions(
    model: GalerkinSPDE,
    grid: TimeGrid,
    path: DiscretePath,
    control: Control | None = None,
    noise: NoiseDraw | None = None,
) -> dict[str, DiscretePath]:
    """Discrete stochastic convolution, control convolution and drift convolution.

    Evaluated along a frozen path phi: at t_j the sums are
      gamma(t_j) = sum_{i<j} e^{-a (t_j - t_{i+1})} G(phi_i) dW_i
      lam(t_j)   = sum_{i<j} e^{-a (t_j - t_{i+1})} G(phi_i) u_i dt
      theta(t_j) = sum_{i<j} e^{-a (t_j - t_{i+1})} B(phi_i) dt
    computed by the stable recursion v_{j+1} = e^{-a dt}(v_j) + e^{0} * term_j,
    i.e. each new term enters with weight one and old terms decay.
    """
    if not isinstance(model, GalerkinSPDE):
        raise TypeError("convolutions are defined for the spectral model")
    if path.grid != grid:
        raise ShapeMismatchError("path grid differs")
    if path.dim != model.dim:
        raise ShapeMismatchError("path dim differs from model dim")
    steps = grid.steps
    dt = grid.dt
    a = model.eigenvalues()
    decay = np.exp(-a * dt)
    gamma = np.zeros((steps + 1, model.dim))
    lam = np.zeros((steps + 1, model.dim))
    theta = np.zeros((steps + 1, model.dim))
    inc = noise.increments if noise is not None else None
    if inc is not None and inc.shape[1] != model.channels:
        raise ShapeMismatchError("noise channels differ from model channels")
    cv = control.values if control is not None else None
    if cv is not None and cv.shape[1] != model.channels:
        raise ShapeMismatchError("control channels differ from model channels")
    for i in range(steps):
        state = path.values[i][None, :]
        bterm = _drift_apply(model.drift, state)[0] * dt
        theta[i + 1] = decay * theta[i] + bterm
        if inc is not None:
            gterm = _noise_apply(model.noise, state, inc[i][None, :])[0]
            gamma[i + 1] = decay * gamma[i] + gterm
        if cv is not None:
            lterm = _noise_apply(model.noise, state, cv[i][None, :])[0] * dt
            lam[i + 1] = decay * lam[i] + lterm
    return {
        "gamma": DiscretePath(grid, gamma),
        "lambda": DiscretePath(grid, lam),
        "theta": DiscretePath(grid, theta),
    }


# ---------------------------------------------------------------------------
# JSON model specs


def model_to_spec(model: ProcessModel) -> dict:
    if isinstance(model, TranslatedBM):
        return {"variant": "translated-bm"}
    if isinstance(model, PerturbedBM):
        return {"variant": "perturbed-bm"}
    if isinstance(model, SwappedBM):
        return {"variant": "swapped-bm", "swap_at": model.swap_at, "swap_to": model.swap_to}
    if isinstance(model, FiniteSDE):
        return {
            "variant": "finite-sde",
            "dim": model.dim,
            "drift": {"name": model.drift.name, "kappa": model.drift.kappa,
                      "matrix": model.drift.matrix, "offset": model.drift.offset},
            "noise": {"name": model.noise.name, "gain": model.noise.gain, "decay": model.noise.decay},
        }
    if isinstance(model, GalerkinSPDE):
        return {
            "variant": "galerkin-spde",
            "modes": model.modes,
            "channels": model.channels,
            "eigenvalues": (
                list(model.eigen_values)
                if model.eigen_values is not None
                else {"rule": model.eigen_rule, "scale": model.eigen_scale}
            ),
            "drift": {"name": model.drift.name, "kappa": model.drift.kappa},
            "noise": {"name": model.noise.name, "gain": model.noise.gain, "decay": model.noise.decay},
            "regularity": {
                "alpha": model.regularity.alpha,
                "k_scale": model.regularity.k_scale,
                "k_power": model.regularity.k_power,
            },
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def _drift_from(obj: dict | None) -> DriftSpec:
    if not obj:
        return DriftSpec()
    return DriftSpec(
        name=obj.get("name", "zero"),
        kappa=float(obj.get("kappa", 1.0)),
        matrix=tuple(map(tuple, obj["matrix"])) if obj.get("matrix") else None,
        offset=tuple(obj["offset"]) if obj.get("offset") else None,
    )


def _noise_from(obj: dict | None) -> NoiseSpec:
    if not obj:
        return NoiseSpec()
    return NoiseSpec(
        name=obj.get("name", "identity"),
        gain=float(obj.get("gain", 1.0)),
        decay=float(obj.get("decay", 0.0)),
    )


def model_from_spec(spec: dict) -> ProcessModel:
    variant = spec.get("variant")
    if variant == "translated-bm":
        return TranslatedBM()
    if variant == "perturbed-bm":
        return PerturbedBM()
    if variant == "swapped-bm":
        return SwappedBM(
            swap_at=float(spec.get("swap_at", 0.0)), swap_to=float(spec.get("swap_to", 0.5))
        )
    if variant == "finite-sde":
        return FiniteSDE(
            dim=int(spec.get("dim", 1)),
            drift=_drift_from(spec.get("drift")),
            noise=_noise_from(spec.get("noise")),
        )
    if variant == "galerkin-spde":
        ev = spec.get("eigenvalues")
        kwargs: dict = {}
        if isinstance(ev, dict):
            kwargs["eigen_rule"] = ev.get("rule", "quadratic")
            kwargs["eigen_scale"] = float(ev.get("scale", 1.0))
        elif isinstance(ev, (list, tuple)):
            kwargs["eigen_values"] = tuple(float(a) for a in ev)
        reg = spec.get("regularity") or {}
        return GalerkinSPDE(
            modes=int(spec.get("modes", 32)),
            channels=int(spec.get("channels", spec.get("modes", 32))),
            drift=_drift_from(spec.get("drift")),
            noise=_noise_from(spec.get("noise")),
            regularity=Regularity(
                alpha=float(reg.get("alpha", 0.2)),
                k_scale=float(reg.get("k_scale", 1.0)),
                k_power=float(reg.get("k_power", 0.25)),
            ),
            **kwargs,
        )
    raise ValueError(f"unknown model variant {variant!r}")


def load_model(name_or_path: str) -> ProcessModel:
    """Builtin model name, or path to a JSON model spec file."""
    if name_or_path in BUILTIN_MODELS:
        return BUILTIN_MODELS[name_or_path]()
    with open(name_or_path) as fh:
        return model_from_spec(json.load(fh))
