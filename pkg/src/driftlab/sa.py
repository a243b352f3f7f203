"""Robbins-Monro iteration with martingale-difference noise.

Runs x(n+1) = x(n) + a(n) (h(x(n)) + M(n+1)) for a piecewise field h,
records the full trace, and exposes the algorithmic timescale
t(n) = sum_{m<n} a(m) together with the linearly interpolated path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DivergedIterate,
    EmptyTrace,
    IndexOutOfRange,
    OutOfDomain,
    WindowExceedsTrace,
)

DEFAULT_BLOWUP_BOUND = 1e6


# ---------------------------------------------------------------------------
# stepsize schedules

@dataclass
class StepsizeSchedule:
    """a(n) = a0 / (n+1)^gamma for the power kind; constant and custom too."""

    kind: str = "power"
    a0: float = 1.0
    gamma: float = 1.0
    sequence: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("power", "constant", "custom"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.kind in ("power", "constant") and self.a0 <= 0:
            raise ValueError("a0 must be > 0")
        if self.kind == "custom":
            if self.sequence is None:
                raise ValueError("custom schedule needs a sequence")
            self.sequence = np.asarray(self.sequence, dtype=float)
            if np.any(self.sequence < 0):
                raise ValueError("custom stepsizes must be >= 0")

    def value(self, n):
        if n < 0:
            raise IndexOutOfRange("stepsize index must be >= 0")
        if self.kind == "power":
            # numpy scalar pow so value(n) == values(N)[n] bit-exactly
            return float(self.a0 / np.float64(n + 1) ** np.float64(self.gamma))
        if self.kind == "constant":
            return self.a0
        if n >= self.sequence.size:
            raise IndexOutOfRange("custom schedule exhausted")
        return float(self.sequence[n])

    def values(self, n_steps):
        if self.kind == "power":
            return self.a0 / (np.arange(1, n_steps + 1, dtype=float)) ** self.gamma
        if self.kind == "constant":
            return np.full(n_steps, self.a0)
        if n_steps > self.sequence.size:
            raise IndexOutOfRange("custom schedule exhausted")
        return self.sequence[:n_steps].copy()

    def to_dict(self):
        d = {"kind": self.kind, "a0": self.a0, "gamma": self.gamma}
        if self.kind == "custom":
            d["sequence"] = self.sequence.tolist()
        return d


def stepsize(schedule, n):
    """a(n) for the given schedule."""
    return schedule.value(n)


@dataclass
class ScheduleDiagnostics:
    partial_sum: float
    partial_square_sum: float
    sum_divergent: bool | None
    square_sum_finite: bool | None
    heuristic: bool
    notes: list

    @property
    def satisfies_conditions(self):
        if self.sum_divergent is None or self.square_sum_finite is None:
            return None
        return self.sum_divergent and self.square_sum_finite

    def to_dict(self):
        return {
            "partial_sum": self.partial_sum,
            "partial_square_sum": self.partial_square_sum,
            "sum_divergent": self.sum_divergent,
            "square_sum_finite": self.square_sum_finite,
            "satisfies_conditions": self.satisfies_conditions,
            "heuristic": self.heuristic,
            "notes": list(self.notes),
        }


def validate_schedule(schedule, horizon):
    """Partial sums up to horizon plus p-series verdicts for the two
    conditions (sum divergent, square sum finite)."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    steps = schedule.values(horizon)
    partial = float(np.sum(steps))
    partial_sq = float(np.sum(steps**2))
    notes = []
    if schedule.kind == "power":
        sum_div = schedule.gamma <= 1.0
        sq_fin = 2.0 * schedule.gamma > 1.0
        if not sum_div:
            notes.append("sum converges: gamma > 1")
        if not sq_fin:
            notes.append("square-sum diverges: gamma <= 1/2")
        return ScheduleDiagnostics(partial, partial_sq, sum_div, sq_fin, False, notes)
    if schedule.kind == "constant":
        notes.append("square-sum diverges: constant stepsize")
        return ScheduleDiagnostics(partial, partial_sq, True, False, False, notes)
    # custom: estimate a power-law tail from the last decade and apply the
    # p-series rule; numeric only, flagged heuristic
    tail = steps[max(1, horizon // 10):]
    idx = np.arange(max(1, horizon // 10), horizon, dtype=float) + 1.0
    positive = tail > 0
    if positive.sum() >= 8:
        slope = np.polyfit(np.log(idx[positive]), np.log(tail[positive]), 1)[0]
        p = -slope
        sum_div = bool(p <= 1.0)
        sq_fin = bool(2.0 * p > 1.0)
        notes.append(f"heuristic tail exponent ~ {p:.3f}")
    else:
        sum_div = sq_fin = None
        notes.append("too few positive tail terms for a heuristic verdict")
    return ScheduleDiagnostics(partial, partial_sq, sum_div, sq_fin, True, notes)


# ---------------------------------------------------------------------------
# noise models

_DENSITY_KINDS = ("gaussian", "uniform_ball")
_ATOMIC_KINDS = ("rademacher", "zero")


@dataclass
class NoiseModel:
    """Martingale-difference noise with conditional second moment
    bounded by scale^2 * d * (1 + |x|^2)."""

    kind: str = "gaussian"
    scale: float = 0.1

    def __post_init__(self):
        if self.kind not in _DENSITY_KINDS + _ATOMIC_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.scale < 0:
            raise ValueError("scale must be >= 0")

    @property
    def density_flag(self):
        """True iff the conditional law is absolutely continuous."""
        return self.kind in _DENSITY_KINDS

    def moment_constant(self, dimension):
        return self.scale**2 * dimension

    def sample_batch(self, n, dimension, rng):
        if self.kind == "zero":
            return np.zeros((n, dimension))
        if self.kind == "gaussian":
            return self.scale * rng.standard_normal((n, dimension))
        if self.kind == "rademacher":
            return self.scale * (2.0 * rng.integers(0, 2, size=(n, dimension)) - 1.0)
        # uniform in the ball of radius scale
        u = rng.standard_normal((n, dimension))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        r = rng.random(n) ** (1.0 / dimension)
        return self.scale * u * r[:, None]

    def to_dict(self):
        return {"kind": self.kind, "scale": self.scale, "density_flag": self.density_flag}


def sample_noise(model, x, rng):
    """One conditional draw at state x (all catalog models are state-independent)."""
    return model.sample_batch(1, np.asarray(x).size, rng)[0]


def make_rng(seed):
    """Counter-based deterministic stream owned by a single run."""
    return np.random.Generator(np.random.Philox(seed))


# ---------------------------------------------------------------------------
# traces

@dataclass
class IterateTrace:
    """Full record of an SA run; satisfies the replay identity
    x(n+1) = x(n) + a(n) (z(n) + M(n+1)) bit-exactly."""

    states: np.ndarray  # (N+1, d)
    drifts: np.ndarray  # (N, d)
    noises: np.ndarray  # (N, d)  noise M(n+1) applied at step n
    steps: np.ndarray  # (N,)
    times: np.ndarray  # (N+1,)
    seed: int
    field_name: str = ""

    @property
    def n_steps(self):
        return self.steps.size

    @property
    def dimension(self):
        return self.states.shape[1]

    def replay_residual(self):
        """Max norm of x(n+1) - x(n) - a(n)(z(n)+M(n+1)); zero for emitted traces."""
        recon = self.states[:-1] + self.steps[:, None] * (self.drifts + self.noises)
        return float(np.max(np.abs(recon - self.states[1:]))) if self.n_steps else 0.0


def run_sa(field, x0, schedule, noise, n_steps, seed, blowup_bound=DEFAULT_BLOWUP_BOUND):
    """Run the iteration for n_steps from x0; deterministic given seed.

    Raises DivergedIterate when an iterate leaves the blow-up ball, which
    signals a violation of the almost-sure boundedness assumption that the
    asymptotic theory conditions on.
    """
    x0 = np.asarray(x0, dtype=float)
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")
    d = field.dimension
    if x0.size != d:
        raise ValueError(f"x0 has size {x0.size}, field dimension is {d}")
    rng = make_rng(seed)
    steps = schedule.values(n_steps)
    noises = noise.sample_batch(n_steps, d, rng)
    states = np.empty((n_steps + 1, d))
    drifts = np.empty((n_steps, d))
    states[0] = x = x0
    evaluate = field.evaluate
    for n in range(n_steps):
        z = evaluate(x)
        drifts[n] = z
        x = x + steps[n] * (z + noises[n])
        states[n + 1] = x
        if float(x @ x) > blowup_bound * blowup_bound:
            raise DivergedIterate(
                f"|x({n + 1})| exceeded the blow-up bound {blowup_bound:g}"
            )
    times = np.concatenate([[0.0], np.cumsum(steps)])
    return IterateTrace(
        states=states,
        drifts=drifts,
        noises=noises,
        steps=steps,
        times=times,
        seed=int(seed),
        field_name=field.name,
    )


def algorithmic_time(trace, n):
    """t(n) = sum_{m<n} a(m)."""
    if n < 0 or n >= trace.times.size:
        raise IndexOutOfRange(f"index {n} outside [0, {trace.times.size - 1}]")
    return float(trace.times[n])


def interpolate(trace, t):
    """The interpolated path: exact at grid times, affine in between."""
    times, states = trace.times, trace.states
    t_arr = np.asarray(t, dtype=float)
    scalar = t_arr.ndim == 0
    t_arr = np.atleast_1d(t_arr)
    if np.any(t_arr < times[0]) or np.any(t_arr > times[-1]):
        raise OutOfDomain(f"t outside [{times[0]:g}, {times[-1]:g}]")
    idx = np.clip(np.searchsorted(times, t_arr, side="right") - 1, 0, times.size - 2)
    span = times[idx + 1] - times[idx]
    safe = np.where(span > 0, span, 1.0)
    w = np.where(span > 0, (t_arr - times[idx]) / safe, 0.0)
    out = states[idx] + w[:, None] * (states[idx + 1] - states[idx])
    return out[0] if scalar else out


_WINDOW_SLACK = 1e-9


def window_index(trace, n, T):
    """Smallest k with t(k) >= t(n) + T (within a roundoff slack)."""
    if T <= 0:
        raise ValueError("T must be > 0")
    if n < 0 or n >= trace.times.size:
        raise IndexOutOfRange(f"index {n} outside [0, {trace.times.size - 1}]")
    target = trace.times[n] + T
    slack = _WINDOW_SLACK * max(1.0, abs(target))
    if target > trace.times[-1] + slack:
        raise WindowExceedsTrace(
            f"t(n)+T = {target:g} exceeds t(N) = {trace.times[-1]:g}"
        )
    k = int(np.searchsorted(trace.times, target - slack, side="left"))
    return min(k, trace.times.size - 1)


def require_nonempty(trace):
    if trace.n_steps < 1:
        raise EmptyTrace("trace has no recorded steps")
