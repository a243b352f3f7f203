"""Occupation measures on state x velocity space and their diagnostics.

The step-weighted time average of the Dirac path at (x(n), z(n)) is an
empirical measure; its stationarity residuals against a family of smooth
test functions, its support relative to the Filippov/Krasovskii graphs, and
the noise-martingale partial sums are the quantities the limit theory
constrains.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import EmptyTrace
from .fields import DEFAULT_RADIUS_TOL, filippov_map, hull_distance, krasovskii_map

_MERGE_ATOL = 1e-15
_BOX_PAD = 0.1


# ---------------------------------------------------------------------------
# empirical measures

@dataclass
class EmpiricalMeasure:
    """Weighted atoms on B x D; weights positive and summing to one."""

    xs: np.ndarray  # (m, d)
    zs: np.ndarray  # (m, d)
    weights: np.ndarray  # (m,)
    box_states: np.ndarray  # (2, d) rows lo, hi
    box_velocities: np.ndarray  # (2, d)

    @property
    def n_atoms(self):
        return self.weights.size

    @property
    def dimension(self):
        return self.xs.shape[1]

    def mixture(self, other, lam):
        """Convex combination lam*self + (1-lam)*other."""
        xs = np.vstack([self.xs, other.xs])
        zs = np.vstack([self.zs, other.zs])
        ws = np.concatenate([lam * self.weights, (1.0 - lam) * other.weights])
        lo_s = np.minimum(self.box_states[0], other.box_states[0])
        hi_s = np.maximum(self.box_states[1], other.box_states[1])
        lo_v = np.minimum(self.box_velocities[0], other.box_velocities[0])
        hi_v = np.maximum(self.box_velocities[1], other.box_velocities[1])
        return EmpiricalMeasure(xs, zs, ws, np.array([lo_s, hi_s]), np.array([lo_v, hi_v]))


def _merge_duplicate_atoms(xs, zs, ws):
    joint = np.hstack([xs, zs])
    order = np.lexsort(joint.T[::-1])
    joint, ws = joint[order], ws[order]
    new_group = np.ones(joint.shape[0], dtype=bool)
    if joint.shape[0] > 1:
        same = np.all(np.abs(np.diff(joint, axis=0)) <= _MERGE_ATOL, axis=1)
        new_group[1:] = ~same
    group_ids = np.cumsum(new_group) - 1
    n_groups = group_ids[-1] + 1
    merged_w = np.zeros(n_groups)
    np.add.at(merged_w, group_ids, ws)
    first = np.nonzero(new_group)[0]
    d = xs.shape[1]
    return joint[first, :d], joint[first, d:], merged_w


def _padded_box(rows):
    lo, hi = rows.min(axis=0), rows.max(axis=0)
    pad = _BOX_PAD * (hi - lo)
    return np.array([lo - pad, hi + pad])


def averaged_measure(trace, up_to_n):
    """Exact time average of the occupation path up to index up_to_n:
    atoms (x(k), z(k)) with weights a(k)/t(up_to_n)."""
    if trace.n_steps < 1:
        raise EmptyTrace("trace has no recorded steps")
    if up_to_n < 1 or up_to_n > trace.n_steps:
        raise ValueError(f"up_to_n must be in [1, {trace.n_steps}]")
    t_n = float(trace.times[up_to_n])
    xs = trace.states[:up_to_n]
    zs = trace.drifts[:up_to_n]
    ws = trace.steps[:up_to_n] / t_n
    keep = ws > 0
    xs, zs, ws = _merge_duplicate_atoms(xs[keep], zs[keep], ws[keep])
    return EmpiricalMeasure(
        xs=xs,
        zs=zs,
        weights=ws,
        box_states=_padded_box(xs),
        box_velocities=_padded_box(zs),
    )


# ---------------------------------------------------------------------------
# test functions: gaussian-bump-weighted monomials up to degree 2

class GaussianMonomial:
    """f(x) = prod (x-c)_i^beta_i * exp(-|x-c|^2 / (2 sigma^2))."""

    def __init__(self, beta, sigma, center=None):
        self.beta = tuple(int(b) for b in beta)
        self.sigma = float(sigma)
        d = len(self.beta)
        self.center = np.zeros(d) if center is None else np.asarray(center, dtype=float)

    def _shifted(self, xs):
        return np.atleast_2d(xs) - self.center

    def value(self, x):
        y = np.asarray(x, dtype=float) - self.center
        mono = np.prod(y ** np.array(self.beta))
        return float(mono * np.exp(-(y @ y) / (2.0 * self.sigma**2)))

    def gradient(self, x):
        return self.gradient_batch(np.atleast_2d(x))[0]

    def gradient_batch(self, xs):
        """d/dx_j of the member: (beta_j / y_j - y_j / sigma^2) * f, handled
        without dividing by zero via explicit monomial factors."""
        y = self._shifted(xs)
        beta = np.array(self.beta)
        bump = np.exp(-np.sum(y * y, axis=1) / (2.0 * self.sigma**2))
        mono = np.prod(y ** beta, axis=1)
        grads = np.empty_like(y)
        for j in range(y.shape[1]):
            if beta[j] == 0:
                dmono = 0.0
            else:
                reduced = beta.copy()
                reduced[j] -= 1
                dmono = beta[j] * np.prod(y**reduced, axis=1)
            grads[:, j] = (dmono - mono * y[:, j] / self.sigma**2) * bump
        return grads

    def value_bound(self):
        k = sum(self.beta)
        return _radial_max(k, self.sigma)

    def gradient_bound(self):
        k = sum(self.beta)
        return k * _radial_max(max(k - 1, 0), self.sigma) + _radial_max(k + 1, self.sigma) / self.sigma**2


def _radial_max(k, sigma):
    """max over r >= 0 of r^k exp(-r^2 / (2 sigma^2))."""
    if k == 0:
        return 1.0
    return (sigma * np.sqrt(k)) ** k * np.exp(-k / 2.0)


@dataclass
class TestFunctionFamily:
    members: list

    @classmethod
    def from_box(cls, box_states):
        """Members adapted to a state box: sigma from the box radius,
        bump centered at the box center."""
        box = np.asarray(box_states, dtype=float)
        center = 0.5 * (box[0] + box[1])
        radius = 0.5 * float(np.linalg.norm(box[1] - box[0]))
        sigma = radius if radius > 1e-9 else 1.0
        d = box.shape[1]
        return cls.with_scale(d, sigma, center)

    @classmethod
    def with_scale(cls, dimension, sigma, center=None):
        members = [
            GaussianMonomial(beta, sigma, center)
            for beta in _multi_indices(dimension, max_degree=2)
        ]
        return cls(members)

    def __len__(self):
        return len(self.members)


def _multi_indices(dimension, max_degree):
    out = []
    for total in range(max_degree + 1):
        for combo in itertools.combinations_with_replacement(range(dimension), total):
            beta = [0] * dimension
            for i in combo:
                beta[i] += 1
            out.append(tuple(beta))
    return out


# ---------------------------------------------------------------------------
# diagnostics

def stationarity_residual(measure, family):
    """Per member: sum over atoms of w * <grad f(x), z>; vanishes for
    limiting averaged measures."""
    if measure.n_atoms == 0:
        raise EmptyTrace("measure has no atoms")
    out = np.empty(len(family.members))
    for i, member in enumerate(family.members):
        grads = member.gradient_batch(measure.xs)
        out[i] = float(measure.weights @ np.sum(grads * measure.zs, axis=1))
    return out


@dataclass
class GraphSupport:
    """Weight fractions of atoms lying eps-close to the set-valued graphs."""

    filippov: float
    krasovskii: float


def graph_support_fraction(measure, field, eps, radius_tol=DEFAULT_RADIUS_TOL):
    """Total weight with dist(z, F(x)) <= eps, and the companion Krasovskii
    fraction.  Atoms strictly interior to a region take the vectorized
    singleton path; atoms near a guard surface fall back to full hulls."""
    if eps <= 0:
        raise ValueError("eps must be > 0")
    xs, zs, ws = measure.xs, measure.zs, measure.weights
    fil_ok = np.zeros(measure.n_atoms, dtype=bool)
    kra_ok = np.zeros(measure.n_atoms, dtype=bool)
    if field.guards:
        gv = np.column_stack([g.value_batch(xs) for g in field.guards])
        interior = np.all(np.abs(gv) > radius_tol, axis=1)
    else:
        interior = np.ones(measure.n_atoms, dtype=bool)
    if np.any(interior):
        values = field.evaluate_batch(xs[interior])
        dist = np.linalg.norm(values - zs[interior], axis=1)
        ok = dist <= eps
        fil_ok[interior] = ok
        kra_ok[interior] = ok
    for i in np.nonzero(~interior)[0]:
        fil_ok[i] = hull_distance(filippov_map(field, xs[i], radius_tol), zs[i]) <= eps
        kra_ok[i] = hull_distance(krasovskii_map(field, xs[i], radius_tol), zs[i]) <= eps
    return GraphSupport(
        filippov=float(ws[fil_ok].sum()),
        krasovskii=float(ws[kra_ok].sum()),
    )


@dataclass
class MartingaleDiagnostic:
    """Noise-martingale partial sums per test member and coordinate,
    with the empirical quadratic-variation bound."""

    xi: np.ndarray  # (N+1, members, d)
    quadratic_variation: np.ndarray  # (N+1, members)

    @property
    def n_steps(self):
        return self.xi.shape[0] - 1

    def tail_oscillation(self, n0):
        """max_{n >= n0} |xi(n) - xi(n0)| per (member, coordinate)."""
        tail = self.xi[n0:] - self.xi[n0]
        return np.max(np.abs(tail), axis=0)

    def tail_quadratic_variation(self, n0):
        return self.quadratic_variation[-1] - self.quadratic_variation[n0]


def martingale_diagnostic(trace, family):
    """Partial sums xi(n) = sum_{m<n} a(m) d_j f_i(x(m)) M_j(m+1) and the
    cumulative bound sum a(m)^2 |grad f_i(x(m))|^2 |M(m+1)|^2."""
    n, d = trace.noises.shape
    xs = trace.states[:n]
    xi = np.zeros((n + 1, len(family.members), d))
    qv = np.zeros((n + 1, len(family.members)))
    noise_sq = np.sum(trace.noises**2, axis=1)
    for i, member in enumerate(family.members):
        grads = member.gradient_batch(xs)
        terms = trace.steps[:, None] * grads * trace.noises
        xi[1:, i, :] = np.cumsum(terms, axis=0)
        qv_terms = trace.steps**2 * np.sum(grads**2, axis=1) * noise_sq
        qv[1:, i] = np.cumsum(qv_terms)
    return MartingaleDiagnostic(xi=xi, quadratic_variation=qv)


# ---------------------------------------------------------------------------
# decay study

@dataclass
class DecayTable:
    checkpoints: np.ndarray
    t_values: np.ndarray
    median_residuals: np.ndarray
    envelope: np.ndarray
    per_trace: np.ndarray  # (n_traces, n_checkpoints)

    def to_rows(self):
        rows = []
        for j in range(self.checkpoints.size):
            rows.append(
                {
                    "checkpoint_n": int(self.checkpoints[j]),
                    "t_n": float(self.t_values[j]),
                    "median_max_residual": float(self.median_residuals[j]),
                    "envelope": float(self.envelope[j]),
                }
            )
        return rows


def residual_decay_study(traces, family, checkpoints):
    """Max stationarity residual per checkpoint, median over traces, with
    the fitted C/t envelope anchored at the first checkpoint."""
    checkpoints = np.asarray(checkpoints, dtype=int)
    if np.any(np.diff(checkpoints) <= 0):
        raise ValueError("checkpoints must be increasing")
    per_trace = np.empty((len(traces), checkpoints.size))
    for r, trace in enumerate(traces):
        for j, n in enumerate(checkpoints):
            measure = averaged_measure(trace, int(n))
            per_trace[r, j] = float(np.max(np.abs(stationarity_residual(measure, family))))
    medians = np.median(per_trace, axis=0)
    t_values = np.array([traces[0].times[int(n)] for n in checkpoints])
    c = medians[0] * t_values[0]
    return DecayTable(
        checkpoints=checkpoints,
        t_values=t_values,
        median_residuals=medians,
        envelope=c / t_values,
        per_trace=per_trace,
    )


# ---------------------------------------------------------------------------
# relaxed-control shadow

@dataclass
class VelocitySplit:
    mass_minus: float
    mass_plus: float
    split_fraction: float
    barycenter: np.ndarray


def velocity_mass_split(measure, state_radius, targets=(-1.0, 1.0), target_tol=0.5):
    """Among atoms with |x| <= state_radius: the z-mass near each target
    velocity and the local z-barycenter."""
    sel = np.linalg.norm(measure.xs, axis=1) <= state_radius
    ws = measure.weights[sel]
    zs = measure.zs[sel]
    if ws.sum() <= 0:
        return VelocitySplit(0.0, 0.0, float("nan"), np.full(measure.dimension, np.nan))
    z_norm_signed = zs[:, 0] if measure.dimension == 1 else np.linalg.norm(zs, axis=1)
    mass_minus = float(ws[np.abs(z_norm_signed - targets[0]) <= target_tol].sum())
    mass_plus = float(ws[np.abs(z_norm_signed - targets[1]) <= target_tol].sum())
    total = mass_minus + mass_plus
    split = mass_minus / total if total > 0 else float("nan")
    barycenter = (ws @ zs) / ws.sum()
    return VelocitySplit(mass_minus, mass_plus, split, barycenter)
