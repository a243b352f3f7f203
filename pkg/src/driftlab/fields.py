"""Piecewise-smooth vector fields and their set-valued regularizations.

A field is described by smooth scalar guards g_k and one smooth piece per
full sign pattern of the guards; values on the guard zero sets (Lebesgue-null)
may be assigned explicitly via ``boundary_values``.  The Filippov map at x is
the convex hull of the pieces of all positive-measure regions adjacent to x
(boundary values excluded); the Krasovskii map adds the boundary values
assigned within the adjacency ball.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import DegenerateGeometry, EmptySet, UnassignedPattern

DEFAULT_RADIUS_TOL = 1e-9

_SIGN_CHARS = {1: "+", -1: "-", 0: "0"}
_PATTERN_ALIASES = {"−": "-", "–": "-"}  # unicode minus/en-dash in configs


def normalize_pattern(pattern):
    """Map unicode minus variants to ASCII so config keys are forgiving."""
    for bad, good in _PATTERN_ALIASES.items():
        pattern = pattern.replace(bad, good)
    return pattern


# ---------------------------------------------------------------------------
# guard catalog

class AffineGuard:
    """g(x) = a . x + b with a nonzero coefficient vector."""

    def __init__(self, a, b=0.0):
        self.a = np.asarray(a, dtype=float)
        self.b = float(b)
        if self.a.ndim != 1 or not np.any(self.a):
            raise ValueError("affine guard needs a nonzero 1-d coefficient vector")

    def value(self, x):
        return float(self.a @ x + self.b)

    def value_batch(self, xs):
        return xs @ self.a + self.b

    def gradient(self, x):
        return self.a

    def to_dict(self):
        return {"type": "affine", "a": self.a.tolist(), "b": self.b}


class CoordinateGuard(AffineGuard):
    """g(x) = x[index]; a named special case of the affine guard."""

    def __init__(self, index, dimension):
        a = np.zeros(dimension)
        a[index] = 1.0
        super().__init__(a, 0.0)
        self.index = int(index)

    def to_dict(self):
        return {"type": "coordinate", "index": self.index, "dimension": self.a.size}


class NormGuard:
    """g(x) = ||x - center|| - radius (Euclidean)."""

    def __init__(self, center, radius):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)

    def value(self, x):
        return float(np.linalg.norm(x - self.center) - self.radius)

    def value_batch(self, xs):
        return np.linalg.norm(xs - self.center, axis=1) - self.radius

    def gradient(self, x):
        diff = x - self.center
        nrm = np.linalg.norm(diff)
        if nrm < 1e-14:
            # non-differentiable at the center; callers special-case this
            return np.zeros_like(diff)
        return diff / nrm

    def to_dict(self):
        return {"type": "norm", "center": self.center.tolist(), "radius": self.radius}


def guard_from_dict(spec, dimension):
    kind = spec.get("type", "affine")
    if kind == "affine":
        return AffineGuard(spec["a"], spec.get("b", 0.0))
    if kind == "coordinate":
        return CoordinateGuard(spec["index"], dimension)
    if kind == "norm":
        return NormGuard(spec["center"], spec["radius"])
    raise ValueError(f"unknown guard type {kind!r}")


# ---------------------------------------------------------------------------
# piece catalog

class ConstantPiece:
    def __init__(self, value):
        self.c = np.asarray(value, dtype=float)

    def value(self, x):
        return self.c

    def value_batch(self, xs):
        return np.broadcast_to(self.c, (xs.shape[0], self.c.size)).copy()

    def lipschitz(self, box=None):
        return 0.0

    def to_dict(self):
        return {"type": "constant", "value": self.c.tolist()}


class AffinePiece:
    """f(x) = A x + b."""

    def __init__(self, A, b=None):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.b = np.zeros(self.A.shape[0]) if b is None else np.asarray(b, dtype=float)

    def value(self, x):
        return self.A @ x + self.b

    def value_batch(self, xs):
        return xs @ self.A.T + self.b

    def lipschitz(self, box=None):
        return float(np.linalg.norm(self.A, 2))

    def to_dict(self):
        return {"type": "affine", "A": self.A.tolist(), "b": self.b.tolist()}


class QuadraticPiece:
    """f_i(x) = x^T Q_i x + A_i . x + b_i, degree <= 2 per component."""

    def __init__(self, Q, A=None, b=None):
        self.Q = np.asarray(Q, dtype=float)  # shape (d_out, d, d)
        d_out, d = self.Q.shape[0], self.Q.shape[1]
        self.A = np.zeros((d_out, d)) if A is None else np.atleast_2d(np.asarray(A, dtype=float))
        self.b = np.zeros(d_out) if b is None else np.asarray(b, dtype=float)

    def value(self, x):
        return np.einsum("ijk,j,k->i", self.Q, x, x) + self.A @ x + self.b

    def value_batch(self, xs):
        quad = np.einsum("ijk,nj,nk->ni", self.Q, xs, xs)
        return quad + xs @ self.A.T + self.b

    def lipschitz(self, box=None):
        # |Df| <= 2 ||Q|| R + ||A|| on a ball of radius R around the origin
        radius = 10.0 if box is None else float(np.max(np.abs(box)))
        q_norm = sum(np.linalg.norm(Qi, 2) for Qi in self.Q)
        return 2.0 * q_norm * radius + float(np.linalg.norm(self.A, 2))

    def to_dict(self):
        return {"type": "quadratic", "Q": self.Q.tolist(), "A": self.A.tolist(), "b": self.b.tolist()}


def piece_from_dict(spec):
    kind = spec.get("type")
    if kind == "constant":
        return ConstantPiece(spec["value"])
    if kind == "affine":
        return AffinePiece(spec["A"], spec.get("b"))
    if kind == "quadratic":
        return QuadraticPiece(spec["Q"], spec.get("A"), spec.get("b"))
    raise ValueError(f"unknown piece type {kind!r}")


# ---------------------------------------------------------------------------
# the field itself

@dataclass
class PiecewiseField:
    """A vector field on R^d with guard-delimited smooth pieces.

    ``pieces`` maps full sign patterns (strings over '+', '-') to catalog
    pieces; ``boundary_values`` maps degenerate patterns (at least one '0')
    to explicit vectors carried on the guard zero sets.
    """

    dimension: int
    guards: list = dc_field(default_factory=list)
    pieces: dict = dc_field(default_factory=dict)
    boundary_values: dict = dc_field(default_factory=dict)
    lipschitz_bound: float | None = None
    name: str = ""
    state_box: tuple | None = None

    def __post_init__(self):
        self.pieces = {normalize_pattern(k): v for k, v in self.pieces.items()}
        self.boundary_values = {
            normalize_pattern(k): np.asarray(v, dtype=float)
            for k, v in self.boundary_values.items()
        }
        for pat in self.pieces:
            if len(pat) != len(self.guards) or "0" in pat:
                raise ValueError(f"piece pattern {pat!r} is not a full sign pattern")
        for pat in self.boundary_values:
            if len(pat) != len(self.guards) or "0" not in pat:
                raise ValueError(f"boundary pattern {pat!r} must contain a '0' label")

    # -- sign patterns ------------------------------------------------------

    def guard_values(self, x):
        return np.array([g.value(x) for g in self.guards])

    def sign_pattern(self, x, zero_tol=0.0):
        """Sign pattern of x; guards within zero_tol of 0 are labeled '0'."""
        chars = []
        for g in self.guards:
            v = g.value(x)
            if abs(v) <= zero_tol:
                chars.append("0")
            else:
                chars.append("+" if v > 0 else "-")
        return "".join(chars)

    def piece_for(self, pattern):
        piece = self.pieces.get(pattern)
        if piece is None:
            raise UnassignedPattern(f"no piece assigned to sign pattern {pattern!r}")
        return piece

    # -- pointwise evaluation -----------------------------------------------

    def evaluate(self, x):
        """The single vector h(x) as the field definition assigns it.

        Boundary patterns use `boundary_values` when present; otherwise the
        piece of the adjacent region with lexicographically smallest pattern.
        """
        x = np.asarray(x, dtype=float)
        pattern = self.sign_pattern(x)
        if "0" not in pattern:
            return np.array(self.piece_for(pattern).value(x), dtype=float)
        if pattern in self.boundary_values:
            return self.boundary_values[pattern].copy()
        zero_slots = [i for i, c in enumerate(pattern) if c == "0"]
        # '+' < '-' in ASCII, so itertools.product over "+-" scans lexicographically
        for fill in itertools.product("+-", repeat=len(zero_slots)):
            cand = list(pattern)
            for slot, c in zip(zero_slots, fill):
                cand[slot] = c
            cand = "".join(cand)
            if cand in self.pieces:
                return np.array(self.pieces[cand].value(x), dtype=float)
        raise UnassignedPattern(
            f"pattern {pattern!r} has no boundary value and no adjacent piece"
        )

    def evaluate_batch(self, xs):
        """Vectorized evaluate() for points off every guard surface."""
        xs = np.asarray(xs, dtype=float)
        out = np.empty((xs.shape[0], self.dimension))
        if not self.guards:
            return np.asarray(self.piece_for("").value_batch(xs))
        gv = np.column_stack([g.value_batch(xs) for g in self.guards])
        signs = np.where(gv > 0, 1, np.where(gv < 0, -1, 0)).astype(np.int8)
        on_boundary = np.any(signs == 0, axis=1)
        codes = signs @ (3 ** np.arange(len(self.guards)))
        for code in np.unique(codes[~on_boundary]):
            mask = (codes == code) & ~on_boundary
            idx = np.argmax(mask)
            pattern = "".join(_SIGN_CHARS[int(s)] for s in signs[idx])
            out[mask] = self.piece_for(pattern).value_batch(xs[mask])
        for i in np.nonzero(on_boundary)[0]:
            out[i] = self.evaluate(xs[i])
        return out

    # -- adjacency ----------------------------------------------------------

    def active_guards(self, x, radius_tol):
        gv = self.guard_values(x) if self.guards else np.zeros(0)
        return gv, [k for k, v in enumerate(gv) if abs(v) <= radius_tol]

    def adjacent_patterns(self, x, radius_tol=DEFAULT_RADIUS_TOL):
        """Full sign patterns of positive-measure regions adjacent to x.

        Decided to first order: a candidate assignment of signs to the active
        guards is adjacent iff the open cone {u : sign_k * grad g_k(x) . u > 0}
        is nonempty (exact for affine guards).
        """
        x = np.asarray(x, dtype=float)
        if not self.guards:
            return [""]
        gv, active = self.active_guards(x, radius_tol)
        base = ["+" if v > 0 else "-" for v in gv]
        if not active:
            return ["".join(base)]
        per_guard_signs = []
        grads = {}
        for k in active:
            grad = np.asarray(self.guards[k].gradient(x), dtype=float)
            nrm = np.linalg.norm(grad)
            if nrm < 1e-14:
                # norm guard at its center: only the outside sign is reachable
                per_guard_signs.append(("+",))
                grads[k] = None
            else:
                per_guard_signs.append(("+", "-"))
                grads[k] = grad / nrm
        patterns = []
        for combo in itertools.product(*per_guard_signs):
            vecs = []
            for k, sign in zip(active, combo):
                if grads[k] is None:
                    continue
                vecs.append(grads[k] if sign == "+" else -grads[k])
            if _strict_cone_feasible(vecs, self.dimension):
                cand = list(base)
                for k, sign in zip(active, combo):
                    cand[k] = sign
                patterns.append("".join(cand))
        return patterns

    def adjacent_boundary_patterns(self, x, radius_tol=DEFAULT_RADIUS_TOL):
        """Boundary patterns whose carrier set meets the radius_tol-ball at x."""
        x = np.asarray(x, dtype=float)
        if not self.boundary_values:
            return []
        gv, active = self.active_guards(x, radius_tol)
        active_set = set(active)
        found = []
        for pattern in self.boundary_values:
            ok = True
            equalities, strict = [], []
            for k, c in enumerate(pattern):
                if c == "0":
                    if k not in active_set:
                        ok = False
                        break
                    grad = np.asarray(self.guards[k].gradient(x), dtype=float)
                    if np.linalg.norm(grad) > 1e-14:
                        equalities.append(grad / np.linalg.norm(grad))
                elif k in active_set:
                    grad = np.asarray(self.guards[k].gradient(x), dtype=float)
                    nrm = np.linalg.norm(grad)
                    if nrm < 1e-14:
                        if c != "+":
                            ok = False
                            break
                    else:
                        strict.append(grad / nrm if c == "+" else -grad / nrm)
                else:
                    if ("+" if gv[k] > 0 else "-") != c:
                        ok = False
                        break
            if not ok:
                continue
            if strict and equalities:
                import scipy.linalg

                basis = scipy.linalg.null_space(np.vstack(equalities))
                if basis.shape[1] == 0:
                    continue
                projected = [basis.T @ v for v in strict]
                if not _strict_cone_feasible(projected, basis.shape[1]):
                    continue
            elif strict:
                if not _strict_cone_feasible(strict, self.dimension):
                    continue
            found.append(pattern)
        return found

    def to_dict(self):
        d = {
            "dimension": self.dimension,
            "guards": [g.to_dict() for g in self.guards],
            "pieces": {k: p.to_dict() for k, p in self.pieces.items()},
            "boundary_values": {k: v.tolist() for k, v in self.boundary_values.items()},
        }
        if self.lipschitz_bound is not None:
            d["lipschitz_bound"] = self.lipschitz_bound
        if self.name:
            d["name"] = self.name
        return d

    @classmethod
    def from_dict(cls, spec):
        dim = int(spec["dimension"])
        guards = [guard_from_dict(g, dim) for g in spec.get("guards", [])]
        pieces = {normalize_pattern(k): piece_from_dict(v) for k, v in spec.get("pieces", {}).items()}
        return cls(
            dimension=dim,
            guards=guards,
            pieces=pieces,
            boundary_values=spec.get("boundary_values", {}),
            lipschitz_bound=spec.get("lipschitz_bound"),
            name=spec.get("name", ""),
        )

    def lipschitz_estimate(self, box=None):
        if self.lipschitz_bound is not None:
            return self.lipschitz_bound
        vals = [p.lipschitz(box) for p in self.pieces.values()]
        return max(vals) if vals else 0.0


def _strict_cone_feasible(vectors, dimension):
    """Is there u with v . u > 0 for every v (unit vectors)?"""
    if not vectors:
        return True
    for v in vectors:
        if np.linalg.norm(v) < 1e-14:
            return False
    if len(vectors) == 1:
        return True
    if len(vectors) == 2:
        cos = float(vectors[0] @ vectors[1])
        return cos > -1.0 + 1e-12
    from scipy.optimize import linprog

    dim = vectors[0].size
    # maximize t subject to v_k . u >= t, |u_i| <= 1; feasible iff t* > 0
    a_ub = np.hstack([-np.vstack(vectors), np.ones((len(vectors), 1))])
    res = linprog(
        c=np.concatenate([np.zeros(dim), [-1.0]]),
        A_ub=a_ub,
        b_ub=np.zeros(len(vectors)),
        bounds=[(-1, 1)] * dim + [(None, 1)],
        method="highs",
    )
    return bool(res.status == 0 and res.x[-1] > 1e-12)


# ---------------------------------------------------------------------------
# finitely generated convex velocity sets

@dataclass
class ConvexVelocitySet:
    """Convex hull of finitely many velocity vectors (vertices may be redundant)."""

    vertices: np.ndarray

    def __post_init__(self):
        self.vertices = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if self.vertices.size == 0:
            raise EmptySet("a velocity set needs at least one vertex")

    @property
    def dimension(self):
        return self.vertices.shape[1]

    def project(self, v):
        """Nearest point of the hull to v and its distance."""
        return _hull_project(self.vertices, np.asarray(v, dtype=float))

    def distance(self, v):
        return self.project(v)[1]

    def contains(self, v, tol=DEFAULT_RADIUS_TOL):
        return self.distance(v) <= tol

    def equals(self, other, tol=1e-12):
        """Mutual hull containment, the right equality for redundant vertex lists."""
        return all(other.contains(w, tol) for w in self.vertices) and all(
            self.contains(w, tol) for w in other.vertices
        )


def _dedupe_rows(rows, tol=1e-12):
    kept = []
    for r in rows:
        if not any(np.max(np.abs(r - k)) <= tol for k in kept):
            kept.append(r)
    return np.array(kept)


def _hull_project(vertices, v):
    """Exact projection onto conv(vertices) by face enumeration.

    The nearest point lies on a face spanned by at most d+1 affinely
    independent vertices, so enumerating vertex subsets of that size and
    keeping feasible affine projections is exact up to linear-algebra
    roundoff.  Vertex counts here are small (pieces adjacent to a point).
    """
    verts = _dedupe_rows(vertices)
    m, d = verts.shape
    if m == 1:
        return verts[0].copy(), float(np.linalg.norm(v - verts[0]))
    if d == 1:
        lo, hi = float(verts.min()), float(verts.max())
        p = min(max(float(v[0]), lo), hi)
        return np.array([p]), abs(float(v[0]) - p)
    best_p, best_d = None, np.inf
    for size in range(1, min(m, d + 1) + 1):
        for subset in itertools.combinations(range(m), size):
            w = verts[list(subset)]
            if size == 1:
                p = w[0]
            else:
                basis = w[1:] - w[0]
                gram = basis @ basis.T
                rhs = basis @ (v - w[0])
                try:
                    coeff = np.linalg.solve(gram, rhs)
                except np.linalg.LinAlgError:
                    continue
                lam = np.concatenate([[1.0 - coeff.sum()], coeff])
                if lam.min() < -1e-12:
                    continue
                p = w[0] + coeff @ basis
            dist = float(np.linalg.norm(v - p))
            if dist < best_d:
                best_p, best_d = np.array(p, dtype=float), dist
    return best_p, best_d


def hull_contains(velocity_set, v, tol=DEFAULT_RADIUS_TOL):
    """True iff v is within tol of the hull."""
    if tol < 0:
        raise ValueError("tol must be >= 0")
    return velocity_set.contains(v, tol)


def hull_distance(velocity_set, v):
    """Euclidean distance from v to the hull."""
    return velocity_set.distance(v)


# ---------------------------------------------------------------------------
# set-valued maps

def evaluate_field(field, x):
    """Pointwise h(x) lookup."""
    return field.evaluate(x)


def filippov_map(field, x, radius_tol=DEFAULT_RADIUS_TOL):
    """Convex hull of adjacent positive-measure region values at x.

    Boundary values are excluded: they live on guard zero sets, which are
    Lebesgue-null for catalog fields.
    """
    if radius_tol <= 0:
        raise ValueError("radius_tol must be > 0")
    x = np.asarray(x, dtype=float)
    patterns = field.adjacent_patterns(x, radius_tol)
    values = [field.piece_for(p).value(x) for p in patterns]
    return ConvexVelocitySet(np.array(values, dtype=float))


def krasovskii_map(field, x, radius_tol=DEFAULT_RADIUS_TOL):
    """filippov_map plus any boundary values assigned within the ball."""
    fil = filippov_map(field, x, radius_tol)
    extra = [
        field.boundary_values[p]
        for p in field.adjacent_boundary_patterns(np.asarray(x, dtype=float), radius_tol)
    ]
    if not extra:
        return fil
    return ConvexVelocitySet(np.vstack([fil.vertices, np.array(extra)]))


def mollify(field, x, delta, samples, rng):
    """Monte-Carlo estimate of the field smoothed by a bump of radius delta.

    Draws from the normalized smooth bump supported in the delta-ball
    (rejection from the uniform ball) and averages evaluate_field; draws that
    land on a boundary pattern are redrawn.
    """
    if delta <= 0:
        raise ValueError("delta must be > 0")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    x = np.asarray(x, dtype=float)
    d = field.dimension
    total = np.zeros(d)
    got = 0
    attempts = 0
    max_attempts = 1000 * samples + 1000
    while got < samples:
        attempts += 1
        if attempts > max_attempts:
            raise DegenerateGeometry("mollify could not draw off-boundary samples")
        u = rng.standard_normal(d)
        u /= np.linalg.norm(u)
        r = rng.random() ** (1.0 / d)
        point = u * r  # uniform in the unit ball
        # bump density exp(-1/(1-r^2)) / normalizer; rejection against uniform
        if rng.random() > np.exp(1.0 - 1.0 / (1.0 - r * r)):
            continue
        y = x + delta * point
        if "0" in field.sign_pattern(y):
            continue
        total += field.evaluate(y)
        got += 1
    return total / samples


# ---------------------------------------------------------------------------
# built-in catalog

def builtin_field(name, dimension=None):
    """Named fields used by the demos and the test suite."""
    if name == "example1":
        return PiecewiseField(
            dimension=2,
            guards=[CoordinateGuard(1, 2)],
            pieces={"+": ConstantPiece([1.0, -1.0]), "-": ConstantPiece([1.0, 1.0])},
            boundary_values={"0": [-1.0, 0.0]},
            lipschitz_bound=0.0,
            name="example1",
        )
    if name == "relay":
        return PiecewiseField(
            dimension=1,
            guards=[CoordinateGuard(0, 1)],
            pieces={"+": ConstantPiece([-1.0]), "-": ConstantPiece([1.0])},
            boundary_values={"0": [0.0]},
            lipschitz_bound=0.0,
            name="relay",
        )
    if name == "spurious_equilibrium":
        return PiecewiseField(
            dimension=1,
            guards=[CoordinateGuard(0, 1)],
            pieces={"+": ConstantPiece([1.0]), "-": ConstantPiece([1.0])},
            boundary_values={"0": [0.0]},
            lipschitz_bound=0.0,
            name="spurious_equilibrium",
        )
    if name == "linear":
        d = 1 if dimension is None else int(dimension)
        return PiecewiseField(
            dimension=d,
            guards=[],
            pieces={"": AffinePiece(-np.eye(d))},
            lipschitz_bound=1.0,
            name="linear",
        )
    raise ValueError(f"unknown built-in field {name!r}")


BUILTIN_FIELDS = ("example1", "relay", "spurious_equilibrium", "linear")
