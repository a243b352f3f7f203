"""Experiment configuration: a single JSON file drives every pipeline.

The schema is documented in the README; inline field definitions use the
coefficient-table encoding of the fields module.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import ConfigInvalid, IoFailure
from .fields import BUILTIN_FIELDS, PiecewiseField, builtin_field
from .io import canonical_json
from .sa import DEFAULT_BLOWUP_BOUND, NoiseModel, StepsizeSchedule


@dataclass
class TrackingParams:
    T: float = 1.0
    n_windows: int = 5
    dt: float = 1e-3


@dataclass
class MeasureParams:
    checkpoints: list = dc_field(default_factory=list)
    eps: list = dc_field(default_factory=lambda: [0.05])


@dataclass
class IntegrateParams:
    t_end: float = 1.0
    dt: float = 1e-3


@dataclass
class ExperimentConfig:
    field_spec: object  # builtin name or inline dict
    x0: np.ndarray
    schedule: StepsizeSchedule
    noise: NoiseModel
    n_steps: int
    seeds: list
    tracking: TrackingParams
    measures: MeasureParams
    integrate: IntegrateParams
    output_dir: str
    blowup_bound: float

    def build_field(self):
        if isinstance(self.field_spec, str):
            return builtin_field(self.field_spec, dimension=self.x0.size)
        return PiecewiseField.from_dict(self.field_spec)

    def effective_dict(self):
        """Full config echo, defaults filled in; hashed for tamper evidence."""
        return {
            "field": self.field_spec,
            "x0": self.x0.tolist(),
            "schedule": self.schedule.to_dict(),
            "noise": self.noise.to_dict(),
            "n_steps": self.n_steps,
            "seeds": list(self.seeds),
            "tracking": {
                "T": self.tracking.T,
                "n_windows": self.tracking.n_windows,
                "dt": self.tracking.dt,
            },
            "measures": {
                "checkpoints": list(self.measures.checkpoints),
                "eps": list(self.measures.eps),
            },
            "integrate": {"t_end": self.integrate.t_end, "dt": self.integrate.dt},
            "output_dir": self.output_dir,
            "blowup_bound": self.blowup_bound,
        }

    def content_hash(self):
        return hashlib.sha256(canonical_json(self.effective_dict()).encode()).hexdigest()


def _require(data, key, path, types=None):
    if key not in data:
        raise ConfigInvalid(f"{path}{key}: missing required entry")
    value = data[key]
    if types is not None and not isinstance(value, types):
        raise ConfigInvalid(f"{path}{key}: expected {types}, got {type(value).__name__}")
    return value


def _positive(value, path):
    if not (isinstance(value, (int, float)) and value > 0):
        raise ConfigInvalid(f"{path}: must be a positive number")
    return float(value)


def config_from_dict(data):
    if not isinstance(data, dict):
        raise ConfigInvalid("config root must be an object")

    field_spec = _require(data, "field", "")
    if isinstance(field_spec, str):
        if field_spec not in BUILTIN_FIELDS:
            raise ConfigInvalid(
                f"field: unknown built-in {field_spec!r}; known: {', '.join(BUILTIN_FIELDS)}"
            )
    elif isinstance(field_spec, dict):
        try:
            PiecewiseField.from_dict(field_spec)
        except (KeyError, ValueError) as exc:
            raise ConfigInvalid(f"field: invalid inline definition: {exc}") from exc
    else:
        raise ConfigInvalid("field: must be a built-in name or an inline object")

    x0 = np.asarray(_require(data, "x0", "", list), dtype=float)
    if x0.ndim != 1 or x0.size == 0 or not np.all(np.isfinite(x0)):
        raise ConfigInvalid("x0: must be a non-empty finite vector")

    sched_data = _require(data, "schedule", "", dict)
    try:
        schedule = StepsizeSchedule(
            kind=sched_data.get("kind", "power"),
            a0=float(sched_data.get("a0", 1.0)),
            gamma=float(sched_data.get("gamma", 1.0)),
            sequence=sched_data.get("sequence"),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigInvalid(f"schedule: {exc}") from exc

    noise_data = _require(data, "noise", "", dict)
    try:
        noise = NoiseModel(
            kind=noise_data.get("kind", "gaussian"),
            scale=float(noise_data.get("scale", 0.1)),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigInvalid(f"noise: {exc}") from exc

    n_steps = _require(data, "n_steps", "", int)
    if n_steps < 1:
        raise ConfigInvalid("n_steps: must be >= 1")

    seeds = _require(data, "seeds", "", list)
    if not seeds or not all(isinstance(s, int) for s in seeds):
        raise ConfigInvalid("seeds: must be a non-empty list of integers")

    tr = data.get("tracking", {})
    tracking = TrackingParams(
        T=_positive(tr.get("T", 1.0), "tracking.T"),
        n_windows=int(tr.get("n_windows", 5)),
        dt=_positive(tr.get("dt", 1e-3), "tracking.dt"),
    )
    if tracking.n_windows < 1:
        raise ConfigInvalid("tracking.n_windows: must be >= 1")

    ms = data.get("measures", {})
    checkpoints = [int(c) for c in ms.get("checkpoints", [max(1, n_steps // 4), n_steps])]
    if any(c < 1 or c > n_steps for c in checkpoints):
        raise ConfigInvalid("measures.checkpoints: each must be in [1, n_steps]")
    if any(b <= a for a, b in zip(checkpoints, checkpoints[1:])):
        raise ConfigInvalid("measures.checkpoints: must be strictly increasing")
    eps_list = [float(e) for e in ms.get("eps", [0.05])]
    if any(e <= 0 for e in eps_list):
        raise ConfigInvalid("measures.eps: each must be > 0")
    measures = MeasureParams(checkpoints=checkpoints, eps=eps_list)

    ig = data.get("integrate", {})
    integrate = IntegrateParams(
        t_end=_positive(ig.get("t_end", 1.0), "integrate.t_end"),
        dt=_positive(ig.get("dt", 1e-3), "integrate.dt"),
    )

    config = ExperimentConfig(
        field_spec=field_spec,
        x0=x0,
        schedule=schedule,
        noise=noise,
        n_steps=n_steps,
        seeds=[int(s) for s in seeds],
        tracking=tracking,
        measures=measures,
        integrate=integrate,
        output_dir=str(data.get("output_dir", "out")),
        blowup_bound=_positive(data.get("blowup_bound", DEFAULT_BLOWUP_BOUND), "blowup_bound"),
    )
    # dimension consistency between field and x0
    field = config.build_field()
    if field.dimension != x0.size:
        raise ConfigInvalid(
            f"x0: dimension {x0.size} does not match field dimension {field.dimension}"
        )
    return config


def load_config(path):
    try:
        with open(path) as handle:
            data = json.load(handle)
    except OSError as exc:
        raise IoFailure(f"could not read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config is not valid JSON: {exc}") from exc
    config = config_from_dict(data)
    if config.output_dir == "out" and "output_dir" not in data:
        config.output_dir = os.path.join(os.path.dirname(os.path.abspath(path)), "out")
    return config
