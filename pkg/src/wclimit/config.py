"""Experiment configuration: JSON with complex numbers as [re, im] pairs, matrices row-major."""
from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .correlation import CorrelationModel, kernel_from_config
from .dyson import MAX_SIMPLEX_N, SmearedAmplitude, SystemModel, VACUUM, validate_lambdas
from .errors import CapacityError, ModelError, ValidationError

EXPERIMENTS = ("moments", "dyson-sweep", "bounds", "coefficients", "simulate", "ito-audit")
N_MAX_CAPS = {"moments": 8, "dyson-sweep": MAX_SIMPLEX_N, "bounds": 400}
NEEDS_SYSTEM = ("coefficients", "simulate")


def parse_complex(x, where: str) -> complex:
    if isinstance(x, bool):
        raise ValidationError(where, f"expected a number or [re, im], got {x!r}")
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
        return complex(x[0], x[1])
    raise ValidationError(where, f"expected a number or [re, im], got {x!r}")


def parse_matrix(rows, where: str, dim: int | None = None) -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ValidationError(where, "expected a non-empty list of rows")
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValidationError(where, f"expected a square {n}x{n} matrix")
    if dim is not None and n != dim:
        raise ValidationError(where, f"dimension {n} disagrees with system.dim = {dim}")
    return np.array([[parse_complex(v, f"{where}[{i}][{j}]") for j, v in enumerate(r)]
                     for i, r in enumerate(rows)])


def parse_vector(vals, where: str, dim: int) -> np.ndarray:
    if not isinstance(vals, list) or len(vals) != dim:
        raise ValidationError(where, f"expected a vector of length {dim}")
    v = np.array([parse_complex(x, f"{where}[{i}]") for i, x in enumerate(vals)])
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ValidationError(where, "must be nonzero")
    return v / nrm


def encode_complex(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def encode_matrix(m: np.ndarray) -> list:
    return [[encode_complex(z) for z in row] for row in np.asarray(m, dtype=complex)]


def config_hash(raw: dict) -> str:
    """Hash of the experiment definition; the output directory is not part of it."""
    raw = copy.deepcopy(raw)
    if isinstance(raw.get("output"), dict):
        raw["output"].pop("directory", None)
    return hashlib.sha256(json.dumps(raw, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


@dataclass
class ExperimentConfig:
    raw: dict
    experiment: str
    params: dict
    system: SystemModel | None = None
    correlation: CorrelationModel | None = None
    amplitudes: tuple[SmearedAmplitude, SmearedAmplitude] = (VACUUM, VACUUM)
    phi1: np.ndarray | None = None
    phi2: np.ndarray | None = None
    out_dir: Path = Path("out")
    formats: tuple[str, ...] = ("csv", "json")
    base_dir: Path = field(default_factory=Path.cwd)

    @property
    def sha256(self) -> str:
        return config_hash(self.raw)

    def param(self, key: str, default=None):
        return self.params.get(key, default)

    def float_param(self, key: str, default: float | None = None, positive: bool = True) -> float:
        v = self.params.get(key, default)
        if v is None:
            raise ValidationError(f"experiment.{key}", "is required")
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ValidationError(f"experiment.{key}", f"expected a finite number, got {v!r}")
        if positive and not v > 0:
            raise ValidationError(f"experiment.{key}", "must be positive")
        return float(v)

    def int_param(self, key: str, default: int | None = None, low: int = 0) -> int:
        v = self.params.get(key, default)
        if isinstance(v, bool) or not isinstance(v, int):
            raise ValidationError(f"experiment.{key}", f"expected an integer, got {v!r}")
        if v < low:
            raise ValidationError(f"experiment.{key}", f"must be >= {low}")
        return v


def _parse_system(spec: dict) -> SystemModel:
    if not isinstance(spec, dict):
        raise ValidationError("system", "expected an object")
    dim = spec.get("dim")
    if dim is not None and (isinstance(dim, bool) or not isinstance(dim, int) or dim < 1):
        raise ValidationError("system.dim", "expected a positive integer")
    mats = {}
    for key in ("E_00", "E_01", "E_10", "E_11"):
        if key not in spec:
            raise ValidationError(f"system.{key}", "is required")
        mats[key] = parse_matrix(spec[key], f"system.{key}", dim)
    return SystemModel(mats["E_00"], mats["E_01"], mats["E_10"], mats["E_11"])


def _parse_correlation(spec: dict, base: Path) -> CorrelationModel:
    if not isinstance(spec, dict):
        raise ValidationError("correlation", "expected an object")
    spec = dict(spec)
    if "csv" in spec:
        spec.setdefault("family", "tabulated")
        spec["csv"] = str((base / spec["csv"]).resolve())
    try:
        return kernel_from_config(spec)
    except ValidationError:
        raise
    except (ModelError, ValueError, TypeError) as exc:
        raise ValidationError("correlation", str(exc)) from exc


def _parse_amplitudes(spec) -> tuple[SmearedAmplitude, SmearedAmplitude]:
    if spec is None:
        return (VACUUM, VACUUM)
    if not isinstance(spec, list) or len(spec) != 2:
        raise ValidationError("amplitudes", "expected a list of two entries (bra side, ket side)")
    out = []
    for i, a in enumerate(spec):
        where = f"amplitudes[{i}]"
        if not isinstance(a, dict):
            raise ValidationError(where, "expected an object")
        iv = a.get("interval")
        if not (isinstance(iv, list) and len(iv) == 2 and all(isinstance(x, (int, float)) for x in iv)):
            raise ValidationError(f"{where}.interval", "expected [S, T]")
        if iv[0] < 0 or iv[1] < iv[0]:
            raise ValidationError(f"{where}.interval", "needs 0 <= S <= T")
        out.append(SmearedAmplitude(tuple(iv), parse_complex(a.get("coupling", 0), f"{where}.coupling")))
    return tuple(out)


def apply_overrides(raw: dict, overrides: dict) -> dict:
    """Inline CLI flags: keys are dotted paths into the config."""
    raw = copy.deepcopy(raw)
    for path, value in overrides.items():
        if value is None:
            continue
        node = raw
        *head, last = path.split(".")
        for k in head:
            node = node.setdefault(k, {})
        node[last] = value
    return raw


def build_config(raw: dict, base_dir: Path | str = ".") -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ValidationError("config", "top level must be an object")
    base = Path(base_dir)
    exp = raw.get("experiment")
    if not isinstance(exp, dict) or exp.get("name") not in EXPERIMENTS:
        raise ValidationError("experiment.name", f"expected one of {', '.join(EXPERIMENTS)}")
    name = exp["name"]
    params = {k: v for k, v in exp.items() if k != "name"}
    cfg = ExperimentConfig(raw=raw, experiment=name, params=params, base_dir=base)
    if "system" in raw:
        cfg.system = _parse_system(raw["system"])
    elif name in NEEDS_SYSTEM:
        raise ValidationError("system", f"required by experiment '{name}'")
    if "correlation" in raw:
        cfg.correlation = _parse_correlation(raw["correlation"], base)
    elif name in NEEDS_SYSTEM + ("dyson-sweep",):
        raise ValidationError("correlation", f"required by experiment '{name}'")
    cfg.amplitudes = _parse_amplitudes(raw.get("amplitudes"))
    states = raw.get("states", {})
    if cfg.system is not None:
        d = cfg.system.dim
        default = [1.0] + [0.0] * (d - 1)
        cfg.phi1 = parse_vector(states.get("phi1", default), "states.phi1", d)
        cfg.phi2 = parse_vector(states.get("phi2", default), "states.phi2", d)
        if cfg.correlation is not None:
            cfg.system.check_contraction(cfg.correlation)
    if "lambdas" in params:
        if not isinstance(params["lambdas"], list):
            raise ValidationError("experiment.lambdas", "expected a list")
        validate_lambdas(params["lambdas"])
    if "n_max" in params:
        n = cfg.int_param("n_max", low=1)
        cap = N_MAX_CAPS.get(name)
        if cap is not None and n > cap:
            raise CapacityError(f"experiment.n_max = {n} exceeds the cap {cap} for '{name}'")
    out = raw.get("output", {})
    if not isinstance(out, dict):
        raise ValidationError("output", "expected an object")
    cfg.out_dir = Path(out.get("directory", "out"))
    fmts = out.get("formats", ["csv", "json"])
    if not isinstance(fmts, list) or any(f not in ("csv", "json") for f in fmts):
        raise ValidationError("output.formats", "expected a subset of ['csv', 'json']")
    cfg.formats = tuple(fmts)
    return cfg


def load_config(path: str | Path, overrides: dict | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError("config", f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    except OSError as exc:
        raise ValidationError("config", f"cannot read {path}: {exc.strerror}") from exc
    return build_config(apply_overrides(raw, overrides or {}), path.parent)
