"""Run configuration: a single JSON document validated against a shipped schema."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import ParseError, ValidationError
from .potential import InteractionSpec, PotentialSpec, ProblemConfig, Tolerances
from .semiclassics import Rect
from .spectral import DEFAULT_L, DEFAULT_N, DEFAULT_THETA, DEFAULT_THETA_P


def load_schema() -> dict:
    text = resources.files("resonance_atlas").joinpath("data/schema.json").read_text("utf-8")
    return json.loads(text)


def fixture_path(name: str) -> Path:
    """Path of a shipped example configuration (``case_T``, ``case_N``, ``gap``)."""
    return Path(str(resources.files("resonance_atlas").joinpath(f"data/{name}.json")))


@dataclass(frozen=True)
class SpectralSettings:
    theta: float = DEFAULT_THETA
    theta_p: float = DEFAULT_THETA_P
    L: float = DEFAULT_L
    N: int = DEFAULT_N
    class_tol_factor: float = 1e-3
    method: str = "auto"

    def to_dict(self) -> dict:
        return {"theta": self.theta, "theta_p": self.theta_p, "L": self.L, "N": self.N,
                "class_tol_factor": self.class_tol_factor, "method": self.method}


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemConfig
    h_list: tuple[float, ...]
    search_rect: Rect | None = None
    spectral: SpectralSettings = field(default_factory=SpectralSettings)
    safety_c: float = 0.9
    output_dir: str = "runs"
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def run_hash(self) -> str:
        """Digest of the canonical JSON form; names the output subdirectory."""
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]


def _locate(text: str, pos: int) -> tuple[int, int]:
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def _field_name(err: jsonschema.ValidationError) -> str:
    path = ".".join(str(p) for p in err.absolute_path)
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        key = extra[0] if extra else "?"
        return f"{path}.{key}" if path else key
    if err.validator == "required":
        missing = err.message.split("'")[1] if "'" in err.message else "?"
        return f"{path}.{missing}" if path else missing
    return path or "<root>"


def _problem_from(d: dict) -> ProblemConfig:
    tol = Tolerances(**d.get("tolerances", {}))
    W = d.get("W", {})
    if not d.get("nu", 1.0) > 0.5:
        raise ValidationError("problem.nu", "nu must exceed 1/2")
    try:
        return ProblemConfig(
            V1=PotentialSpec.from_records(d["V1"]),
            V2=PotentialSpec.from_records(d["V2"]),
            W=InteractionSpec(PotentialSpec.from_records(W.get("r0", [])),
                              PotentialSpec.from_records(W.get("r1", []))),
            E0=float(d["E0"]), nu=float(d.get("nu", 1.0)),
            theta0=float(d.get("theta0", 0.5)), R0=float(d.get("R0", 1.0)),
            tolerances=tol, sector_policy=d.get("sector_policy", "fail"),
            arbitrary_M=float(d.get("arbitrary_M", 5.0)))
    except ValidationError as exc:
        raise ValidationError(f"problem.{exc.field}", str(exc).split(": ", 1)[-1]) from exc


def parse_config(data: bytes | str) -> RunConfig:
    """Parse and validate a run configuration.

    Raises
    ------
    ParseError
        Not UTF-8 or not JSON; carries the line and column.
    ValidationError
        Schema violation or broken invariant; names the offending field.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            line, col = _locate(data[:exc.start].decode("utf-8", "replace"), exc.start)
            raise ParseError("input is not valid UTF-8", line, col) from exc
    else:
        text = data
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from exc
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ValidationError(_field_name(e), e.message)

    problem = _problem_from(raw["problem"])
    h_list = tuple(float(h) for h in raw["h_list"])
    if any(not (0 < h < 1) for h in h_list):
        raise ValidationError("h_list", "every h must lie in (0, 1)")
    if any(a <= b for a, b in zip(h_list, h_list[1:])):
        raise ValidationError("h_list", "h_list must be descending")
    rect = None
    if "search_rect" in raw:
        re, im = raw["search_rect"]["re"], raw["search_rect"]["im"]
        if not (re[0] < re[1] and im[0] < im[1]):
            raise ValidationError("search_rect", "bounds must be increasing")
        if im[1] > 0:
            raise ValidationError("search_rect.im", "rectangle must lie in Im E <= 0")
        rect = Rect(float(re[0]), float(re[1]), float(im[0]), float(im[1]))
    sd = raw.get("spectral", {})
    spectral = SpectralSettings(**{k: (int(v) if k == "N" else v) for k, v in sd.items()})
    if not 0 < spectral.theta < spectral.theta_p <= problem.theta0:
        raise ValidationError("spectral.theta", "need 0 < theta < theta_p <= theta0")
    c = float(raw.get("safety_c", 0.9))
    if not 0 < c < 1:
        raise ValidationError("safety_c", "must lie in (0, 1)")
    if not math.isfinite(problem.E0):
        raise ValidationError("problem.E0", "must be finite")
    return RunConfig(problem, h_list, rect, spectral, c, raw.get("output_dir", "runs"), raw)


def load_config(path: str | Path) -> RunConfig:
    return parse_config(Path(path).read_bytes())
