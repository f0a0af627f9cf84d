"""Line-oriented experiment configuration.

Format: UTF-8 text with ``[section]`` headers, ``key = value`` lines and
``#`` comments.  Every key has a default, so an empty document describes
the canonical 1D instance.  Profiles are written as a name followed by
numbers::

    [exponents]
    p = constant 2.0          # or: affine c0 c1 [c2]  ->  c0 + c1 x (+ c2 y)
    [weights]
    f = constant 1.0
    g = sine 1e7 1            # amplitude, wave number
    h = bump 1e-3 0.2 0.8     # amplitude, then lo hi per axis
    omega0 = 0 1              # box: lo hi per axis
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import profiles
from .energy import KirchhoffCoefficients, ProblemData
from .errors import ContinuityViolation, NonAdmissibleExponent, ParseError, ValidationError
from .exponents import build_exponent_field
from .mesh import build_grid
from .solvers import SolverParams

EXPONENT_KINDS = {"constant": (1, 1), "affine": (2, 3)}
WEIGHT_KINDS = {"constant": (1, 1), "sine": (1, 2), "bump": (3, 5)}
MODES = ("theorem1", "theorem2")
DEFAULT_NODES_2D = 33


@dataclass(frozen=True)
class Profile:
    kind: str
    args: tuple

    def __str__(self):
        return " ".join([self.kind] + [_fmt(a) for a in self.args])


def _fmt(x):
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


@dataclass(frozen=True)
class ExperimentSpec:
    dim: int = 1
    extents: tuple = (1.0,)
    nodes: int = 129
    analysis_dim: float = 7.0
    p: Profile = Profile("constant", (2.0,))
    q: Profile = Profile("constant", (1.5,))
    r: Profile = Profile("constant", (5.0,))
    a: float = 1.0
    b: float = 1.0
    gamma: float = 1.0
    lam: float = 3.0
    eta: float = 0.01
    mu: float = 0.01
    f: Profile = Profile("constant", (1.0,))
    g: Profile = Profile("sine", (1e7, 1.0))
    h: Profile = Profile("bump", (1e-3, 0.2, 0.8))
    omega0: tuple = (0.0, 1.0)
    mode: str = "theorem1"
    probes: int = 512
    constants_seed: int = 0
    safety: float = 1.2
    sphere_samples: int = 512
    solver: SolverParams = field(default_factory=lambda: SolverParams(seed=7))


def _floats(text):
    return tuple(float(t) for t in text.replace(",", " ").split())


def _theta(text):
    return None if text.strip().lower() in ("auto", "none") else float(text)


def _bool(text):
    t = text.strip().lower()
    if t in ("true", "yes", "1"):
        return True
    if t in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# section -> {key: (attribute, converter)}; converter None means a profile
SCHEMA = {
    "grid": {
        "dim": ("dim", int),
        "extents": ("extents", _floats),
        "nodes": ("nodes", int),
        "analysis_dim": ("analysis_dim", float),
    },
    "exponents": {"p": ("p", None), "q": ("q", None), "r": ("r", None)},
    "coefficients": {
        "a": ("a", float),
        "b": ("b", float),
        "gamma": ("gamma", float),
        "lambda": ("lam", float),
        "eta": ("eta", float),
        "mu": ("mu", float),
    },
    "weights": {"f": ("f", None), "g": ("g", None), "h": ("h", None), "omega0": ("omega0", _floats)},
    "run": {
        "mode": ("mode", str),
        "probes": ("probes", int),
        "constants_seed": ("constants_seed", int),
        "safety": ("safety", float),
        "sphere_samples": ("sphere_samples", int),
    },
    "solver": {
        "max_iters": ("max_iters", int),
        "grad_tol": ("grad_tol", float),
        "step_init": ("step_init", float),
        "path_points": ("path_points", int),
        "backtrack_factor": ("backtrack_factor", float),
        "theta": ("theta", _theta),
        "seed": ("seed", int),
        "polish": ("polish", _bool),
    },
}


def _profile(text, kinds, key, line):
    parts = text.split()
    if not parts or parts[0] not in kinds:
        raise ParseError(f"{key}: expected one of {sorted(kinds)}, got {text!r}", line)
    lo, hi = kinds[parts[0]]
    try:
        args = tuple(float(t) for t in parts[1:])
    except ValueError as exc:
        raise ParseError(f"{key}: {exc}", line) from exc
    if not lo <= len(args) <= hi:
        raise ParseError(f"{key}: {parts[0]} takes {lo}..{hi} numbers, got {len(args)}", line)
    return Profile(parts[0], args)


def parse_config(text):
    """Parse a configuration document into a validated ExperimentSpec."""
    top, solver = {}, {}
    section = None
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError(f"malformed section header {raw.strip()!r}", lineno)
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ParseError(f"unknown section [{section}]", lineno)
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if section is None:
            raise ParseError("key outside of any [section]", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA[section]:
            raise ParseError(f"unknown key {key!r} in [{section}]", lineno)
        if (section, key) in seen:
            raise ParseError(f"duplicate key {key!r} in [{section}]", lineno)
        seen.add((section, key))
        attr, conv = SCHEMA[section][key]
        if conv is None:
            kinds = EXPONENT_KINDS if section == "exponents" else WEIGHT_KINDS
            parsed = _profile(value, kinds, key, lineno)
        else:
            try:
                parsed = conv(value)
            except ValueError as exc:
                raise ParseError(f"{key}: {exc}", lineno) from exc
        (solver if section == "solver" else top)[attr] = parsed
    if top.get("dim") == 2 and "nodes" not in top:
        top["nodes"] = DEFAULT_NODES_2D
    try:
        params = SolverParams(**{**_solver_defaults(), **solver})
    except ValueError as exc:
        raise ValidationError(f"solver: {exc}") from exc
    spec = replace(ExperimentSpec(), solver=params, **top)
    validate_spec(spec)
    return spec


def _solver_defaults():
    d = ExperimentSpec().solver
    return {f.name: getattr(d, f.name) for f in fields(d)}


def validate_spec(spec):
    """Cheap structural checks; hypotheses on the data are left to the pipeline."""
    if spec.dim not in (1, 2):
        raise ValidationError(f"dim: must be 1 or 2, got {spec.dim}")
    if len(spec.extents) != spec.dim or min(spec.extents) <= 0:
        raise ValidationError(f"extents: need {spec.dim} positive lengths, got {spec.extents}")
    if len(spec.omega0) != 2 * spec.dim:
        raise ValidationError(f"omega0: need {2 * spec.dim} numbers (lo hi per axis)")
    for name in ("a", "b", "gamma", "lam", "eta", "mu"):
        v = getattr(spec, name)
        if not (np.isfinite(v) and v > 0):
            label = "lambda" if name == "lam" else name
            raise ValidationError(f"{label}: must be positive ({label} > 0), got {v}")
    if spec.mode not in MODES:
        raise ValidationError(f"mode: expected one of {MODES}, got {spec.mode!r}")
    if spec.mode == "theorem2" and not _is_zero(spec.h):
        raise ValidationError("h: mode theorem2 requires h(x) ≡ 0")
    for name in ("f", "g", "h"):
        prof = getattr(spec, name)
        if prof.kind == "bump" and len(prof.args) != 1 + 2 * spec.dim:
            raise ValidationError(f"{name}: bump needs amplitude plus lo hi per axis")
    for name in ("p", "q", "r"):
        prof = getattr(spec, name)
        if prof.kind == "affine" and len(prof.args) != 1 + spec.dim:
            raise ValidationError(f"{name}: affine needs {1 + spec.dim} coefficients")
    if spec.probes < 1 or spec.sphere_samples < 1:
        raise ValidationError("probes and sphere_samples must be positive")
    if spec.safety < 1:
        raise ValidationError(f"safety: must be >= 1, got {spec.safety}")
    return spec


def _is_zero(prof):
    return prof.args[0] == 0.0


def serialize_config(spec):
    """Render a spec as a document that parses back to an equal spec."""
    s = spec.solver
    lines = [
        "[grid]",
        f"dim = {spec.dim}",
        "extents = " + " ".join(_fmt(float(x)) for x in spec.extents),
        f"nodes = {spec.nodes}",
        f"analysis_dim = {_fmt(spec.analysis_dim)}",
        "",
        "[exponents]",
        f"p = {spec.p}",
        f"q = {spec.q}",
        f"r = {spec.r}",
        "",
        "[coefficients]",
        f"a = {_fmt(spec.a)}",
        f"b = {_fmt(spec.b)}",
        f"gamma = {_fmt(spec.gamma)}",
        f"lambda = {_fmt(spec.lam)}",
        f"eta = {_fmt(spec.eta)}",
        f"mu = {_fmt(spec.mu)}",
        "",
        "[weights]",
        f"f = {spec.f}",
        f"g = {spec.g}",
        f"h = {spec.h}",
        "omega0 = " + " ".join(_fmt(float(x)) for x in spec.omega0),
        "",
        "[run]",
        f"mode = {spec.mode}",
        f"probes = {spec.probes}",
        f"constants_seed = {spec.constants_seed}",
        f"safety = {_fmt(spec.safety)}",
        f"sphere_samples = {spec.sphere_samples}",
        "",
        "[solver]",
        f"max_iters = {s.max_iters}",
        f"grad_tol = {_fmt(s.grad_tol)}",
        f"step_init = {_fmt(s.step_init)}",
        f"path_points = {s.path_points}",
        f"backtrack_factor = {_fmt(s.backtrack_factor)}",
        "theta = " + ("auto" if s.theta is None else _fmt(s.theta)),
        f"seed = {s.seed}",
        f"polish = {'true' if s.polish else 'false'}",
    ]
    return "\n".join(lines) + "\n"


def _exponent(prof, grid, analysis_dim, principal, key):
    if prof.kind == "constant":
        values = np.full(grid.shape, prof.args[0])
    else:
        values = np.full(grid.shape, prof.args[0])
        for c, x in zip(prof.args[1:], grid.coords):
            values = values + c * x
    try:
        return build_exponent_field(values, grid, analysis_dim, principal=principal)
    except (NonAdmissibleExponent, ContinuityViolation) as exc:
        raise ValidationError(f"{key}: {exc}") from exc


def _weight(prof, grid):
    if prof.kind == "constant":
        return profiles.constant(grid, prof.args[0])
    if prof.kind == "sine":
        k = int(prof.args[1]) if len(prof.args) > 1 else 1
        return profiles.sine(grid, prof.args[0], k)
    return profiles.bump(grid, prof.args[1:], prof.args[0])


def build_problem(spec):
    """Materialize the grid, exponents and weights of a spec."""
    try:
        grid = build_grid(spec.dim, list(spec.extents), spec.nodes)
    except ValueError as exc:
        raise ValidationError(f"nodes: {exc}") from exc
    p = _exponent(spec.p, grid, spec.analysis_dim, True, "p")
    q = _exponent(spec.q, grid, spec.analysis_dim, False, "q")
    r = _exponent(spec.r, grid, spec.analysis_dim, False, "r")
    return ProblemData(
        KirchhoffCoefficients(spec.a, spec.b, spec.gamma),
        spec.lam,
        p,
        q,
        r,
        _weight(spec.f, grid),
        _weight(spec.g, grid),
        _weight(spec.h, grid),
        profiles.box_mask(grid, spec.omega0),
        spec.eta,
        spec.mu,
        spec.mode,
    )
