"""Experiment configuration: a flat ``key = value`` text format.

Lines are ``key = value``; ``#`` starts a comment; blank lines are ignored.
Dotted keys group related settings. Numbers may be written as fractions
(``1/3``) or powers (``2^14``); lists are comma separated.

=====================  =========================================  ==================
key                    meaning                                    default
=====================  =========================================  ==================
kind                   verify-clt, verify-critical, verify-thm3,  (from subcommand)
                       slnd-audit, constants, moments
seed                   master seed                                0
threads                worker threads for replications            1
out                    output directory                           out
process.family         fbm, sub_fbm, bi_fbm                       fbm
process.H              Hurst parameter (H0 for bi_fbm)            0.6
process.K              bi_fbm exponent K0                         1
process.d              dimension                                  1
f                      gauss, x_gauss, box                        gauss
f.weight               scalar multiple of the test function       1
lambda                 level, one value per coordinate            0
n_list                 scales n                                   16,32,64,128,256
grid.t_max             time horizon                               1
grid.N                 grid steps                                 2^14
grid.multiple          resolution multiple (n^-H >= m dt^H)       8
replications           Monte Carlo replications                   2000
times                  evaluation times of F_n                    0.25,0.5,0.75,1
intervals              disjoint intervals a:b                     0:0.25,0.5:0.75
sigma                  Assumption (A) constant, or auto           auto
moments.m              orders m_i, one per interval               2,2
moments.k_max          table size of the determinacy check        6
moments.points         Sobol points per shift                     16384
slnd.trials            sampled conditioning problems              10000
slnd.m_max             largest number of conditioning times       6
slnd.lambda_max        upper end of the spectral scan             100
slnd.points            spectral scan points                       200
tol.var                relative tolerance, second moment          0.10
tol.m4                 relative tolerance, fourth moment          0.15
tol.ks_p               KS p-value threshold                       0.01
tol.skew_se            skewness bound in standard errors          3
tol.moment_se          formula vs mixture bound in std. errors    4
tol.thm3_drop          mean relative MSE drop per doubling        0.20
tol.quad               relative quadrature agreement              1e-6
=====================  =========================================  ==================
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

from ..errors import ConfigError, DomainError, ParseError, ValidationError
from ..functionals import FunctionFamily, TestFunction
from ..process_models import Family, ProcessSpec


class ExperimentKind(str, enum.Enum):
    VERIFY_CLT = "verify-clt"
    VERIFY_CRITICAL = "verify-critical"
    VERIFY_DEGENERATE = "verify-thm3"
    SLND_AUDIT = "slnd-audit"
    CONSTANTS = "constants"
    MOMENTS = "moments"

    @classmethod
    def parse(cls, text: str) -> "ExperimentKind":
        key = text.strip().lower().replace("_", "-")
        aliases = {"verify-degenerate": "verify-thm3", "slnd-check": "slnd-audit"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ConfigError(f"unknown experiment kind {text!r}") from None


DEFAULT_TOLERANCES = {
    "var": 0.10,
    "m4": 0.15,
    "ks_p": 0.01,
    "skew_se": 3.0,
    "moment_se": 4.0,
    "thm3_drop": 0.20,
    "quad": 1e-6,
}

DEFAULTS: dict[str, str] = {
    "kind": "",
    "seed": "0",
    "threads": "1",
    "out": "out",
    "process.family": "fbm",
    "process.H": "0.6",
    "process.K": "1",
    "process.d": "1",
    "f": "gauss",
    "f.weight": "1",
    "lambda": "0",
    "n_list": "16,32,64,128,256",
    "grid.t_max": "1",
    "grid.N": "2^14",
    "grid.multiple": "8",
    "replications": "2000",
    "times": "0.25,0.5,0.75,1",
    "intervals": "0:0.25,0.5:0.75",
    "sigma": "auto",
    "moments.m": "2,2",
    "moments.k_max": "6",
    "moments.points": "16384",
    "slnd.trials": "10000",
    "slnd.m_max": "6",
    "slnd.lambda_max": "100",
    "slnd.points": "200",
}
DEFAULTS.update({f"tol.{k}": repr(v) for k, v in DEFAULT_TOLERANCES.items()})


@dataclass(frozen=True)
class ExperimentConfig:
    kind: ExperimentKind
    spec: ProcessSpec
    f: TestFunction
    lam: tuple[float, ...]
    n_list: tuple[float, ...]
    t_max: float
    N: int
    replications: int
    seed: int
    out: Path
    threads: int = 1
    multiple: float = 8.0
    times: tuple[float, ...] = (0.25, 0.5, 0.75, 1.0)
    intervals: tuple[tuple[float, float], ...] = ((0.0, 0.25), (0.5, 0.75))
    sigma: float | None = None
    m_vec: tuple[int, ...] = (2, 2)
    k_max: int = 6
    moment_points: int = 16384
    slnd_trials: int = 10000
    slnd_m_max: int = 6
    lambda_max: float = 100.0
    spectral_points: int = 200
    tolerances: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)


# ----------------------------------------------------------------------------
# scalar parsing


def parse_number(text: str) -> float:
    """``1.5``, ``1/3``, ``2^14``, ``1e-3``."""
    s = text.strip()
    if not s:
        raise ValueError("empty number")
    if "/" in s:
        a, b = s.split("/", 1)
        return parse_number(a) / parse_number(b)
    if "^" in s:
        a, b = s.split("^", 1)
        return parse_number(a) ** parse_number(b)
    v = float(s)
    if not math.isfinite(v):
        raise ValueError(f"non-finite number {text!r}")
    return v


def _int(text: str) -> int:
    v = parse_number(text)
    if v != int(v):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(v)


def _numbers(text: str) -> tuple[float, ...]:
    return tuple(parse_number(t) for t in text.split(",") if t.strip())


def _intervals(text: str) -> tuple[tuple[float, float], ...]:
    out = []
    for tok in text.split(","):
        if not tok.strip():
            continue
        if ":" not in tok:
            raise ValueError(f"interval {tok.strip()!r} must be written a:b")
        a, b = tok.split(":", 1)
        out.append((parse_number(a), parse_number(b)))
    return tuple(out)


# ----------------------------------------------------------------------------
# text -> raw mapping


def parse_text(text: str) -> dict[str, tuple[str, int]]:
    """Raw ``key -> (value, line)`` mapping with syntax checks."""
    raw: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ParseError(f"expected 'key = value', got {body!r}", lineno)
        key, value = (p.strip() for p in body.split("=", 1))
        if not key or any(c.isspace() for c in key):
            raise ParseError(f"malformed key {key!r}", lineno)
        if key not in DEFAULTS:
            raise ParseError(f"unknown key {key!r}", lineno)
        if key in raw:
            raise ParseError(f"duplicate key {key!r} (first set on line {raw[key][1]})", lineno)
        if value == "":
            raise ParseError(f"missing value for {key!r}", lineno)
        raw[key] = (value, lineno)
    return raw


def parse_overrides(items: Iterable[str]) -> dict[str, tuple[str, int | None]]:
    out: dict[str, tuple[str, int | None]] = {}
    for item in items:
        if "=" not in item:
            raise ParseError(f"override {item!r} must be key=value")
        k, v = (p.strip() for p in item.split("=", 1))
        if k not in DEFAULTS:
            raise ParseError(f"unknown key {k!r}")
        out[k] = (v, None)
    return out


# ----------------------------------------------------------------------------
# raw mapping -> validated config


def _check_hypothesis(kind: ExperimentKind, spec: ProcessSpec, f: TestFunction) -> None:
    H, d, beta = spec.H_eff, spec.dimension, f.beta_class
    crit = 1.0 / (2 * beta + d)
    if H * d >= 1.0:
        raise ValidationError(f"H*d must be below 1 for a local time to exist (H = {H:g}, d = {d})")
    if kind is ExperimentKind.VERIFY_CLT and not crit < H < 1.0 / d:
        raise ValidationError(f"H must exceed 1/(2*beta+d) = {crit:g} and stay below 1/d for verify-clt (H = {H:g})")
    if kind is ExperimentKind.VERIFY_CRITICAL and abs(H - crit) > 1e-12:
        raise ValidationError(f"H must equal 1/(2*beta+d) = {crit:g} for verify-critical (H = {H:g})")
    if kind is ExperimentKind.VERIFY_DEGENERATE:
        if H >= crit:
            raise ValidationError(f"H must stay below 1/(2*beta+d) = {crit:g} for verify-thm3 (H = {H:g})")
        if d != 1:
            raise ValidationError("verify-thm3 is restricted to d = 1")
    if kind in (ExperimentKind.VERIFY_CLT, ExperimentKind.VERIFY_CRITICAL, ExperimentKind.VERIFY_DEGENERATE):
        if f.is_zero:
            raise ValidationError("the test function must not be identically zero")


def build_config(raw: Mapping[str, tuple[str, int | None]], kind: ExperimentKind | str | None = None,
                 check_hypotheses: bool = True) -> ExperimentConfig:
    vals = {k: (v, None) for k, v in DEFAULTS.items()}
    vals.update(raw)

    def get(key, conv):
        value, line = vals[key]
        try:
            return conv(value)
        except (ValueError, DomainError, ConfigError) as exc:
            raise ParseError(f"{key}: {exc}", line) from None

    if kind is None:
        if not vals["kind"][0]:
            raise ValidationError("experiment kind is not set")
        kind = get("kind", ExperimentKind.parse)
    else:
        kind = ExperimentKind.parse(kind) if isinstance(kind, str) else kind
        if raw.get("kind") and ExperimentKind.parse(raw["kind"][0]) is not kind:
            raise ValidationError(f"config kind {raw['kind'][0]!r} does not match the requested {kind.value!r}")

    family = get("process.family", lambda s: Family(s.strip().lower()))
    H = get("process.H", parse_number)
    K = get("process.K", parse_number)
    d = get("process.d", _int)
    try:
        spec = ProcessSpec(family, H, K, d)
    except DomainError as exc:
        raise ValidationError(str(exc)) from None
    f_family = get("f", lambda s: FunctionFamily(s.strip().lower()))
    weight = get("f.weight", parse_number)
    try:
        f = TestFunction(f_family, d, weight)
    except (DomainError, ValueError, NotImplementedError) as exc:
        raise ValidationError(str(exc)) from None

    lam = get("lambda", _numbers)
    if len(lam) == 1 and d > 1:
        lam = lam * d
    if len(lam) != d:
        raise ValidationError(f"lambda needs {d} coordinates, got {len(lam)}")
    n_list = get("n_list", _numbers)
    if not n_list or min(n_list) <= 1.0:
        raise ValidationError("n_list must contain scales n > 1")
    if list(n_list) != sorted(set(n_list)):
        raise ValidationError("n_list must be strictly increasing")
    t_max = get("grid.t_max", parse_number)
    N = get("grid.N", _int)
    multiple = get("grid.multiple", parse_number)
    R = get("replications", _int)
    seed = get("seed", _int)
    threads = get("threads", _int)
    if t_max <= 0 or N < 2 or multiple <= 0:
        raise ValidationError("grid.t_max and grid.multiple must be positive and grid.N at least 2")
    if R < 2:
        raise ValidationError("replications must be at least 2")
    if seed < 0 or threads < 1:
        raise ValidationError("seed must be non-negative and threads positive")
    times = get("times", _numbers)
    if not times or any(t <= 0 or t > t_max for t in times) or list(times) != sorted(set(times)):
        raise ValidationError("times must be increasing and lie in (0, grid.t_max]")
    intervals = get("intervals", _intervals)
    prev = 0.0
    for a, b in intervals:
        if a < prev or b <= a or b > t_max:
            raise ValidationError("intervals must be ordered, disjoint and inside [0, grid.t_max]")
        prev = b
    sig_text = vals["sigma"][0].strip().lower()
    sigma = None if sig_text == "auto" else get("sigma", parse_number)
    if sigma is not None and sigma <= 0:
        raise ValidationError("sigma must be positive")
    m_vec = tuple(int(v) for v in get("moments.m", lambda s: tuple(_int(t) for t in s.split(",") if t.strip())))
    if kind is ExperimentKind.MOMENTS and len(m_vec) != len(intervals):
        raise ValidationError("moments.m needs one order per interval")
    if any(m < 1 for m in m_vec):
        raise ValidationError("moment orders must be at least 1")
    tol = {}
    for k in DEFAULT_TOLERANCES:
        tol[k] = get(f"tol.{k}", parse_number)
        if tol[k] < 0:
            raise ValidationError(f"tol.{k} must be non-negative")

    if check_hypotheses:
        _check_hypothesis(kind, spec, f)
    cfg = ExperimentConfig(
        kind=kind, spec=spec, f=f, lam=tuple(float(v) for v in lam), n_list=tuple(float(n) for n in n_list),
        t_max=float(t_max), N=int(N), replications=int(R), seed=int(seed), out=Path(vals["out"][0]),
        threads=int(threads), multiple=float(multiple), times=tuple(float(t) for t in times),
        intervals=tuple((float(a), float(b)) for a, b in intervals), sigma=sigma, m_vec=m_vec,
        k_max=get("moments.k_max", _int), moment_points=get("moments.points", _int),
        slnd_trials=get("slnd.trials", _int), slnd_m_max=get("slnd.m_max", _int),
        lambda_max=get("slnd.lambda_max", parse_number), spectral_points=get("slnd.points", _int),
        tolerances=tol,
    )
    return cfg


def parse_config(source, kind: ExperimentKind | str | None = None, overrides: Iterable[str] = ()) -> ExperimentConfig:
    """Parse a config from a path or from the text itself and validate it.

    ``overrides`` are extra ``key=value`` strings applied after the file.
    """
    if isinstance(source, Path) or (isinstance(source, str) and "=" not in source and "\n" not in source
                                    and source.strip() != ""):
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    else:
        text = source or ""
    raw: dict[str, tuple[str, int | None]] = dict(parse_text(text))
    raw.update(parse_overrides(overrides))
    return build_config(raw, kind)
