"""Experiment specifications and their text encodings.

A spec file is either flat ``key = value`` text (``#`` starts a comment,
dotted keys for nesting) or a JSON document, nested or with dotted keys::

    group.type = mu
    group.d = 2
    group.n = 8
    noise.type = depolarize
    noise.p = 0.9
    m_values = 1..40
    M = 1000
    repetitions = 20
    output.csv = results.csv

Values are read as JSON when possible, so ``[1, 2, 5]``, ``true`` and
``"text"`` work; ``a..b`` is the inclusive integer range and ``1, 2, 5`` a
plain list.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, fields
from pathlib import Path

from .channels import DENSE_DIM_CAP, NOISE_KINDS
from .errors import ConfigError, InfeasibleSizeError
from .groups import CliffordGroup, MonomialGroup

PROTOCOLS = {"standard": "exact_haar", "approx": "walk", "generator": "generator"}
# the sampling-mode names are accepted as protocol names as well
PROTOCOLS.update({v: v for v in list(PROTOCOLS.values())})
MAX_QUBITS = 6


@dataclass
class ExperimentSpec:
    group_type: str = "mu"
    d: int | None = None
    n: int = 8
    qubits: int | None = None
    noise_type: str = "depolarize"
    p: float = 0.9
    delta: float = 0.0
    a: float = 0.1
    protocol: str = "standard"
    m_values: list = field(default_factory=lambda: list(range(1, 21)))
    M: int = 100
    b: int = 5
    walk_length: int = 20
    repetitions: int = 1
    master_seed: int = 0
    fit_order: int | None = None
    isolate: bool = False
    p_values: list = field(default_factory=list)
    modes: list = field(default_factory=lambda: ["standard", "approx", "generator"])
    workers: int = 1
    output_csv: str | None = None
    output_json: str | None = None
    output_figure: str | None = None

    @property
    def sampling(self) -> str:
        return PROTOCOLS[self.protocol]

    @property
    def dim(self) -> int:
        return self.d if self.group_type == "mu" else 2 ** self.qubits

    def build_group(self):
        if self.group_type == "mu":
            return MonomialGroup(self.d, self.n)
        return CliffordGroup(self.qubits)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            out[_FIELD_TO_KEY.get(f.name, f.name)] = getattr(self, f.name)
        return out

    def validate(self) -> "ExperimentSpec":
        if self.group_type not in ("mu", "clifford"):
            raise ConfigError(f"group.type must be 'mu' or 'clifford', got {self.group_type!r}")
        if self.group_type == "mu":
            if self.d is None or self.d < 2:
                raise ConfigError(f"group.d must be at least 2 for MU groups, got {self.d}")
            if self.n < 3:
                raise ConfigError(f"group.n must be at least 3, got {self.n}")
        else:
            if self.qubits is None or self.qubits < 1:
                raise ConfigError(f"group.qubits must be at least 1 for Clifford groups, got {self.qubits}")
            if self.qubits > MAX_QUBITS:
                raise InfeasibleSizeError(
                    f"{self.qubits} qubits exceeds the dense simulation cap of {MAX_QUBITS} qubits",
                    cap=MAX_QUBITS,
                )
        if self.dim > DENSE_DIM_CAP:
            raise InfeasibleSizeError(
                f"dimension {self.dim} exceeds the dense cap d <= {DENSE_DIM_CAP}; "
                "lower group.d or group.qubits",
                cap=DENSE_DIM_CAP,
            )
        if self.noise_type not in NOISE_KINDS:
            raise ConfigError(f"noise.type must be one of {', '.join(NOISE_KINDS)}, got {self.noise_type!r}")
        if not 0 <= self.p <= 1:
            raise ConfigError(f"noise.p must lie in [0, 1], got {self.p}")
        if not 0 <= self.delta <= 1:
            raise ConfigError(f"noise.delta must lie in [0, 1], got {self.delta}")
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of standard, approx, generator, got {self.protocol!r}")
        if not self.m_values or min(self.m_values) < 1:
            raise ConfigError("m_values must be a nonempty list of positive lengths")
        if len(set(self.m_values)) != len(self.m_values):
            raise ConfigError("m_values contains duplicates")
        if self.M < 1:
            raise ConfigError(f"M must be at least 1, got {self.M}")
        if self.b < 1:
            raise ConfigError(f"b must be at least 1, got {self.b}")
        if self.walk_length < 1:
            raise ConfigError(f"walk_length must be at least 1, got {self.walk_length}")
        if self.repetitions < 1:
            raise ConfigError(f"repetitions must be at least 1, got {self.repetitions}")
        if self.fit_order not in (None, 1, 2):
            raise ConfigError(f"fit.order must be 1 or 2, got {self.fit_order}")
        if self.fit_order == 2 and self.group_type == "clifford":
            raise ConfigError("Clifford decays have a single rate; fit.order = 2 does not apply")
        if self.isolate and self.group_type != "mu":
            raise ConfigError("isolate only applies to MU groups")
        for mode in self.modes:
            if mode not in PROTOCOLS:
                raise ConfigError(f"unknown mode {mode!r} in modes")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")
        for path in (self.output_csv, self.output_json, self.output_figure):
            if path is not None and not Path(path).resolve().parent.is_dir():
                raise ConfigError(f"output directory for {path!r} does not exist")
        return self


# key in the file -> (field name, coercion)
def _int_list(v):
    if isinstance(v, (int, float)):
        v = [v]
    return [int(x) for x in v]


def _float_list(v):
    if isinstance(v, (int, float)):
        v = [v]
    return [float(x) for x in v]


def _str_list(v):
    if isinstance(v, str):
        v = [s.strip() for s in v.split(",") if s.strip()]
    return [str(x) for x in v]


def _bool(v):
    if isinstance(v, bool):
        return v
    if str(v).lower() in ("1", "yes", "on", "true"):
        return True
    if str(v).lower() in ("0", "no", "off", "false"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _int(v):
    if isinstance(v, float) and not v.is_integer():
        raise ValueError(f"not an integer: {v!r}")
    if isinstance(v, bool):
        raise ValueError(f"not an integer: {v!r}")
    return int(v)


def _opt_int(v):
    return None if v in (None, "none", "auto") else _int(v)


KEYS = {
    "group.type": ("group_type", lambda v: str(v).lower()),
    "group.d": ("d", _int),
    "group.n": ("n", _int),
    "group.qubits": ("qubits", _int),
    "noise.type": ("noise_type", str),
    "noise.p": ("p", float),
    "noise.delta": ("delta", float),
    "noise.a": ("a", float),
    "protocol": ("protocol", str),
    "m_values": ("m_values", _int_list),
    "M": ("M", _int),
    "b": ("b", _int),
    "walk_length": ("walk_length", _int),
    "repetitions": ("repetitions", _int),
    "master_seed": ("master_seed", _int),
    "fit.order": ("fit_order", _opt_int),
    "isolate": ("isolate", _bool),
    "p_values": ("p_values", _float_list),
    "modes": ("modes", _str_list),
    "workers": ("workers", _int),
    "output.csv": ("output_csv", str),
    "output.json": ("output_json", str),
    "output.figure": ("output_figure", str),
}
_FIELD_TO_KEY = {name: key for key, (name, _) in KEYS.items()}

_RANGE = re.compile(r"^\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*$")


def parse_value(text: str):
    text = text.strip()
    m = _RANGE.match(text)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        if hi < lo:
            raise ValueError(f"empty range {text!r}")
        return list(range(lo, hi + 1))
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    if "," in text:
        return [parse_value(part) for part in text.split(",") if part.strip()]
    return text


def _apply(values: dict, where: dict) -> ExperimentSpec:
    kwargs = {}
    for key, raw in values.items():
        if key not in KEYS:
            raise ConfigError(f"{where[key]}: unknown key {key!r}; valid keys: {', '.join(KEYS)}")
        name, coerce = KEYS[key]
        try:
            kwargs[name] = coerce(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where[key]}: bad value for {key}: {exc}") from None
    return ExperimentSpec(**kwargs).validate()


def _flatten(obj: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in obj.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def parse_spec_text(text: str, source: str = "<config>") -> ExperimentSpec:
    """Parse either encoding; JSON is detected by a leading brace."""
    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}:{exc.lineno}: invalid JSON: {exc.msg}") from None
        values = _flatten(doc)
        return _apply(values, {k: f"{source}: key {k}" for k in values})
    values, where = {}, {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = parse_value(raw)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
        where[key] = f"{source}:{lineno}"
    return _apply(values, where)


def load_spec(path) -> ExperimentSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_spec_text(text, str(path))


def spec_to_text(spec: ExperimentSpec) -> str:
    lines = []
    for key, value in spec.to_dict().items():
        if value is None:
            continue
        lines.append(f"{key} = {json.dumps(value)}")
    return "\n".join(lines) + "\n"

