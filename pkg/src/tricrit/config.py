"""Sweep configuration: a JSON-serializable description of one run or a scan of runs."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
import hashlib
import json

from .errors import ConfigError
from .schedules import RampSpec, path_from_dict

ENGINES = ("gaussian", "fock", "analytic")
OUTPUTS = ("qfi", "snr", "trajectory", "fits")
SCAN_FIELDS = ("delta", "k", "eta", "beta", "endpoint", "n_max")


@dataclass(frozen=True)
class SweepConfig:
    preset: str = "main"
    path: dict = field(default_factory=lambda: {"variant": "StraightLine", "k": 2.0})
    ramp: dict = field(default_factory=lambda: {"delta": 1e-3})
    start: float | None = None
    endpoint: float | None = None
    n_samples: int = 121
    outputs: tuple = ("qfi", "fits")
    engine: str = "gaussian"
    n_max: int = 120
    dissipation: dict | None = None
    fit: dict | None = None
    scan: dict | None = None
    overrides: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "outputs", tuple(self.outputs))
        if self.engine not in ENGINES:
            raise ConfigError(f"engine must be one of {ENGINES}")
        bad = set(self.outputs) - set(OUTPUTS)
        if bad:
            raise ConfigError(f"unknown outputs {sorted(bad)}")
        if not (isinstance(self.n_samples, int) and self.n_samples >= 2):
            raise ConfigError("n_samples must be an integer >= 2")
        if self.scan is not None:
            if set(self.scan) != {"field", "values"} or self.scan["field"] not in SCAN_FIELDS:
                raise ConfigError(f"scan needs 'field' in {SCAN_FIELDS} and a 'values' list")
            if len(self.scan["values"]) == 0:
                raise ConfigError("scan values must be non-empty")
        if self.dissipation is not None:
            extra = set(self.dissipation) - {"kappa_p", "kappa_a", "mode", "omega_step", "richardson"}
            if extra:
                raise ConfigError(f"unknown dissipation keys {sorted(extra)}")
        # fail early on malformed physics specs
        self.path_spec()
        self.ramp_spec()

    def path_spec(self):
        return path_from_dict(self.path)

    def ramp_spec(self):
        try:
            return RampSpec(**self.ramp)
        except TypeError as e:
            raise ConfigError(f"bad ramp: {e}") from None
        except ValueError as e:
            raise ConfigError(f"bad ramp: {e}") from None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["outputs"] = list(self.outputs)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "SweepConfig":
        try:
            with open(path) as fh:
                d = json.load(fh)
        except OSError as e:
            raise ConfigError(f"cannot read config: {e}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON: {e}") from None
        return cls.from_dict(d)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]

    def cells(self) -> list:
        """Expand the scan into (value, config) cells in declaration order."""
        if self.scan is None:
            return [(None, self)]
        out = []
        fld = self.scan["field"]
        for v in self.scan["values"]:
            out.append((v, _apply(self, fld, v)))
        return out


def _apply(cfg: SweepConfig, fld: str, v) -> SweepConfig:
    if fld == "delta":
        return replace(cfg, ramp={**cfg.ramp, "delta": float(v)}, scan=None)
    if fld in ("k", "eta", "beta"):
        if fld not in cfg.path_spec().__dataclass_fields__:
            raise ConfigError(f"path {cfg.path.get('variant')} has no parameter {fld}")
        return replace(cfg, path={**cfg.path, fld: float(v)}, scan=None)
    if fld == "endpoint":
        return replace(cfg, endpoint=float(v), scan=None)
    return replace(cfg, n_max=int(v), scan=None)
