"""Experiment configuration: a flat `key = value` text format with one
dotted namespace level, parsed with line-numbered errors.

Recognized keys (see README for the full grammar):

  oracle.kind, oracle.eps, oracle.d, oracle.n, oracle.noise_std,
  oracle.seed, oracle.region_radius, oracle.data_csv
  optimizer.rule, optimizer.gamma, optimizer.beta, optimizer.compressor,
  optimizer.projection
  run.T, run.seeds, run.x0, run.full_batch, run.schedule, run.output_dir
  record.span, record.phi, record.test_loss, record.every,
  record.store_iterates
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .compressors import parse_compressor
from .optimizers import OptimizerSpec, RecordingOptions, make_schedule
from .oracles import ORACLE_KINDS, Oracle, build_oracle

GRID_LO = 1e-5
GRID_HI = 10.0
GRID_POINTS = 9


def lr_grid(lo: float = GRID_LO, hi: float = GRID_HI, points: int = GRID_POINTS) -> list[float]:
    """Log-spaced step-size grid, inclusive of both endpoints."""
    if points < 1:
        raise ValueError("points must be >= 1")
    if points == 1:
        return [float(lo)]
    return [float(g) for g in np.logspace(np.log10(lo), np.log10(hi), points)]


class ConfigError(ValueError):
    """Bad configuration; carries the offending field or line."""

    def __init__(self, message: str, field_name: str | None = None, line: int | None = None):
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if field_name is not None:
            prefix += f"field {field_name!r}: "
        super().__init__(prefix + message)
        self.field_name = field_name
        self.line = line


@dataclass
class ExperimentConfig:
    oracle_kind: str
    oracle_params: dict = field(default_factory=dict)
    oracle_seed: int = 0
    optimizer: OptimizerSpec | None = None
    T: int = 100
    seeds: list[int] = field(default_factory=lambda: [0])
    x0: str | list[float] = "zeros"
    full_batch: bool = False
    schedule: str | None = None
    output_dir: str = "out"
    record: RecordingOptions = field(default_factory=RecordingOptions)

    def validate(self):
        if self.oracle_kind not in ORACLE_KINDS:
            raise ConfigError(f"unknown oracle kind {self.oracle_kind!r}", "oracle.kind")
        if self.optimizer is None:
            raise ConfigError("missing optimizer.rule", "optimizer.rule")
        if self.T < 1:
            raise ConfigError("run.T must be >= 1", "run.T")
        if not self.seeds:
            raise ConfigError("run.seeds must be nonempty", "run.seeds")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("run.seeds must be distinct", "run.seeds")
        if self.schedule is not None:
            try:
                make_schedule(self.schedule)
            except ValueError as err:
                raise ConfigError(str(err), "run.schedule") from None
        return self

    def build_oracle(self) -> Oracle:
        return build_oracle(self.oracle_kind, seed=self.oracle_seed, **self.oracle_params)

    def resolve_x0(self, dim: int) -> np.ndarray:
        if isinstance(self.x0, str):
            if self.x0 == "zeros":
                return np.zeros(dim)
            if self.x0 == "ones":
                return np.ones(dim)
            raise ConfigError(f"bad x0 keyword {self.x0!r}", "run.x0")
        arr = np.asarray(self.x0, dtype=np.float64)
        if arr.shape[0] != dim:
            raise ConfigError(
                f"run.x0 has {arr.shape[0]} entries but the oracle dimension is {dim}", "run.x0"
            )
        return arr


_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def _parse_bool(value: str, key: str, line: int) -> bool:
    try:
        return _BOOL[value.strip().lower()]
    except KeyError:
        raise ConfigError(f"expected a boolean, got {value!r}", key, line) from None


def _parse_float(value: str, key: str, line: int) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"expected a number, got {value!r}", key, line) from None


def _parse_int(value: str, key: str, line: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"expected an integer, got {value!r}", key, line) from None


_ORACLE_FLOAT_KEYS = ("eps", "noise_std", "region_radius")
_ORACLE_INT_KEYS = ("d", "n")


def parse_config(text: str) -> ExperimentConfig:
    """Parse config text into a validated ExperimentConfig."""
    entries: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected `key = value`, got {stripped!r}", line=lineno)
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.split("#", 1)[0].strip().strip("\"'")
        if not key or not value:
            raise ConfigError("empty key or value", key or None, lineno)
        if key in entries:
            raise ConfigError("duplicate key", key, lineno)
        entries[key] = (value, lineno)

    cfg = ExperimentConfig(oracle_kind="")
    opt_kwargs: dict = {}
    for key, (value, lineno) in entries.items():
        ns, _, name = key.partition(".")
        if ns == "oracle":
            if name == "kind":
                cfg.oracle_kind = value
            elif name == "seed":
                cfg.oracle_seed = _parse_int(value, key, lineno)
            elif name in _ORACLE_FLOAT_KEYS:
                cfg.oracle_params[name] = _parse_float(value, key, lineno)
            elif name in _ORACLE_INT_KEYS:
                cfg.oracle_params[name] = _parse_int(value, key, lineno)
            elif name == "data_csv":
                cfg.oracle_params.update(_load_lsq_csv(value, key, lineno))
            else:
                raise ConfigError("unknown key", key, lineno)
        elif ns == "optimizer":
            if name == "rule":
                opt_kwargs["rule"] = value
            elif name == "gamma":
                opt_kwargs["gamma"] = _parse_float(value, key, lineno)
            elif name == "beta":
                opt_kwargs["beta"] = _parse_float(value, key, lineno)
            elif name == "compressor":
                try:
                    opt_kwargs["compressor"] = parse_compressor(value)
                except ValueError as err:
                    raise ConfigError(str(err), key, lineno) from None
            elif name == "projection":
                if value != "none":
                    parts = value.split(":")
                    if len(parts) != 3 or parts[0] != "box":
                        raise ConfigError(
                            f"expected `box:LO:HI` or `none`, got {value!r}", key, lineno
                        )
                    opt_kwargs["projection"] = (
                        _parse_float(parts[1], key, lineno),
                        _parse_float(parts[2], key, lineno),
                    )
            else:
                raise ConfigError("unknown key", key, lineno)
        elif ns == "run":
            if name == "T":
                cfg.T = _parse_int(value, key, lineno)
            elif name == "seeds":
                try:
                    cfg.seeds = [int(tok) for tok in value.split(",") if tok.strip()]
                except ValueError:
                    raise ConfigError(f"expected comma-separated integers, got {value!r}",
                                      key, lineno) from None
            elif name == "x0":
                if value in ("zeros", "ones"):
                    cfg.x0 = value
                else:
                    try:
                        cfg.x0 = [float(tok) for tok in value.split(",") if tok.strip()]
                    except ValueError:
                        raise ConfigError(f"expected `zeros`, `ones` or comma-separated numbers, "
                                          f"got {value!r}", key, lineno) from None
            elif name == "full_batch":
                cfg.full_batch = _parse_bool(value, key, lineno)
            elif name == "schedule":
                cfg.schedule = None if value == "constant" else value
            elif name == "output_dir":
                cfg.output_dir = value
            else:
                raise ConfigError("unknown key", key, lineno)
        elif ns == "record":
            rec = {
                "span": cfg.record.span,
                "phi": cfg.record.phi,
                "test_loss": cfg.record.test_loss,
                "every": cfg.record.every,
                "store_iterates": cfg.record.store_iterates,
                "store_gradients": cfg.record.store_gradients,
            }
            if name in ("span", "phi", "test_loss", "store_iterates"):
                rec[name] = _parse_bool(value, key, lineno)
            elif name == "every":
                rec["every"] = _parse_int(value, key, lineno)
            else:
                raise ConfigError("unknown key", key, lineno)
            try:
                cfg.record = RecordingOptions(**rec)
            except ValueError as err:
                raise ConfigError(str(err), key, lineno) from None
        else:
            raise ConfigError(f"unknown namespace {ns!r}", key, lineno)

    if not cfg.oracle_kind:
        raise ConfigError("missing oracle.kind", "oracle.kind")
    if "rule" not in opt_kwargs:
        raise ConfigError("missing optimizer.rule", "optimizer.rule")
    if "gamma" not in opt_kwargs:
        raise ConfigError("missing optimizer.gamma", "optimizer.gamma")
    try:
        cfg.optimizer = OptimizerSpec(**opt_kwargs)
    except ValueError as err:
        raise ConfigError(str(err), "optimizer") from None
    env_seed = os.environ.get("EF_LAB_SEED")
    if env_seed:
        try:
            cfg.seeds = [int(tok) for tok in env_seed.split(",") if tok.strip()]
        except ValueError:
            raise ConfigError(
                f"EF_LAB_SEED must be comma-separated integers, got {env_seed!r}", "run.seeds"
            ) from None
    return cfg.validate()


def _load_lsq_csv(path: str, key: str, lineno: int) -> dict:
    """Load a generic least-squares design from CSV; last column is y."""
    if not os.path.exists(path):
        raise ConfigError(f"file not found: {path}", key, lineno)
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    if data.shape[1] < 2:
        raise ConfigError("need at least one feature column plus a label column", key, lineno)
    return {"matrix": data[:, :-1], "labels": data[:, -1]}


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
