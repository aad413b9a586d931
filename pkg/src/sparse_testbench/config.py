"""Declarative experiment configs: one TOML file per experiment.

A config pins everything a run needs: the design family, the asymptotic
regime, the test menu with parameter overrides, the p grid, the replication
count, and a mandatory seed (reproducibility over convenience; there is no
wall-clock default).  Serialization is deterministic, so the config hash
changes exactly when the config changes and parse -> serialize -> parse is
the identity.
"""
from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .designs import FAMILIES
from .signals import NRule, RegimeSpec, SIGN_MODES, default_n_rule
from .rules import TEST_NAMES, TestSpec, build_test

_ID_PATTERN = re.compile(r"^[A-Za-z0-9._-]+$")
_TEST_OPTION_KEYS = ("t", "tau", "tau_ols", "tau_p", "sign_mode", "label", "members")


class ConfigError(ValueError):
    """Malformed or schema-invalid experiment configuration."""


@dataclass(frozen=True)
class TestConfig:
    __test__ = False  # not a pytest collection target
    name: str
    options: tuple = ()  # ((key, value), ...)

    def option_dict(self) -> dict:
        return dict(self.options)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment_id: str
    design_family: str
    regime: RegimeSpec
    tests: tuple
    p_grid: tuple
    reps: int
    seed: int
    output_dir: str
    prior_sign_mode: str = "one_directional"


def _require(table: dict, key: str, kind, where: str):
    if key not in table:
        raise ConfigError(f"missing key {key!r} in {where}")
    val = table[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kind) or isinstance(val, bool) and kind is not bool:
        raise ConfigError(f"{where}.{key} must be {kind.__name__}, got {type(val).__name__}")
    return val


def _parse_regime(table: dict, design_family: str) -> RegimeSpec:
    alpha = _require(table, "alpha", float, "regime")
    mode = _require(table, "signal_mode", str, "regime")
    kwargs = {}
    if "r" in table:
        kwargs["r"] = float(table["r"])
    if "delta" in table:
        kwargs["delta"] = float(table["delta"])
    if "fixed_s" in table:
        kwargs["fixed_s"] = int(table["fixed_s"])
    if "n_rule" in table:
        nr = table["n_rule"]
        n_rule = NRule(
            c=float(nr.get("c", 1.0)),
            gamma=float(nr.get("gamma", 1.0)),
            kappa=float(nr.get("kappa", 0.0)),
        )
    else:
        n_rule = default_n_rule(design_family)
    try:
        return RegimeSpec(alpha=alpha, signal_mode=mode, n_rule=n_rule, **kwargs)
    except ValueError as exc:
        raise ConfigError(f"invalid regime: {exc}") from exc


def _parse_test(entry: dict, index: int) -> TestConfig:
    where = f"tests[{index}]"
    name = _require(entry, "name", str, where)
    if name not in TEST_NAMES:
        raise ConfigError(f"{where}: unknown test name {name!r}")
    options = []
    for key, val in entry.items():
        if key == "name":
            continue
        if key not in _TEST_OPTION_KEYS:
            raise ConfigError(f"{where}: unknown option {key!r}")
        if key == "members":
            if not isinstance(val, list) or not all(isinstance(v, str) for v in val):
                raise ConfigError(f"{where}.members must be a list of test names")
            val = tuple(val)
        options.append((key, val))
    return TestConfig(name=name, options=tuple(sorted(options)))


def parse_config(text: str) -> ExperimentConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error: {exc}") from exc
    exp_id = _require(data, "experiment_id", str, "config")
    if not _ID_PATTERN.match(exp_id):
        raise ConfigError(
            f"experiment_id {exp_id!r} must match {_ID_PATTERN.pattern} (filesystem-safe)"
        )
    family = _require(data, "design_family", str, "config")
    if family not in FAMILIES:
        raise ConfigError(f"design_family must be one of {FAMILIES}")
    p_grid = _require(data, "p_grid", list, "config")
    if not p_grid or not all(isinstance(p, int) and not isinstance(p, bool) for p in p_grid):
        raise ConfigError("p_grid must be a nonempty list of integers")
    if any(b <= a for a, b in zip(p_grid, p_grid[1:])):
        raise ConfigError("p_grid must be strictly increasing")
    if min(p_grid) < 2:
        raise ConfigError("p_grid entries must be >= 2")
    reps = _require(data, "reps", int, "config")
    if reps < 100:
        raise ConfigError(f"reps must be >= 100, got {reps}")
    seed = _require(data, "seed", int, "config")
    output_dir = _require(data, "output_dir", str, "config")
    sign_mode = data.get("prior_sign_mode", "one_directional")
    if sign_mode not in SIGN_MODES:
        raise ConfigError(f"prior_sign_mode must be one of {SIGN_MODES}")
    if "regime" not in data or not isinstance(data["regime"], dict):
        raise ConfigError("missing [regime] table")
    regime = _parse_regime(data["regime"], family)
    tests_raw = data.get("tests")
    if not isinstance(tests_raw, list) or not tests_raw:
        raise ConfigError("config needs at least one [[tests]] entry")
    tests = tuple(_parse_test(entry, i) for i, entry in enumerate(tests_raw))
    return ExperimentConfig(
        experiment_id=exp_id,
        design_family=family,
        regime=regime,
        tests=tests,
        p_grid=tuple(p_grid),
        reps=reps,
        seed=seed,
        output_dir=output_dir,
        prior_sign_mode=sign_mode,
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def _toml_value(val) -> str:
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, int):
        return str(val)
    if isinstance(val, float):
        if not math.isfinite(val):
            raise ConfigError("config floats must be finite")
        return repr(val)
    if isinstance(val, str):
        return json.dumps(val)
    if isinstance(val, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in val) + "]"
    raise ConfigError(f"cannot serialize {type(val).__name__} into config")


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = [
        f"experiment_id = {_toml_value(cfg.experiment_id)}",
        f"design_family = {_toml_value(cfg.design_family)}",
        f"p_grid = {_toml_value(list(cfg.p_grid))}",
        f"reps = {cfg.reps}",
        f"seed = {cfg.seed}",
        f"output_dir = {_toml_value(cfg.output_dir)}",
        f"prior_sign_mode = {_toml_value(cfg.prior_sign_mode)}",
        "",
        "[regime]",
        f"alpha = {_toml_value(cfg.regime.alpha)}",
        f"signal_mode = {_toml_value(cfg.regime.signal_mode)}",
    ]
    if cfg.regime.r is not None:
        lines.append(f"r = {_toml_value(float(cfg.regime.r))}")
    if cfg.regime.delta is not None:
        lines.append(f"delta = {_toml_value(float(cfg.regime.delta))}")
    if cfg.regime.fixed_s is not None:
        lines.append(f"fixed_s = {cfg.regime.fixed_s}")
    lines += [
        "",
        "[regime.n_rule]",
        f"c = {_toml_value(cfg.regime.n_rule.c)}",
        f"gamma = {_toml_value(cfg.regime.n_rule.gamma)}",
        f"kappa = {_toml_value(cfg.regime.n_rule.kappa)}",
    ]
    for test in cfg.tests:
        lines += ["", "[[tests]]", f"name = {_toml_value(test.name)}"]
        for key, val in test.options:
            if key == "members":
                lines.append(f"{key} = {_toml_value(list(val))}")
            else:
                lines.append(f"{key} = {_toml_value(val)}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(serialize_config(cfg).encode("utf-8")).hexdigest()


def build_config_tests(cfg: ExperimentConfig, p: int) -> list[TestSpec]:
    """Materialize the config's test menu at dimension p."""
    specs = []
    for tc in cfg.tests:
        opts = tc.option_dict()
        members = opts.pop("members", None)
        if tc.name == "bonferroni":
            if not members:
                raise ConfigError("bonferroni test needs a members list")
            built = tuple(build_test(m, cfg.regime, p) for m in members)
            label = opts.pop("label", "") or "bonferroni(" + "+".join(members) + ")"
            specs.append(build_test("bonferroni", cfg.regime, p, members=built, label=label))
        else:
            if members:
                raise ConfigError(f"test {tc.name!r} does not take members")
            specs.append(build_test(tc.name, cfg.regime, p, **opts))
    return specs
