"""
Experiment harness
Typed experiment configs, dispatch to the solvers and simulators, and
CSV + JSON result tables
"""

import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from . import __version__
from .asymptotic import (joint_gain, map_to_finite, solve_comm_only, solve_joint, solve_search_only, switching_threshold,
                         weighted_solve)
from .errors import ConfigError
from .finite_sim import (GapMode, SimConfig, convergence_sweep, finite_sweep, optimize_policy, payoff_grid,
                         weighted_payoff)
from .directional import rho_from_kappa
from .hparams import hparams as hp
from .policies import ScaledCosts
from .tilted import compare_tilt, solve_tilted

logger = logging.getLogger(__name__)


class ExperimentKind(Enum):
    ASYMPTOTIC_SOLVE = "AsymptoticSolve"
    ASYMPTOTIC_HEATMAP = "AsymptoticHeatmap"
    TILTED_SOLVE = "TiltedSolve"
    TILTED_COMPARE = "TiltedCompare"
    FINITE_SWEEP = "FiniteSweep"
    GAP_SWEEP = "GapSweep"
    WEIGHTED_SOLVE = "WeightedSolve"
    SIMULATE = "Simulate"
    OPTIMIZE = "Optimize"
    SWITCHING_CURVE = "SwitchingCurve"


class SwitchingMode(Enum):
    POSTERIOR = "Posterior"
    TILTED = "Tilted"


# ------------------------------
# PARAMETER PARSING
# ------------------------------
def _split(value: str) -> List[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def _to_floats(value) -> List[float]:
    if isinstance(value, str):
        if value.count(":") == 2:
            start, stop, count = value.split(":")
            return np.linspace(float(start), float(stop), int(count)).tolist()
        return [float(item) for item in _split(value)]
    if isinstance(value, (list, tuple)):
        return [float(item) for item in value]
    return [float(value)]


def _to_ints(value) -> List[int]:
    items = _split(value) if isinstance(value, str) else value if isinstance(value, (list, tuple)) else [value]
    out = []
    for item in items:
        number = float(item)
        if number != int(number):
            raise ValueError(f"{item!r} is not an integer")
        out.append(int(number))
    return out


def _to_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("true", "1", "yes", "on"):
        return True
    if text in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"{value!r} is not a boolean")


def _to_float(value) -> float:
    items = _to_floats(value)
    if len(items) != 1:
        raise ValueError(f"expected one number, got {len(items)}")
    return items[0]


def _to_int(value) -> int:
    items = _to_ints(value)
    if len(items) != 1:
        raise ValueError(f"expected one integer, got {len(items)}")
    return items[0]


REQUIRED = object()

_PROGRESS = {"progress": (_to_bool, False)}
_COMMON = {
    "seed": (_to_int, hp.seed),
    "replications": (_to_int, hp.replications),
    "max_n": (_to_int, hp.max_n),
    "workers": (_to_int, hp.workers),
    **_PROGRESS,
}

SCHEMAS: Dict[ExperimentKind, Dict[str, Tuple[Callable, Any]]] = {
    ExperimentKind.ASYMPTOTIC_SOLVE: {"c_s": (_to_floats, REQUIRED), "c_c": (_to_floats, REQUIRED),
                                      "dim": (_to_int, 0), **_PROGRESS},
    ExperimentKind.ASYMPTOTIC_HEATMAP: {"c_s": (_to_floats, REQUIRED), "c_c": (_to_floats, REQUIRED),
                                        "gain": (_to_bool, False), **_PROGRESS},
    ExperimentKind.TILTED_SOLVE: {"c_s": (_to_floats, REQUIRED), "c_c": (_to_floats, REQUIRED), **_PROGRESS},
    ExperimentKind.TILTED_COMPARE: {"c_s": (_to_floats, REQUIRED), "c_c": (_to_floats, REQUIRED), **_PROGRESS},
    ExperimentKind.FINITE_SWEEP: {"c_s": (_to_float, REQUIRED), "c_c": (_to_floats, REQUIRED),
                                  "dims": (_to_ints, REQUIRED), **_COMMON},
    ExperimentKind.GAP_SWEEP: {"c_s": (_to_float, REQUIRED), "c_c": (_to_float, REQUIRED),
                               "dims": (_to_ints, REQUIRED), "mode": (str, GapMode.JOINT.value), **_COMMON},
    ExperimentKind.WEIGHTED_SOLVE: {"mu": (_to_float, REQUIRED), "d1": (_to_int, REQUIRED), "d2": (_to_int, REQUIRED),
                                    "lambda_s": (_to_float, REQUIRED), "lambda_1c": (_to_float, REQUIRED),
                                    "lambda_2c": (_to_float, REQUIRED), "simulate": (_to_bool, False), **_COMMON},
    ExperimentKind.SIMULATE: {"dim": (_to_int, REQUIRED), "kappa": (_to_floats, REQUIRED), "n": (_to_ints, REQUIRED),
                              "lambda_s": (_to_float, 0.0), "lambda_c": (_to_float, 0.0), **_COMMON},
    ExperimentKind.OPTIMIZE: {"dim": (_to_int, REQUIRED), "c_s": (_to_floats, REQUIRED),
                              "c_c": (_to_floats, REQUIRED), **_COMMON},
    ExperimentKind.SWITCHING_CURVE: {"c_s": (_to_floats, REQUIRED), "mode": (str, SwitchingMode.POSTERIOR.value),
                                      **_PROGRESS},
}


def _check(condition: bool, key: str, message: str):
    if not condition:
        raise ConfigError(f"{key}: {message}", key=key)


def _read_pairs(path: Union[str, Path]) -> Dict[str, str]:
    pairs = {}
    with open(path, "r", encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{number}: expected 'key = value'", line=number)
            key, value = line.split("=", 1)
            pairs[key.strip()] = value.strip()
    return pairs


@dataclass
class ExperimentConfig:
    kind: ExperimentKind
    parameters: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_file(cls, path: Union[str, Path], kind: Optional[ExperimentKind] = None,
                  overrides: Optional[Dict[str, Any]] = None) -> "ExperimentConfig":
        """File values over per-kind defaults, `overrides` over both."""
        try:
            pairs = _read_pairs(path)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}", key="config") from exc
        file_kind = pairs.pop("kind", None)
        if kind is None:
            _check(file_kind is not None, "kind", "missing from config file")
            kind = _parse_kind(file_kind)
        pairs.update(overrides or {})
        return cls(kind, pairs)

    @classmethod
    def from_metadata(cls, path: Union[str, Path]) -> "ExperimentConfig":
        """Rebuild the config echoed in a result table's JSON sidecar."""
        with open(path, "r", encoding="utf-8") as f:
            meta = json.load(f)
        return cls(_parse_kind(meta["kind"]), dict(meta["parameters"]))

    def validate(self) -> "ExperimentConfig":
        """Typed copy with defaults filled in; raises ConfigError naming the offending key."""
        schema = SCHEMAS[self.kind]
        unknown = sorted(set(self.parameters) - set(schema))
        _check(not unknown, unknown[0] if unknown else "", f"unknown key for {self.kind.value}")
        typed = {}
        for key, (convert, default) in schema.items():
            if key not in self.parameters:
                _check(default is not REQUIRED, key, f"required for {self.kind.value}")
                typed[key] = default
                continue
            try:
                typed[key] = convert(self.parameters[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{key}: {exc}", key=key) from exc
        _validate_ranges(self.kind, typed)
        return ExperimentConfig(self.kind, typed)


def _parse_kind(text: str) -> ExperimentKind:
    try:
        return ExperimentKind(text)
    except ValueError:
        raise ConfigError(f"unknown experiment kind {text!r}", key="kind") from None


def _validate_ranges(kind: ExperimentKind, p: Dict[str, Any]):
    for key in ("c_s", "c_c"):
        if key in p:
            values = p[key] if isinstance(p[key], list) else [p[key]]
            _check(len(values) > 0, key, "empty list")
            _check(all(0.0 < v < math.inf for v in values), key, "costs must be positive and finite")
    for key in ("dim", "d1", "d2"):
        if key in p and not (key == "dim" and kind is ExperimentKind.ASYMPTOTIC_SOLVE and p[key] == 0):
            _check(p[key] >= 4, key, "dimension must be >= 4")
    if "dims" in p:
        _check(len(p["dims"]) > 0 and all(d >= 4 for d in p["dims"]), "dims", "dimensions must be >= 4")
    if "replications" in p:
        _check(p["replications"] >= hp.min_reported_replications, "replications",
               f"at least {hp.min_reported_replications} replications are required")
        _check(0 <= p["seed"] < 2**64, "seed", "must be an unsigned 64-bit integer")
        _check(1 <= p["max_n"] <= hp.max_set_size, "max_n", f"must lie in [1, {hp.max_set_size}]")
        _check(p["workers"] >= 1, "workers", "must be >= 1")
    if "mu" in p:
        _check(0.0 < p["mu"] < 1.0, "mu", "must lie strictly between 0 and 1")
    for key in ("lambda_s", "lambda_c", "lambda_1c", "lambda_2c"):
        if key in p:
            _check(p[key] >= 0.0, key, "costs must be nonnegative")
    if kind is ExperimentKind.SIMULATE:
        _check(all(k >= 0.0 for k in p["kappa"]), "kappa", "precisions must be >= 0")
        _check(all(1 <= n <= p["max_n"] for n in p["n"]), "n", "set sizes must lie in [1, max_n]")
    if kind is ExperimentKind.GAP_SWEEP:
        _check(p["mode"] in {m.value for m in GapMode}, "mode", "must be Joint, SearchOnly or CommOnly")
    if kind is ExperimentKind.SWITCHING_CURVE:
        _check(p["mode"] in {m.value for m in SwitchingMode}, "mode", "must be Posterior or Tilted")
        _check(p["c_s"] == sorted(p["c_s"]), "c_s", "grid must be sorted")


# ------------------------------
# RESULT TABLES
# ------------------------------
@dataclass
class ResultTable:
    header: List[str]
    rows: List[Tuple[Any, ...]]
    metadata: Dict[str, Any]

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.header):
                raise ValueError(f"row has {len(row)} entries, header has {len(self.header)}")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=self.header)

    def write(self, out: Union[str, Path]) -> Tuple[Path, Path]:
        """CSV at `out` (repr floats, so values parse back exactly) and a JSON sidecar."""
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(out, index=False, lineterminator="\n", encoding="utf-8")
        sidecar = out.with_suffix(".json")
        with open(sidecar, "w", encoding="utf-8") as f:
            json.dump(self.metadata, f, indent=2, sort_keys=True)
            f.write("\n")
        return out, sidecar


def _metadata(config: ExperimentConfig) -> Dict[str, Any]:
    return {"kind": config.kind.value, "parameters": config.parameters, "version": __version__,
            "seed": config.parameters.get("seed")}


def _sim_config(p: Dict[str, Any], dim: int) -> SimConfig:
    return SimConfig(dim=dim, replications=p["replications"], seed=p["seed"], max_n=p["max_n"],
                     workers=p["workers"], show_progress=p["progress"])


def _cost_grid(p: Dict[str, Any]) -> List[ScaledCosts]:
    return [ScaledCosts(c_s, c_c) for c_s, c_c in product(p["c_s"], p["c_c"])]


def _cells(p: Dict[str, Any], items: Sequence, label: str):
    return tqdm(items, desc=label, disable=not p.get("progress", False))


# ------------------------------
# EXPERIMENTS
# ------------------------------
def _asymptotic_solve(p):
    header = ["c_s", "c_c", "rho_star", "alpha_star", "value", "regime"]
    if p["dim"]:
        header += ["kappa", "n"]
    rows = []
    for costs in _cells(p, _cost_grid(p), "solve"):
        sol = solve_joint(costs)
        row = (costs.c_s, costs.c_c, sol.policy.rho, sol.policy.alpha, sol.value, sol.regime.value)
        if p["dim"]:
            mapped = map_to_finite(sol.policy, p["dim"])
            row += (mapped.kappa, mapped.n)
        rows.append(row)
    return header, rows


def _heatmap(p):
    header = ["c_s", "c_c", "rho_star", "alpha_star", "value", "regime"]
    if p["gain"]:
        header += ["opt_search", "opt_comm", "joint_gain"]
    rows = []
    for costs in _cells(p, _cost_grid(p), "heatmap"):
        sol = solve_joint(costs)
        row = (costs.c_s, costs.c_c, sol.policy.rho, sol.policy.alpha, sol.value, sol.regime.value)
        if p["gain"]:
            row += (solve_search_only(costs.c_s)[1], solve_comm_only(costs.c_c)[1], joint_gain(costs, sol))
        rows.append(row)
    return header, rows


def _tilted_solve(p):
    header = ["c_s", "c_c", "rho_star", "alpha_star", "v_star", "value", "regime"]
    rows = []
    for costs in _cells(p, _cost_grid(p), "tilted"):
        sol = solve_tilted(costs)
        rows.append((costs.c_s, costs.c_c, sol.policy.rho, sol.policy.alpha, sol.policy.v, sol.value,
                     sol.regime.value))
    return header, rows


def _tilted_compare(p):
    header = ["c_s", "c_c", "posterior_rho", "posterior_alpha", "posterior_value", "posterior_regime",
              "tilted_rho", "tilted_alpha", "tilted_v", "tilted_value", "tilted_regime", "improvement"]
    rows = []
    for costs in _cells(p, _cost_grid(p), "compare"):
        cmp = compare_tilt(costs)
        post, tilt = cmp.posterior, cmp.tilted
        rows.append((costs.c_s, costs.c_c, post.policy.rho, post.policy.alpha, post.value, post.regime.value,
                     tilt.policy.rho, tilt.policy.alpha, tilt.policy.v, tilt.value, tilt.regime.value,
                     cmp.improvement))
    return header, rows


def _simulate(p):
    header = ["kappa", "n", "mean", "std_error", "utility", "search_cost", "comm_cost"]
    cfg = _sim_config(p, p["dim"])
    cells = payoff_grid(p["lambda_s"], p["lambda_c"], cfg, p["kappa"], p["n"])
    rows = [(c.policy.kappa, c.policy.n, c.estimate.mean, c.estimate.std_error) + c.estimate.components
            for c in cells]
    return header, rows


def _optimize(p):
    header = ["c_s", "c_c", "kappa_star", "n_star", "rho_eff", "alpha_eff", "mean", "std_error"]
    cfg = _sim_config(p, p["dim"])
    rows = []
    for costs in _cells(p, _cost_grid(p), "optimize"):
        lambda_s, lambda_c = costs.lambdas(cfg.dim)
        policy, estimate = optimize_policy(lambda_s, lambda_c, cfg)
        rows.append((costs.c_s, costs.c_c, policy.kappa, policy.n, rho_from_kappa(policy.kappa, cfg.dim),
                     math.log(policy.n) / cfg.dim, estimate.mean, estimate.std_error))
    return header, rows


def _finite_sweep(p):
    header = ["d", "c_s", "c_c", "kappa_star", "n_star", "rho_eff", "alpha_eff", "mean", "std_error"]
    cfg = _sim_config(p, p["dims"][0])
    rows = [(r.d, r.c_s, r.c_c, r.policy.kappa, r.policy.n, r.rho_eff, r.alpha_eff, r.estimate.mean,
             r.estimate.std_error) for r in finite_sweep(p["c_s"], p["c_c"], p["dims"], cfg)]
    return header, rows


def _gap_sweep(p):
    header = ["d", "mode", "kappa_opt", "n_opt", "p_opt", "p_opt_se", "kappa_asym", "n_asym", "p_asym",
              "p_asym_se", "gap", "asymptotic_value"]
    cfg = _sim_config(p, p["dims"][0])
    reports = convergence_sweep(ScaledCosts(p["c_s"], p["c_c"]), p["dims"], cfg, GapMode(p["mode"]))
    rows = [(r.d, r.mode.value, r.policy_opt.kappa, r.policy_opt.n, r.p_opt.mean, r.p_opt.std_error,
             r.policy_asym.kappa, r.policy_asym.n, r.p_asym.mean, r.p_asym.std_error, r.gap, r.asymptotic_value)
            for r in reports]
    return header, rows


def _weighted(p):
    header = ["subspace", "weight", "c_s", "c_c", "rho_star", "alpha_star", "value", "regime", "kappa", "n"]
    if p["simulate"]:
        header += ["mc_mean", "mc_std_error"]
    mu, dims = p["mu"], (p["d1"], p["d2"])
    costs1 = ScaledCosts(dims[0] * p["lambda_s"], dims[0] * p["lambda_1c"])
    costs2 = ScaledCosts(dims[1] * p["lambda_s"], dims[1] * p["lambda_2c"])
    solution = weighted_solve(mu, dims[0], dims[1], costs1, costs2)
    weights = (mu * mu, 1.0 - mu * mu)
    mapped = [map_to_finite(sol.policy, d) for sol, d in zip(solution, dims)]

    rows = []
    for k, (sol, d, policy) in enumerate(zip(solution, dims, mapped)):
        # subproblem costs as the solver saw them, scaled by the subspace weight
        scaled = ((costs1, costs2)[k].c_s / weights[k], (costs1, costs2)[k].c_c / weights[k])
        rows.append((str(k + 1), weights[k]) + scaled + (sol.policy.rho, sol.policy.alpha, sol.value,
                                                          sol.regime.value, policy.kappa, policy.n))
    combined = ("combined", 1.0, math.nan, math.nan, math.nan, math.nan, solution.combined_value, "",
                math.nan, math.nan)
    if p["simulate"]:
        cfg = _sim_config(p, dims[0])
        estimate = weighted_payoff(mu, (mapped[0].kappa, mapped[1].kappa), (mapped[0].n, mapped[1].n),
                                   (p["lambda_s"], p["lambda_1c"], p["lambda_2c"]), dims, cfg)
        rows = [row + (part.mean, part.std_error) for row, part in zip(rows, estimate.parts)]
        combined += (estimate.mean, estimate.std_error)
    rows.append(combined)
    return header, rows


def _switching(p):
    table = emit_switching_curve(p["c_s"], SwitchingMode(p["mode"]), progress=p.get("progress", False))
    return table.header, table.rows


_DISPATCH = {
    ExperimentKind.ASYMPTOTIC_SOLVE: _asymptotic_solve,
    ExperimentKind.ASYMPTOTIC_HEATMAP: _heatmap,
    ExperimentKind.TILTED_SOLVE: _tilted_solve,
    ExperimentKind.TILTED_COMPARE: _tilted_compare,
    ExperimentKind.FINITE_SWEEP: _finite_sweep,
    ExperimentKind.GAP_SWEEP: _gap_sweep,
    ExperimentKind.WEIGHTED_SOLVE: _weighted,
    ExperimentKind.SIMULATE: _simulate,
    ExperimentKind.OPTIMIZE: _optimize,
    ExperimentKind.SWITCHING_CURVE: _switching,
}


def run(config: ExperimentConfig) -> ResultTable:
    """Validate, dispatch and wrap the rows with a metadata echo of the typed config."""
    typed = config.validate()
    logger.info("running %s with %s", typed.kind.value, typed.parameters)
    header, rows = _DISPATCH[typed.kind](typed.parameters)
    return ResultTable(header=header, rows=rows, metadata=_metadata(typed))


def emit_switching_curve(c_s_grid: Sequence[float], mode: SwitchingMode = SwitchingMode.POSTERIOR,
                         progress: bool = False) -> ResultTable:
    """c_c threshold below which communication is used, per c_s.

    Tilted recommendations switch exactly on the line c_c = c_s.
    """
    grid = [float(c) for c in c_s_grid]
    _check(len(grid) > 0 and all(0.0 < c < math.inf for c in grid), "c_s", "grid must be positive")
    _check(grid == sorted(grid), "c_s", "grid must be sorted")
    rows = []
    for c_s in tqdm(grid, desc="switching", disable=not progress):
        if mode is SwitchingMode.TILTED:
            rows.append((c_s, c_s, True, mode.value))
        else:
            result = switching_threshold(c_s)
            rows.append((c_s, result.threshold, result.bracketed, mode.value))
    config = ExperimentConfig(ExperimentKind.SWITCHING_CURVE, {"c_s": grid, "mode": mode.value})
    return ResultTable(header=["c_s", "threshold", "bracketed", "mode"], rows=rows, metadata=_metadata(config))
