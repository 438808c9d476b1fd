"""Monte Carlo experiment harness: empirical levels, power, calibration races.

An experiment is one (mode, n, p, dependence, c_star, levels, m-rules,
replicate count, seed) tuple, normally read from a flat ``key = value``
config file.  Replicates are pure functions of (config, replicate index,
master seed) with counter-keyed sub-seeds, so results are byte-identical
for any worker count; aggregation uses only order-independent counts.

Result rows follow the fixed CSV schema
``alpha,p,n,m_rule,c0,level,mode,a_hat,abs_err,n_reps,seed,config_hash``.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import ndtri

from .calibration import (
    build_curve_ergodic,
    build_curve_ne,
    decide,
    estimate_alpha_hurst,
    estimate_kappa_sq_plugin,
    subsample_size,
)
from .core import PelConfig, compute_column_stats, solve_pel
from .errors import ConfigError, PelhdError
from .simulate import DependenceSpec, generate

__all__ = [
    "ExperimentConfig",
    "run_level_experiment",
    "run_power_experiment",
    "run_calibration_compare",
    "run_experiment",
    "load_experiment_configs",
    "parse_flat_config",
    "rows_to_csv",
    "RESULT_COLUMNS",
]

RESULT_COLUMNS = (
    "alpha", "p", "n", "m_rule", "c0", "level", "mode",
    "a_hat", "abs_err", "n_reps", "seed", "config_hash",
)

MODES = ("level", "power", "calibration-compare")
M_RULES = ("ergodic", "ne-cuberoot", "ne-sqrt")

# Replicate failure fraction beyond which a result cell is invalidated.
MAX_CELL_FAILURE_RATE = 0.02


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment cell: a single (mode, n, p) with its m-rules and levels."""

    mode: str
    n: int
    p: int
    dependence: DependenceSpec
    c_star: float = 1.0
    levels: tuple[float, ...] = (0.05, 0.1)
    m_rules: tuple[tuple[str, float], ...] = (("ergodic", 1.0),)
    n_replicates: int = 500
    seed: int = 0
    mu1_scale: float = 1.0
    output_path: str | None = None
    threads: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.n < 2 or self.p < 2:
            raise ConfigError("need n >= 2 and p >= 2")
        if self.n_replicates < 1:
            raise ConfigError("n_replicates must be >= 1")
        if not self.levels:
            raise ConfigError("need at least one level")
        for a in self.levels:
            if not 0 < a < 1:
                raise ConfigError(f"levels must lie strictly in (0,1), got {a}")
        if not self.m_rules:
            raise ConfigError("need at least one m-rule")
        for rule, c0 in self.m_rules:
            if rule not in M_RULES:
                raise ConfigError(f"unknown m-rule {rule!r}")
            if c0 <= 0:
                raise ConfigError(f"m-rule constant must be positive, got {c0}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.mode == "calibration-compare":
            if self.dependence.decay_exponent <= 0.5:
                raise ConfigError(
                    "calibration-compare needs alpha > 1/2 (the Normal "
                    "calibration is undefined otherwise)")

    @property
    def is_ne(self) -> bool:
        return self.dependence.kind == "ne"

    def pel_config(self) -> PelConfig:
        return PelConfig(c_star=self.c_star)

    def subsample_sizes(self) -> tuple[int, ...]:
        alpha0 = min(self.dependence.decay_exponent, 0.5)
        return tuple(
            subsample_size(self.n, self.p, alpha0 if alpha0 > 0 else 0.5,
                           c0, rule)
            for rule, c0 in self.m_rules
        )

    def config_hash(self) -> str:
        """Hash of the scientific fields (output path and threads excluded)."""
        dep = self.dependence
        parts = [
            f"mode={self.mode}", f"n={self.n}", f"p={self.p}",
            f"kind={dep.kind}", f"alpha={dep.alpha}", f"ar={dep.ar}",
            f"ma={dep.ma}", f"burn_in={dep.burn_in}", f"sigma={dep.sigma}",
            f"c_star={self.c_star}", f"levels={self.levels}",
            f"m_rules={self.m_rules}", f"n_replicates={self.n_replicates}",
            f"seed={self.seed}", f"mu1_scale={self.mu1_scale}",
        ]
        digest = hashlib.sha256("\n".join(parts).encode()).hexdigest()
        return digest[:12]


def _replicate_seed(cfg: ExperimentConfig, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((cfg.seed, cfg.p, rep)))


def _mu1(cfg: ExperimentConfig) -> np.ndarray:
    """Alternative mean: first p/2 components at mu1_scale, the rest 0."""
    mu = np.zeros(cfg.p)
    mu[: cfg.p // 2] = cfg.mu1_scale
    return mu


def _replicate_decisions(cfg: ExperimentConfig, rep: int,
                         shift: np.ndarray | None) -> np.ndarray:
    """Rejection indicators for one replicate, shape (n_m_rules, n_levels).

    Failed cells are NaN.  The statistic and curve route follow the
    dependence regime: raw statistic against the NE curve, or the centered
    and p^(alpha_hat ^ 1/2)-scaled statistic against the ergodic curve
    with alpha_hat = 2 - 2*Hurst.
    """
    out = np.full((len(cfg.m_rules), len(cfg.levels)), np.nan)
    pel_cfg = cfg.pel_config()
    mu0 = np.zeros(cfg.p)
    try:
        x = generate(cfg.dependence, cfg.n, cfg.p, _replicate_seed(cfg, rep))
        if shift is not None:
            x = x + shift
        data = compute_column_stats(x)
        kn = solve_pel(data, mu0, pel_cfg).stat
        if cfg.is_ne:
            alpha_hat = 0.0
            statistic = kn
        else:
            alpha_hat = estimate_alpha_hurst(data)
            statistic = cfg.p ** min(alpha_hat, 0.5) * (kn - cfg.c_star)
    except PelhdError:
        return out
    for i, m in enumerate(cfg.subsample_sizes()):
        try:
            if cfg.is_ne:
                curve = build_curve_ne(data, mu0, m, pel_cfg)
            else:
                curve = build_curve_ergodic(data, mu0, m, alpha_hat, pel_cfg)
            for j, level in enumerate(cfg.levels):
                out[i, j] = float(decide(statistic, curve, level).rejected)
        except PelhdError:
            continue
    return out


def _replicate_compare(cfg: ExperimentConfig, rep: int) -> np.ndarray:
    """Subsampling and Normal-calibration decisions for one replicate.

    Rows: one per m-rule (subsampling), then one final row for the Normal
    route, which rejects iff sqrt(p) (K_n - c*) > kappa_hat z_(1-a) with
    kappa_hat^2 from the lag-autocorrelation plug-in.
    """
    out = np.full((len(cfg.m_rules) + 1, len(cfg.levels)), np.nan)
    pel_cfg = cfg.pel_config()
    mu0 = np.zeros(cfg.p)
    try:
        x = generate(cfg.dependence, cfg.n, cfg.p, _replicate_seed(cfg, rep))
        data = compute_column_stats(x)
        kn = solve_pel(data, mu0, pel_cfg).stat
        alpha_hat = estimate_alpha_hurst(data)
        statistic = cfg.p ** min(alpha_hat, 0.5) * (kn - cfg.c_star)
    except PelhdError:
        return out
    for i, m in enumerate(cfg.subsample_sizes()):
        try:
            curve = build_curve_ergodic(data, mu0, m, alpha_hat, pel_cfg)
            for j, level in enumerate(cfg.levels):
                out[i, j] = float(decide(statistic, curve, level).rejected)
        except PelhdError:
            continue
    try:
        kappa_hat = math.sqrt(estimate_kappa_sq_plugin(data, cfg.c_star))
        z = math.sqrt(cfg.p) * (kn - cfg.c_star)
        for j, level in enumerate(cfg.levels):
            out[-1, j] = float(z > kappa_hat * ndtri(1.0 - level))
    except PelhdError:
        pass
    return out


def _replicate_task(args):
    cfg, rep, kind = args
    if kind == "compare":
        return rep, _replicate_compare(cfg, rep)
    shift = _mu1(cfg) if kind == "power" else None
    return rep, _replicate_decisions(cfg, rep, shift)


def _run_replicates(cfg: ExperimentConfig, kind: str) -> np.ndarray:
    """All replicates, stacked (n_replicates, n_rows, n_levels), order fixed."""
    tasks = [(cfg, rep, kind) for rep in range(cfg.n_replicates)]
    n_rows = len(cfg.m_rules) + (1 if kind == "compare" else 0)
    stacked = np.full((cfg.n_replicates, n_rows, len(cfg.levels)), np.nan)
    if cfg.threads == 1:
        results = map(_replicate_task, tasks)
    else:
        pool = ProcessPoolExecutor(max_workers=cfg.threads)
        results = pool.map(_replicate_task, tasks, chunksize=8)
    for rep, arr in results:
        stacked[rep] = arr
    if cfg.threads > 1:
        pool.shutdown()
    return stacked


def _aggregate(cfg: ExperimentConfig, stacked: np.ndarray,
               row_labels: list[tuple[str, float]]) -> list[dict]:
    rows = []
    chash = cfg.config_hash()
    for i, (rule, c0) in enumerate(row_labels):
        for j, level in enumerate(cfg.levels):
            cell = stacked[:, i, j]
            ok = ~np.isnan(cell)
            n_ok = int(ok.sum())
            fail_rate = 1.0 - n_ok / cfg.n_replicates
            if fail_rate > MAX_CELL_FAILURE_RATE or n_ok == 0:
                a_hat = math.nan
                abs_err = math.nan
            else:
                a_hat = float(cell[ok].mean())
                abs_err = abs(level - a_hat)
            rows.append({
                "alpha": cfg.dependence.decay_exponent,
                "p": cfg.p, "n": cfg.n,
                "m_rule": rule, "c0": c0, "level": level,
                "mode": cfg.mode, "a_hat": a_hat, "abs_err": abs_err,
                "n_reps": n_ok, "seed": cfg.seed, "config_hash": chash,
            })
    return rows


def run_level_experiment(cfg: ExperimentConfig) -> list[dict]:
    """Empirical rejection rates under the null, one row per (m-rule, level)."""
    if cfg.mode != "level":
        raise ConfigError(f"expected mode 'level', got {cfg.mode!r}")
    stacked = _run_replicates(cfg, "level")
    return _aggregate(cfg, stacked, list(cfg.m_rules))


def run_power_experiment(cfg: ExperimentConfig) -> list[dict]:
    """Empirical power against the half-shifted alternative.

    Null data are shifted by mu1 and tested against H0: mu = 0; a_hat is
    the rejection rate (the power).
    """
    if cfg.mode != "power":
        raise ConfigError(f"expected mode 'power', got {cfg.mode!r}")
    stacked = _run_replicates(cfg, "power")
    return _aggregate(cfg, stacked, list(cfg.m_rules))


def run_calibration_compare(cfg: ExperimentConfig) -> list[dict]:
    """Side-by-side subsampling (per m-rule) and Normal calibration levels."""
    if cfg.mode != "calibration-compare":
        raise ConfigError(
            f"expected mode 'calibration-compare', got {cfg.mode!r}")
    stacked = _run_replicates(cfg, "compare")
    labels = list(cfg.m_rules) + [("normal", 0.0)]
    return _aggregate(cfg, stacked, labels)


def run_experiment(cfg: ExperimentConfig) -> list[dict]:
    if cfg.mode == "level":
        return run_level_experiment(cfg)
    if cfg.mode == "power":
        return run_power_experiment(cfg)
    return run_calibration_compare(cfg)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows: list[dict]) -> str:
    lines = [",".join(RESULT_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in RESULT_COLUMNS))
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Flat key = value config files
# --------------------------------------------------------------------------

_KNOWN_KEYS = {
    "mode", "dependence", "alpha", "ar", "ma", "burn_in", "n", "p",
    "c_star", "levels", "m_rules", "n_replicates", "seed", "mu1_scale",
    "out",
}


def parse_flat_config(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; '#' starts a comment, blank lines skipped."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip().lower()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def _floats(value: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in value.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {value!r}") from exc


def _dependence_from(mapping: dict[str, str]) -> DependenceSpec:
    kind = mapping.get("dependence", "").lower()
    try:
        if kind == "ne":
            return DependenceSpec.non_ergodic()
        if kind == "lrd":
            if "alpha" not in mapping:
                raise ConfigError("lrd dependence requires 'alpha'")
            return DependenceSpec.long_range(float(mapping["alpha"]))
        if kind == "srd":
            ar = _floats(mapping["ar"]) if "ar" in mapping else None
            ma = _floats(mapping["ma"]) if "ma" in mapping else None
            kwargs = {}
            if ar is not None:
                kwargs["ar"] = ar
            if ma is not None:
                kwargs["ma"] = ma
            if "burn_in" in mapping:
                kwargs["burn_in"] = int(mapping["burn_in"])
            return DependenceSpec.short_range_arma(**kwargs)
    except PelhdError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(
        f"dependence must be ne, lrd or srd, got {mapping.get('dependence')!r}")


def _m_rules_from(value: str) -> tuple[tuple[str, float], ...]:
    rules = []
    for item in value.split(","):
        item = item.strip()
        if not item:
            continue
        if ":" not in item:
            raise ConfigError(f"m-rule must look like 'ergodic:1', got {item!r}")
        rule, c0 = item.split(":", 1)
        try:
            rules.append((rule.strip(), float(c0)))
        except ValueError as exc:
            raise ConfigError(f"bad m-rule constant in {item!r}") from exc
    return tuple(rules)


def load_experiment_configs(text: str) -> list[ExperimentConfig]:
    """Expand a flat config into one ExperimentConfig per requested p."""
    mapping = parse_flat_config(text)
    for key in ("mode", "n", "p", "n_replicates", "seed"):
        if key not in mapping:
            raise ConfigError(f"missing required config key {key!r}")
    dep = _dependence_from(mapping)
    try:
        n = int(mapping["n"])
        ps = [int(float(v)) for v in mapping["p"].split(",") if v.strip()]
        n_replicates = int(mapping["n_replicates"])
        seed = int(mapping["seed"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    levels = _floats(mapping["levels"]) if "levels" in mapping else (0.05, 0.1)
    if "m_rules" in mapping:
        m_rules = _m_rules_from(mapping["m_rules"])
    elif dep.kind == "ne":
        m_rules = (("ne-cuberoot", 1.0), ("ne-sqrt", 1.0), ("ne-sqrt", 2.0))
    else:
        m_rules = (("ergodic", 0.5), ("ergodic", 1.0), ("ergodic", 2.0))
    return [
        ExperimentConfig(
            mode=mapping["mode"].lower(), n=n, p=p, dependence=dep,
            c_star=float(mapping.get("c_star", 1.0)),
            levels=levels, m_rules=m_rules, n_replicates=n_replicates,
            seed=seed, mu1_scale=float(mapping.get("mu1_scale", 1.0)),
            output_path=mapping.get("out"),
        )
        for p in ps
    ]
