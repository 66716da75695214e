"""YAML experiment configs and the built-in presets.

Schema (every ExperimentConfig field is addressable)::

    name: demo
    distribution: {preset: uniform, dim: 2}      # or {type: boxsum, dim, summands, width, invariant_tail, fold}
    group: {kind: continuous_shift, dim: 2, axes: [0]}
    metric: {kind: mmd, param: 1.0}              # sobolev|mmd|l2|linf|w1_upper
    n_grid: [64, 256, 1024]                      # or {start: 64, factor: 4, count: 3}
    repetitions: 500
    master_seed: 7
    slice: {m_max: 40}                           # or {lambda_max: ...} or {auto: true, margin: 1}
    burn_in: 0
    workers: 1
    output_dir: out
    estimators:
      - name: invariant
        kind: invariant                          # empirical|invariant|truncated_invariant|heat_smoothed|augmented
        group: {...}                             # defaults to the experiment group
        distribution: {...}                      # optional per-curve override
        cutoff: rule_of_thumb                    # or an eigenvalue
        s: measured                              # or a number
        alpha: 1.0                               # defaults to the Sobolev metric parameter
        sobolev_norm_sq: slice_head              # or a number
        sigma: rule_of_thumb                     # or a number
        predicted_slope: auto                    # or a number

Axes are 0-based.  ``s: measured`` reads the Sobolev exponent off the
coefficient tail; ``sobolev_norm_sq: slice_head`` sums lambda^s c^2 over the
slice, which stays finite when s sits at the regularity threshold.
"""
from __future__ import annotations

import os

import yaml

from . import distributions
from .errors import ConfigError
from .estimators import EstimatorSpec
from .groups import GroupAction, quotient_dim
from .harness import CurveSpec, ExperimentConfig, MetricSpec, head_sobolev_norm_sq, predicted_exponent
from .spectrum import FOUR_PI_SQ, enumerate_spectrum, max_square_norm

ENV_OUTPUT_DIR = "SPECTRAL_INVARIANCE_OUTPUT_DIR"
ENV_THREADS = "SPECTRAL_INVARIANCE_THREADS"


def _n_grid(spec) -> tuple[int, ...]:
    if isinstance(spec, dict):
        try:
            start, factor, count = int(spec["start"]), float(spec.get("factor", 2)), int(spec["count"])
        except KeyError as exc:
            raise ConfigError(f"n_grid mapping needs {exc.args[0]!r}") from None
        return tuple(int(round(start * factor ** k)) for k in range(count))
    return tuple(int(n) for n in spec)


def _group(data, dim: int | None = None) -> GroupAction:
    if data is None:
        if dim is None:
            raise ConfigError("group is required")
        return GroupAction.trivial(dim)
    try:
        return GroupAction.from_dict(data)
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad group action {data!r}: {exc}") from None


def _distribution(data):
    try:
        return distributions.from_dict(data)
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad distribution {data!r}: {exc}") from None


def _slice_m_max(data, estimators: list[dict], n_max: int, metric: MetricSpec) -> int:
    if "m_max" in data:
        return int(data["m_max"])
    if "lambda_max" in data:
        return max_square_norm(float(data["lambda_max"]))
    if data.get("auto"):
        cutoffs = [e.resolve_cutoff(n_max) for e in estimators if e.kind == "truncated_invariant"]
        if not cutoffs:
            raise ConfigError("slice auto needs a truncated_invariant estimator")
        return max_square_norm(max(cutoffs)) + int(data.get("margin", 1))
    raise ConfigError("slice needs m_max, lambda_max or auto")


def build(raw: dict) -> ExperimentConfig:
    """Turn a parsed YAML mapping into a validated ExperimentConfig."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    known = {"name", "distribution", "group", "metric", "n_grid", "repetitions", "master_seed", "slice",
             "burn_in", "workers", "output_dir", "estimators"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("distribution", "group", "metric", "n_grid", "estimators"):
        if key not in raw:
            raise ConfigError(f"missing config key {key!r}")
    dist = _distribution(raw["distribution"])
    group = _group(raw["group"])
    m = raw["metric"]
    metric = MetricSpec(m["kind"], None if m.get("param") is None else float(m["param"]))
    n_grid = _n_grid(raw["n_grid"])

    # resolve measured quantities against the (possibly auto-sized) slice in two passes
    entries = raw["estimators"]
    if not entries:
        raise ConfigError("estimators must be a nonempty list")
    slice_spec = raw.get("slice", {"auto": True})
    norm_cache = {}
    for e in entries:
        if e.get("sobolev_norm_sq") == "slice_head" and "m_max" not in slice_spec and "lambda_max" not in slice_spec:
            raise ConfigError("sobolev_norm_sq: slice_head needs an explicit slice size")
    m_max = None
    if "m_max" in slice_spec or "lambda_max" in slice_spec:
        m_max = _slice_m_max(slice_spec, [], n_grid[-1], metric)
    curves, specs = [], []
    for e in entries:
        curve, spec = _curve(e, dist, group, metric, m_max, norm_cache)
        curves.append(curve)
        specs.append(spec)
    if m_max is None:
        m_max = _slice_m_max(slice_spec, specs, n_grid[-1], metric)
    output_dir = os.environ.get(ENV_OUTPUT_DIR) or raw.get("output_dir", ".")
    workers = int(os.environ.get(ENV_THREADS) or raw.get("workers", 1))
    return ExperimentConfig(
        name=str(raw.get("name", "experiment")),
        distribution=dist,
        group=group,
        curves=tuple(curves),
        metric=metric,
        n_grid=n_grid,
        repetitions=int(raw.get("repetitions", 20)),
        master_seed=int(raw.get("master_seed", 0)),
        slice_m_max=m_max,
        burn_in=int(raw.get("burn_in", 0)),
        workers=workers,
        output_dir=str(output_dir),
    )


def _curve(e: dict, dist, group: GroupAction, metric: MetricSpec, m_max: int | None, cache: dict):
    if "kind" not in e:
        raise ConfigError("each estimator needs a kind")
    kind = e["kind"]
    g = _group(e["group"]) if "group" in e else group
    oracle = _distribution(e["distribution"]) if "distribution" in e else None
    target = oracle or dist
    s = e.get("s")
    if s == "measured":
        s = distributions.effective_regularity(target)
    alpha = e.get("alpha", metric.param if metric.kind == "sobolev" else 1.0 if metric.kind == "w1_upper" else 0.0)
    norm_sq = e.get("sobolev_norm_sq")
    if norm_sq == "slice_head":
        key = (id(target), m_max, s)
        if key not in cache:
            cache[key] = head_sobolev_norm_sq(target, enumerate_spectrum(g.dim, FOUR_PI_SQ * m_max), float(s))
        norm_sq = cache[key]
    try:
        spec = EstimatorSpec(
            kind, g,
            cutoff=_number_or_policy(e.get("cutoff")),
            sigma=_number_or_policy(e.get("sigma")),
            s=None if s is None else float(s),
            alpha=None if alpha is None else float(alpha),
            sobolev_norm_sq=None if norm_sq is None else float(norm_sq),
        )
    except ValueError as exc:
        raise ConfigError(f"estimator {e.get('name', kind)}: {exc}") from None
    predicted = e.get("predicted_slope")
    if predicted == "auto":
        if s is None:
            raise ConfigError("predicted_slope: auto needs s")
        predicted = -predicted_exponent(metric, float(s), quotient_dim(g))
    return CurveSpec(str(e.get("name", kind)), spec, oracle, None if predicted is None else float(predicted)), spec


def _number_or_policy(v):
    if v is None or v == "rule_of_thumb":
        return v
    try:
        return float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a number or 'rule_of_thumb', got {v!r}") from None


def load(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return build(raw)


# ---- presets ---------------------------------------------------------------

FIG1_SLICE_M_MAX = 20
FIG1_FIXED_CUTOFF_M = 12


def fig1_raw(mode: str = "rule_of_thumb", repetitions: int = 20, n_grid=None, master_seed: int = 2024) -> dict:
    """Desk-scale fig1 experiment: T^6, circular shifts of the last two axes, D_1.

    ``mode="fixed"`` truncates the invariant curve at a fixed eigenvalue
    instead of the rule-of-thumb cutoff.
    """
    if mode not in ("rule_of_thumb", "fixed"):
        raise ConfigError(f"unknown fig1 mode {mode!r}")
    shift = {"kind": "continuous_shift", "dim": 6, "axes": [4, 5]}
    if mode == "fixed":
        truncated = {"cutoff": FOUR_PI_SQ * (FIG1_FIXED_CUTOFF_M + 0.5)}
    else:
        truncated = {"cutoff": "rule_of_thumb", "s": "measured", "sobolev_norm_sq": "slice_head"}
    return {
        "name": f"fig1-{mode}",
        "distribution": {"preset": "fig1-inv"},
        "group": shift,
        "metric": {"kind": "sobolev", "param": 1.0},
        "n_grid": list(n_grid or [64 * 2 ** k for k in range(8)]),
        "repetitions": repetitions,
        "master_seed": master_seed,
        "slice": {"m_max": FIG1_SLICE_M_MAX},
        "estimators": [
            {"name": "invariant-truncated", "kind": "truncated_invariant", **truncated},
            {"name": "augmented", "kind": "augmented"},
            {"name": "non-invariant", "kind": "empirical", "group": {"kind": "trivial", "dim": 6},
             "distribution": {"preset": "fig1-noninv"}},
        ],
    }


PRESETS = {
    "fig1": lambda **kw: fig1_raw("rule_of_thumb", **kw),
    "fig1-fixed": lambda **kw: fig1_raw("fixed", **kw),
    "mmd-rate": lambda **kw: {
        "name": "mmd-rate",
        "distribution": {"preset": "uniform", "dim": 2},
        "group": {"kind": "continuous_shift", "dim": 2, "axes": [0]},
        "metric": {"kind": "mmd", "param": 1.0},
        "n_grid": [64, 256, 1024],
        "repetitions": 500,
        "master_seed": 11,
        "slice": {"m_max": 40},
        "estimators": [{"name": "invariant", "kind": "invariant"}],
        **kw,
    },
    "sobolev-slope": lambda **kw: {
        "name": "sobolev-slope",
        "distribution": {"type": "boxsum", "dim": 3, "summands": 2, "width": 0.5},
        "group": {"kind": "trivial", "dim": 3},
        "metric": {"kind": "sobolev", "param": 1.0},
        "n_grid": {"start": 256, "factor": 2, "count": 9},
        "repetitions": 30,
        "master_seed": 5,
        "slice": {"m_max": 64},
        "estimators": [{"name": "truncated", "kind": "truncated_invariant", "cutoff": "rule_of_thumb",
                        "s": "measured", "sobolev_norm_sq": "slice_head", "predicted_slope": "auto"}],
        **kw,
    },
    "cyclic-gain": lambda **kw: {
        "name": "cyclic-gain",
        "distribution": {"type": "boxsum", "dim": 1, "summands": 4, "width": 0.5, "fold": 8},
        "group": {"kind": "cyclic_shift", "dim": 1, "axes": [0], "orders": [8]},
        "metric": {"kind": "l2"},
        "n_grid": [32, 128, 512, 2048],
        "repetitions": 200,
        "master_seed": 3,
        "slice": {"m_max": 4096},
        "estimators": [{"name": "invariant", "kind": "invariant"},
                       {"name": "empirical", "kind": "empirical", "group": {"kind": "trivial", "dim": 1}}],
        **kw,
    },
}
# same pair of estimators scored in a wide heat kernel, for the trace-ratio gain
PRESETS["cyclic-mmd"] = lambda **kw: PRESETS["cyclic-gain"](**{
    "name": "cyclic-mmd",
    "metric": {"kind": "mmd", "param": 0.01},
    "n_grid": [64, 256, 1024],
    "repetitions": 1000,
    **kw,
})


def preset_raw(preset_name: str, /, **overrides) -> dict:
    if preset_name not in PRESETS:
        raise ConfigError(f"unknown preset {preset_name!r}; choose from {sorted(PRESETS)}")
    return PRESETS[preset_name](**overrides)


def preset(preset_name: str, /, **overrides) -> ExperimentConfig:
    return build(preset_raw(preset_name, **overrides))


def dump(raw: dict) -> str:
    return yaml.safe_dump(raw, sort_keys=False)


__all__ = ["ENV_OUTPUT_DIR", "ENV_THREADS", "PRESETS", "build", "dump", "fig1_raw", "load", "preset",
           "preset_raw"]
