"""Command line entry point: spectrum, spectral, estimate, convergence, reproduce-fig1.

Exit codes: 0 success, 2 config error, 3 budget or regime error.
Environment: SPECTRAL_INVARIANCE_OUTPUT_DIR, SPECTRAL_INVARIANCE_THREADS.
"""
from __future__ import annotations

import csv
import functools
import os
import sys

import click

from . import config as cfgmod
from .errors import BudgetExceeded, ConfigError, NonConvergentTail, RegimeError
from .groups import GroupAction, weyl_count_invariant
from .spectrum import KIND_NAMES, enumerate_spectrum

EXIT_CONFIG = 2
EXIT_BUDGET = 3


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except (BudgetExceeded, RegimeError, NonConvergentTail) as exc:
            click.echo(f"{type(exc).__name__}: {exc}", err=True)
            sys.exit(EXIT_BUDGET)
    return wrapper


def _int_list(text: str | None) -> tuple[int, ...]:
    if not text:
        return ()
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from None


def _group(dim: int, kind: str, axes: str | None, orders: str | None) -> GroupAction:
    try:
        return GroupAction(kind, dim, _int_list(axes), _int_list(orders))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _writer():
    return csv.writer(sys.stdout, lineterminator="\n")


def _out_dir(option: str | None) -> str:
    return option or os.environ.get(cfgmod.ENV_OUTPUT_DIR) or "."


group_options = [
    click.option("--group", "group_kind", default="trivial",
                 type=click.Choice(["trivial", "continuous_shift", "cyclic_shift", "permutation"])),
    click.option("--axes", default=None, help="Comma-separated 0-based axes (cycle order for permutations)."),
    click.option("--orders", default=None, help="Comma-separated cyclic orders."),
]


def with_group(fn):
    for opt in reversed(group_options):
        fn = opt(fn)
    return fn


@click.group()
def main():
    """Invariance-aware spectral estimation on flat tori."""


@main.command()
@click.option("--dim", type=int, required=True)
@click.option("--lambda-max", type=float, required=True)
@click.option("--count", is_flag=True, help="Print only the Weyl count N(lambda; G).")
@with_group
@_guarded
def spectrum(dim, lambda_max, count, group_kind, axes, orders):
    """Enumerate basis elements (or count invariant modes) up to lambda-max."""
    g = _group(dim, group_kind, axes, orders)
    w = _writer()
    if count:
        w.writerow(["lambda_max", "group", "count"])
        w.writerow([repr(lambda_max), g.kind, weyl_count_invariant(g, lambda_max)])
        return
    from .groups import invariant_projector

    slc = enumerate_spectrum(dim, lambda_max)
    proj = invariant_projector(g, slc)
    diag = proj.matrix().diagonal() if proj.mask is None else proj.mask.astype(float)
    w.writerow(["kind"] + [f"freq_{j}" for j in range(dim)] + ["lambda", "invariant_weight"])
    for f, k, lam, inv in zip(slc.freqs, slc.kinds, slc.eigenvalues, diag):
        w.writerow([KIND_NAMES[k], *(int(x) for x in f), repr(float(lam)), repr(float(inv))])


@main.command()
@click.option("--dim", type=int, required=True)
@click.option("--alpha", type=float, multiple=True, help="Zeta exponents.")
@click.option("--beta", type=float, multiple=True, help="Heat parameters (theta and trace).")
@with_group
@_guarded
def spectral(dim, alpha, beta, group_kind, axes, orders):
    """Print Z(alpha; G), Theta_beta and tr(K_beta; G) as CSV."""
    from .quantities import theta, trace_heat, zeta

    g = _group(dim, group_kind, axes, orders)
    rows = []
    for a in alpha:
        r = zeta(g, a)
        rows.append(["zeta", repr(a), repr(r.value), r.method, repr(r.tail_bound)])
    for b in beta:
        rows.append(["theta", repr(b), repr(theta(b)), "series", repr(0.0)])
        r = trace_heat(g, b)
        rows.append(["trace_heat", repr(b), repr(r.value), r.method, repr(r.tail_bound)])
    w = _writer()
    w.writerow(["quantity", "param", "value", "method", "tail_bound"])
    w.writerows(rows)


def _load(config_path, preset):
    if bool(config_path) == bool(preset):
        raise ConfigError("give exactly one of CONFIG or --preset")
    return cfgmod.load(config_path) if config_path else cfgmod.preset(preset)


@main.command()
@click.argument("config_path", required=False)
@click.option("--preset", default=None, help=f"Built-in config: {', '.join(sorted(cfgmod.PRESETS))}.")
@click.option("--n", "n", type=int, required=True, help="Sample size.")
@click.option("--seed", type=int, default=0)
@click.option("--coefficients-out", type=click.Path(dir_okay=False), default=None,
              help="Write the first curve's coefficient field here as CSV.")
@_guarded
def estimate(config_path, preset, n, seed, coefficients_out):
    """One trial per estimator of the config: sample, estimate, score."""
    from .divergences import CSV_HEADER, SpectralKernel, linf_error, mmd_vs_oracle, sobolev_ipm_vs_oracle
    from .harness import _Context
    from .seeds import mix_seed

    config = _load(config_path, preset)
    ctx = _Context(config)
    w = _writer()
    w.writerow(["estimator", "n"] + CSV_HEADER)
    for i, curve in enumerate(config.curves):
        oracle = config.oracle_for(curve)
        samples = oracle.sample(n, mix_seed(seed, curve.name, n, 0))
        fld = curve.estimator.estimate(samples, ctx.slice, ctx.projectors.get(curve.name))
        m = config.metric
        if m.kind == "mmd":
            res = mmd_vs_oracle(fld, oracle, SpectralKernel.heat(m.param))
            row = res.to_row()
        elif m.kind == "linf":
            r = linf_error(fld, oracle, 8 * fld.slice.max_abs_freq + 1)
            row = ["linf", "", repr(r.value), repr(r.value), repr(r.value * r.slack)]
        else:
            alpha = {"l2": 0.0, "w1_upper": 1.0}.get(m.kind, m.param)
            row = sobolev_ipm_vs_oracle(fld, oracle, alpha).to_row()
            row[0] = m.kind
        w.writerow([curve.name, n] + row)
        if coefficients_out and i == 0:
            with open(coefficients_out, "w", encoding="utf-8", newline="") as fh:
                fld.to_csv(fh)


@main.command()
@click.argument("config_path", required=False)
@click.option("--preset", default=None, help=f"Built-in config: {', '.join(sorted(cfgmod.PRESETS))}.")
@click.option("--out", "out_dir", default=None, help="Output directory (default: config or env).")
@click.option("--workers", type=int, default=None)
@click.option("--no-plot", is_flag=True)
@_guarded
def convergence(config_path, preset, out_dir, workers, no_plot):
    """Full n-sweep: writes <name>.csv (and <name>.svg) to the output directory."""
    from .harness import curves_to_csv, run_convergence, write_csv

    config = _load(config_path, preset)
    out = out_dir or os.environ.get(cfgmod.ENV_OUTPUT_DIR) or config.output_dir
    curves = run_convergence(config, workers)
    stem = os.path.join(out, config.name)
    write_csv(curves_to_csv(curves), stem + ".csv")
    click.echo(stem + ".csv")
    if not no_plot:
        from .plotting import plot_curves

        click.echo(plot_curves(curves, stem + ".svg", title=config.name, ylabel=f"mean {config.metric.label}"))
    for c in curves:
        extra = "" if c.predicted_slope is None else f" (predicted {c.predicted_slope:.4f})"
        click.echo(f"{c.name}: slope {c.slope:.4f} +- {c.slope_stderr:.4f}{extra}", err=True)


@main.command("reproduce-fig1")
@click.option("--out", "out_dir", default=None)
@click.option("--mode", type=click.Choice(["rule_of_thumb", "fixed"]), default="rule_of_thumb")
@click.option("--repetitions", type=int, default=20)
@click.option("--seed", type=int, default=2024)
@click.option("--workers", type=int, default=None)
@_guarded
def reproduce_fig1_cmd(out_dir, mode, repetitions, seed, workers):
    """Desk-scale T^6 figure: CSV of curves plus a log-log SVG."""
    from .fig1 import reproduce_fig1

    res = reproduce_fig1(_out_dir(out_dir), mode=mode, repetitions=repetitions, master_seed=seed,
                         workers=workers)
    click.echo(res.csv_path)
    click.echo(res.svg_path)
    chk = res.checks
    click.echo(f"ordered at every n: {chk['ordered_every_n']}; 2SE separated from n=1024: "
               f"{chk['separated_from_n']}; slope spread {chk['slope_spread']:.3f}", err=True)


if __name__ == "__main__":
    main()
